//! Self-contained linear and mixed-binary programming.
//!
//! [`lp`] holds a bounded-variable revised simplex over dense basis inverses,
//! sized for problems with a few hundred rows. [`mip`] layers a
//! branch-and-bound search over binary variables on top of it, with relative
//! gap, wall-clock and node-count termination.

pub mod lp;
pub mod mip;

pub use lp::{
    solve_lp, solve_lp_warm, Basis, Constraint, LinearProgram, LpError, LpSolution, LpStatus,
    Relation, SimplexConfig, SolveStats, VarState,
};
pub use mip::{
    solve_mip, BranchingRule, MipConfig, MipError, MipSolution, MipStatus, MixedIntegerProgram,
    NodeDecision, NodeRecord, NodeSelection,
};
