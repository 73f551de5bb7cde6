//! Continuous linear programming.

mod model;
mod mps;
mod simplex;

use thiserror::Error;

pub use model::{Constraint, LinearProgram, Relation};
pub use mps::write_fixed_mps;

use simplex::Simplex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable x{var} has invalid bounds [{lower}, {upper}]")]
    InvalidBounds { var: usize, lower: f64, upper: f64 },
    #[error("row {row} references unknown variable x{var}")]
    UnknownVariable { row: usize, var: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

/// Simplex tolerances and limits.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexConfig {
    /// Absolute bound and row violation accepted as feasible.
    pub feasibility_tol: f64,
    /// Reduced-cost magnitude below which a column is not priced in.
    pub optimality_tol: f64,
    /// Smallest pivot element accepted by the ratio test.
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Pivots between fresh inversions of the basis.
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_threshold: usize,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        SimplexConfig {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            pivot_tol: 1e-9,
            max_iterations: 50_000,
            refactor_interval: 100,
            stall_threshold: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub iterations: usize,
    pub phase_one_iterations: usize,
    pub refactorizations: usize,
    pub bland_pivots: usize,
    /// Warm-start hints that had to be discarded.
    pub cold_fallbacks: usize,
}

/// Position of a structural or logical variable relative to the basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Zero,
}

/// A simplex basis over structural variables followed by one logical per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    pub(crate) states: Vec<VarState>,
    pub(crate) header: Vec<usize>,
}

impl Basis {
    pub fn new(states: Vec<VarState>, header: Vec<usize>) -> Self {
        Basis { states, header }
    }

    pub fn states(&self) -> &[VarState] {
        &self.states
    }

    /// Basic variable for each row position.
    pub fn header(&self) -> &[usize] {
        &self.header
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal objective; `+inf` when infeasible and `-inf` when unbounded.
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Row duals `d objective / d rhs`, present when optimal.
    pub dual: Option<Vec<f64>>,
    /// Structural reduced costs, present when optimal.
    pub reduced_costs: Option<Vec<f64>>,
    pub basis: Option<Basis>,
    pub stats: SolveStats,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Objective of the bounded dual built from the row duals and reduced costs.
    ///
    /// Equals the primal objective at an optimal basis up to round-off.
    pub fn dual_objective(&self, lp: &LinearProgram) -> Option<f64> {
        let y = self.dual.as_ref()?;
        let d = self.reduced_costs.as_ref()?;
        let rows: f64 = lp.constraints().iter().zip(y).map(|(c, yi)| c.rhs * yi).sum();
        let cols: f64 = d
            .iter()
            .enumerate()
            .map(|(j, &dj)| {
                if dj > 0.0 {
                    dj * lp.lower()[j]
                } else if dj < 0.0 {
                    dj * lp.upper()[j]
                } else {
                    0.0
                }
            })
            .sum();
        Some(rows + cols)
    }
}

/// Solves `lp` from the all-logical basis.
pub fn solve_lp(lp: &LinearProgram, config: &SimplexConfig) -> Result<LpSolution, LpError> {
    lp.check()?;
    let mut engine = Simplex::new(lp, config);
    engine.cold_start();
    let status = engine.run();
    Ok(engine.into_solution(lp, status))
}

/// Solves `lp` starting from `hint`, usually the optimal basis of a closely
/// related problem. A hint that does not fit the problem, or that is singular,
/// is discarded in favour of a cold start and counted in
/// [`SolveStats::cold_fallbacks`].
pub fn solve_lp_warm(
    lp: &LinearProgram,
    hint: &Basis,
    config: &SimplexConfig,
) -> Result<LpSolution, LpError> {
    lp.check()?;
    let mut engine = Simplex::new(lp, config);
    if !engine.warm_start(hint) {
        engine.stats_mut().cold_fallbacks += 1;
        engine.cold_start();
    }
    let status = engine.run();
    Ok(engine.into_solution(lp, status))
}
