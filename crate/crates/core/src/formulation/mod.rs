//! DC dispatch LP for a fixed topology and the big-M switching MIP.

mod bigm;
mod ots;

use std::fmt;

use ots_solver::{solve_lp, LinearProgram, LpError, LpStatus, MipError, Relation, SimplexConfig};
use thiserror::Error;

use crate::grid::{BusId, Network};

pub use bigm::{historic_angle_bigm, shortest_path_bigm, BigMBounds, BoundsKind, MBound};
pub use ots::{build_ots_mip, OtsModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulationError {
    #[error("demand vector has {got} entries, network has {expected} buses")]
    DemandLength { expected: usize, got: usize },
    #[error("status vector has {got} entries, network has {expected} switchable lines")]
    StatusLength { expected: usize, got: usize },
    #[error("switchable line {0} is not fixed and has no big-M bound")]
    MissingBound(u32),
    #[error("no path between buses {from} and {to} over the closed lines")]
    Disconnected { from: BusId, to: BusId },
    #[error("switchable index {0} out of range")]
    UnknownSwitchable(usize),
    #[error("dispatch LP stopped at the iteration limit")]
    LpIterationLimit,
    #[error("dispatch LP is unbounded")]
    Unbounded,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Mip(#[from] MipError),
}

/// Optimal dispatch cost of a topology. Infeasibility is its own value so it
/// never leaks into arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum Cost {
    Finite(f64),
    Infinite,
}

impl Cost {
    pub fn is_finite(self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Cost::Finite(v) => Some(v),
            Cost::Infinite => None,
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Infinite => f.write_str("inf"),
        }
    }
}

/// Column positions shared by the dispatch LP and the switching MIP:
/// generation, then bus angles, then line flows, then switch statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarLayout {
    pub generators: usize,
    pub buses: usize,
    pub lines: usize,
    pub switchable: usize,
}

impl VarLayout {
    pub fn of(net: &Network) -> Self {
        VarLayout {
            generators: net.generators().len(),
            buses: net.num_buses(),
            lines: net.lines().len(),
            switchable: net.num_switchable(),
        }
    }

    pub fn generation(&self, g: usize) -> usize {
        g
    }

    pub fn angle(&self, bus: usize) -> usize {
        self.generators + bus
    }

    pub fn flow(&self, line: usize) -> usize {
        self.generators + self.buses + line
    }

    pub fn status(&self, k: usize) -> usize {
        self.generators + self.buses + self.lines + k
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispatchSolution {
    /// MW per generator.
    pub generation: Vec<f64>,
    /// Radians per bus, slack at zero.
    pub angles: Vec<f64>,
    /// MW per line, positive from `from_bus` to `to_bus`.
    pub flows: Vec<f64>,
    /// Closed flag per switchable line.
    pub statuses: Vec<bool>,
    pub cost: f64,
}

impl DispatchSolution {
    pub(crate) fn from_point(net: &Network, layout: &VarLayout, x: &[f64], statuses: Vec<bool>, cost: f64) -> Self {
        DispatchSolution {
            generation: (0..layout.generators).map(|g| x[layout.generation(g)]).collect(),
            angles: (0..layout.buses).map(|n| x[layout.angle(n)]).collect(),
            flows: (0..layout.lines).map(|l| x[layout.flow(l)]).collect(),
            statuses,
            cost,
        }
        .clean(net)
    }

    // Pins the slack angle to an exact zero after round-off.
    fn clean(mut self, net: &Network) -> Self {
        if let Some(s) = net.slack_index() {
            self.angles[s] = 0.0;
        }
        self
    }

    /// Largest nodal balance mismatch in MW.
    pub fn balance_residual(&self, net: &Network, demand: &[f64]) -> f64 {
        let mut net_out: Vec<f64> = demand.to_vec();
        for (g, gen) in net.generators().iter().enumerate() {
            net_out[net.bus_index(gen.bus).expect("validated")] -= self.generation[g];
        }
        for (l, line) in net.lines().iter().enumerate() {
            let (a, b) = net.endpoints(line);
            net_out[a] += self.flows[l];
            net_out[b] -= self.flows[l];
        }
        net_out.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn check_dims(net: &Network, demand: &[f64], statuses: Option<&[bool]>) -> Result<(), FormulationError> {
    if demand.len() != net.num_buses() {
        return Err(FormulationError::DemandLength {
            expected: net.num_buses(),
            got: demand.len(),
        });
    }
    if let Some(s) = statuses {
        if s.len() != net.num_switchable() {
            return Err(FormulationError::StatusLength {
                expected: net.num_switchable(),
                got: s.len(),
            });
        }
    }
    Ok(())
}

/// Adds one balance row per bus: flow out minus flow in minus local
/// generation equals minus the local demand.
pub(crate) fn add_balance_rows(lp: &mut LinearProgram, net: &Network, layout: &VarLayout, demand: &[f64]) {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); net.num_buses()];
    for (g, gen) in net.generators().iter().enumerate() {
        rows[net.bus_index(gen.bus).expect("validated")].push((layout.generation(g), -1.0));
    }
    for (l, line) in net.lines().iter().enumerate() {
        let (a, b) = net.endpoints(line);
        rows[a].push((layout.flow(l), 1.0));
        rows[b].push((layout.flow(l), -1.0));
    }
    for (n, row) in rows.into_iter().enumerate() {
        lp.add_constraint(row, Relation::Eq, -demand[n]);
    }
}

/// Adds generation, angle and flow columns with their natural bounds.
pub(crate) fn add_columns(lp: &mut LinearProgram, net: &Network) {
    for g in net.generators() {
        lp.add_var(g.cost, g.pmin, g.pmax);
    }
    let slack = net.slack_index();
    for n in 0..net.num_buses() {
        if Some(n) == slack {
            lp.add_var(0.0, 0.0, 0.0);
        } else {
            lp.add_var(0.0, f64::NEG_INFINITY, f64::INFINITY);
        }
    }
    for line in net.lines() {
        lp.add_var(0.0, -line.capacity, line.capacity);
    }
}

/// `flow - b (angle_from - angle_to)` as row coefficients.
pub(crate) fn flow_angle_terms(net: &Network, layout: &VarLayout, l: usize) -> [(usize, f64); 3] {
    let line = &net.lines()[l];
    let (a, b) = net.endpoints(line);
    let susceptance = net.susceptance_mw(line);
    [
        (layout.flow(l), 1.0),
        (layout.angle(a), -susceptance),
        (layout.angle(b), susceptance),
    ]
}

/// The dispatch LP for a fixed topology. Open lines carry zero flow and
/// impose no angle coupling.
pub fn build_opf_lp(net: &Network, demand: &[f64], statuses: &[bool]) -> Result<LinearProgram, FormulationError> {
    check_dims(net, demand, Some(statuses))?;
    let layout = VarLayout::of(net);
    let mut lp = LinearProgram::new();
    add_columns(&mut lp, net);
    add_balance_rows(&mut lp, net, &layout, demand);
    let mut closed = vec![true; net.lines().len()];
    for (k, &on) in statuses.iter().enumerate() {
        closed[net.switchable()[k]] = on;
    }
    for (l, &on) in closed.iter().enumerate() {
        if on {
            lp.add_constraint(flow_angle_terms(net, &layout, l), Relation::Eq, 0.0);
        } else {
            lp.set_bounds(layout.flow(l), 0.0, 0.0);
        }
    }
    Ok(lp)
}

/// Solves the dispatch LP; `None` when the topology cannot serve the demand.
pub fn solve_dispatch(
    net: &Network,
    demand: &[f64],
    statuses: &[bool],
    config: &SimplexConfig,
) -> Result<Option<DispatchSolution>, FormulationError> {
    let lp = build_opf_lp(net, demand, statuses)?;
    let sol = solve_lp(&lp, config)?;
    match sol.status {
        LpStatus::Optimal => Ok(Some(DispatchSolution::from_point(
            net,
            &VarLayout::of(net),
            &sol.primal,
            statuses.to_vec(),
            sol.objective,
        ))),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(FormulationError::Unbounded),
        LpStatus::IterationLimit => Err(FormulationError::LpIterationLimit),
    }
}

/// Optimal dispatch cost of a topology, or [`Cost::Infinite`].
pub fn evaluate_cost(
    net: &Network,
    demand: &[f64],
    statuses: &[bool],
    config: &SimplexConfig,
) -> Result<Cost, FormulationError> {
    Ok(match solve_dispatch(net, demand, statuses, config)? {
        Some(d) => Cost::Finite(d.cost),
        None => Cost::Infinite,
    })
}
