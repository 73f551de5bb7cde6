//! Exhaustive search over every switching topology.
//!
//! The dispatch LP is built once with a flow-equation slack per line: a
//! closed line pins the slack to zero, an open line frees the slack and pins
//! the flow. Topologies then differ only in bounds and are visited in Gray
//! code order, so each LP warm-starts from its neighbour's basis.

use ots_solver::{solve_lp, solve_lp_warm, Basis, LinearProgram, LpStatus, Relation, SimplexConfig};

use super::BenchError;
use crate::formulation::{add_balance_rows, add_columns, Cost, DispatchSolution, FormulationError, VarLayout};
use crate::grid::Network;

/// Topology count above which enumeration is refused.
pub const MAX_SWITCHABLE: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub cost: Cost,
    /// A minimizing topology, the first met in Gray code order.
    pub statuses: Option<Vec<bool>>,
    pub feasible: usize,
    pub evaluated: usize,
}

struct SlackForm {
    lp: LinearProgram,
    layout: VarLayout,
    slack_base: usize,
}

impl SlackForm {
    fn new(net: &Network, demand: &[f64]) -> Self {
        let layout = VarLayout::of(net);
        let mut lp = LinearProgram::new();
        add_columns(&mut lp, net);
        add_balance_rows(&mut lp, net, &layout, demand);
        let slack_base = lp.num_vars();
        for l in 0..net.lines().len() {
            let s = lp.add_var(0.0, 0.0, 0.0);
            let line = &net.lines()[l];
            let (a, b) = net.endpoints(line);
            let susceptance = net.susceptance_mw(line);
            lp.add_constraint(
                [
                    (layout.flow(l), 1.0),
                    (layout.angle(a), -susceptance),
                    (layout.angle(b), susceptance),
                    (s, -1.0),
                ],
                Relation::Eq,
                0.0,
            );
        }
        SlackForm { lp, layout, slack_base }
    }

    fn set_line(&mut self, net: &Network, l: usize, closed: bool) {
        let cap = net.lines()[l].capacity;
        if closed {
            self.lp.set_bounds(self.layout.flow(l), -cap, cap);
            self.lp.set_bounds(self.slack_base + l, 0.0, 0.0);
        } else {
            self.lp.set_bounds(self.layout.flow(l), 0.0, 0.0);
            self.lp.set_bounds(self.slack_base + l, f64::NEG_INFINITY, f64::INFINITY);
        }
    }
}

/// Calls `visit` with every topology and its optimal dispatch (`None` when
/// infeasible).
pub fn for_each_topology<F>(net: &Network, demand: &[f64], config: &SimplexConfig, mut visit: F) -> Result<(), BenchError>
where
    F: FnMut(&[bool], Option<&DispatchSolution>),
{
    let s = net.num_switchable();
    if s > MAX_SWITCHABLE {
        return Err(BenchError::TooManyTopologies(s));
    }
    if demand.len() != net.num_buses() {
        return Err(FormulationError::DemandLength {
            expected: net.num_buses(),
            got: demand.len(),
        }
        .into());
    }
    let mut form = SlackForm::new(net, demand);
    let mut statuses = vec![true; s];
    let mut hint: Option<Basis> = None;
    for step in 0u64..(1u64 << s) {
        if step > 0 {
            let k = step.trailing_zeros() as usize;
            statuses[k] = !statuses[k];
            form.set_line(net, net.switchable()[k], statuses[k]);
        }
        let sol = match &hint {
            Some(h) => solve_lp_warm(&form.lp, h, config)?,
            None => solve_lp(&form.lp, config)?,
        };
        match sol.status {
            LpStatus::Optimal => {
                let d = DispatchSolution::from_point(net, &form.layout, &sol.primal, statuses.clone(), sol.objective);
                visit(&statuses, Some(&d));
            }
            LpStatus::Infeasible => visit(&statuses, None),
            LpStatus::Unbounded => return Err(FormulationError::Unbounded.into()),
            LpStatus::IterationLimit => return Err(FormulationError::LpIterationLimit.into()),
        }
        if sol.basis.is_some() {
            hint = sol.basis;
        }
    }
    Ok(())
}

/// Minimum dispatch cost over all `2^S` topologies.
pub fn brute_force(net: &Network, demand: &[f64], config: &SimplexConfig) -> Result<OracleResult, BenchError> {
    let mut best = OracleResult {
        cost: Cost::Infinite,
        statuses: None,
        feasible: 0,
        evaluated: 0,
    };
    for_each_topology(net, demand, config, |statuses, dispatch| {
        best.evaluated += 1;
        if let Some(d) = dispatch {
            best.feasible += 1;
            if Cost::Finite(d.cost) < best.cost {
                best.cost = Cost::Finite(d.cost);
                best.statuses = Some(statuses.to_vec());
            }
        }
    })?;
    Ok(best)
}
