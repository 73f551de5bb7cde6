use ots_solver::SimplexConfig;

use super::BenchError;
use crate::formulation::{evaluate_cost, Cost};
use crate::grid::Network;
use crate::knn::TrainingRecord;

/// Relative cost reduction of the switched optimum over the all-closed
/// dispatch, per instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SavingsReport {
    /// Percent per record; `None` where the all-closed dispatch is infeasible.
    pub per_instance: Vec<Option<f64>>,
    /// Mean over the included instances.
    pub mean: Option<f64>,
    pub excluded: usize,
}

/// `100 (C_closed - C_opt) / C_closed` for each record.
pub fn savings(net: &Network, records: &[TrainingRecord], config: &SimplexConfig) -> Result<SavingsReport, BenchError> {
    let all_on = vec![true; net.num_switchable()];
    let mut per_instance = Vec::with_capacity(records.len());
    for r in records {
        per_instance.push(match evaluate_cost(net, &r.demand, &all_on, config)? {
            Cost::Finite(c) => Some(100.0 * (c - r.cost) / c.abs().max(1e-10)),
            Cost::Infinite => None,
        });
    }
    let included: Vec<f64> = per_instance.iter().flatten().copied().collect();
    let mean = (!included.is_empty()).then(|| included.iter().sum::<f64>() / included.len() as f64);
    Ok(SavingsReport {
        excluded: per_instance.len() - included.len(),
        per_instance,
        mean,
    })
}
