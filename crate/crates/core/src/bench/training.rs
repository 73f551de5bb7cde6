use log::{info, warn};
use ots_solver::{MipConfig, MipStatus};
use rayon::prelude::*;

use super::{with_workers, BenchError, InstanceFamily};
use crate::formulation::Cost;
use crate::grid::Network;
use crate::knn::{ben, Instance, TrainingRecord, TrainingStore};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingSummary {
    /// Family positions with no feasible topology; they get no record.
    pub infeasible: Vec<usize>,
    pub time_limited: usize,
}

/// Solves every instance of `family` with the exact method and stores the
/// optimal statuses, angles and cost.
pub fn build_training_store(
    net: &Network,
    family: &InstanceFamily,
    config: &MipConfig,
    workers: usize,
) -> Result<(TrainingStore, TrainingSummary), BenchError> {
    if family.hash != net.content_hash() {
        return Err(BenchError::Invalid(format!(
            "instance family was generated for network '{}' with a different hash",
            family.network
        )));
    }
    let outcomes: Vec<Result<Option<TrainingRecord>, BenchError>> = with_workers(workers, || {
        family
            .demands
            .par_iter()
            .enumerate()
            .map(|(i, demand)| {
                let inst = Instance::new(net, demand.clone(), config);
                let out = ben(&inst)?;
                info!("instance {i}: cost {} in {:.3}s", out.cost, out.wall_time.as_secs_f64());
                Ok(match (out.cost, out.dispatch) {
                    (Cost::Finite(cost), Some(d)) => Some(TrainingRecord {
                        instance: i,
                        demand: demand.clone(),
                        statuses: d.statuses,
                        angles: d.angles,
                        cost,
                        time_limited: out.mip_status == Some(MipStatus::FeasibleTimeLimit),
                    }),
                    _ => None,
                })
            })
            .collect()
    })?;
    let mut records = Vec::new();
    let mut summary = TrainingSummary::default();
    for (i, out) in outcomes.into_iter().enumerate() {
        match out? {
            Some(r) => {
                summary.time_limited += usize::from(r.time_limited);
                records.push(r);
            }
            None => {
                warn!("instance {i} has no feasible topology within the limits; skipped");
                summary.infeasible.push(i);
            }
        }
    }
    Ok((TrainingStore::new(&family.network, net, records), summary))
}
