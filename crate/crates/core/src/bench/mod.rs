//! Instance families, training stores, leave-one-out evaluation and reports.

mod config;
mod instances;
mod loo;
pub mod oracle;
mod report;
mod savings;
mod training;

use thiserror::Error;

use crate::formulation::FormulationError;
use crate::grid::GridError;
use crate::knn::{MethodError, StoreError};

pub use config::{load_network, ExperimentConfig};
pub use instances::{generate_instances, InstanceFamily};
pub use loo::{classify, expand_grid, gap_percent, leave_one_out, Aggregate, Cell, Class, EvalSettings, GridEntry, RunReport};
pub use report::{bound_table, emit_report, write_bound_table, BoundRow, Range};
pub use savings::{savings, SavingsReport};
pub use training::{build_training_store, TrainingSummary};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0} switchable lines are too many to enumerate")]
    TooManyTopologies(usize),
    #[error("{0}")]
    Invalid(String),
    #[error(
        "instance {instance}: {method} found cost {cost} below the reference {reference} by more than the gap tolerance"
    )]
    Dominance {
        instance: usize,
        method: String,
        cost: f64,
        reference: f64,
    },
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl From<ots_solver::LpError> for BenchError {
    fn from(e: ots_solver::LpError) -> Self {
        BenchError::Formulation(e.into())
    }
}

/// Runs `f` on a pool of `workers` threads.
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    Ok(pool.install(f))
}
