use std::time::Duration;

use log::info;
use ots_solver::MipConfig;
use rayon::prelude::*;

use super::{with_workers, BenchError};
use crate::formulation::Cost;
use crate::grid::Network;
use crate::knn::{run_method, Instance, Method, MethodOutcome, TrainingRecord, TrainingStore};

/// One method at one neighbourhood size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridEntry {
    pub method: Method,
    pub k: Option<usize>,
}

impl GridEntry {
    pub fn label(&self) -> String {
        match self.k {
            Some(k) => format!("{}_k{k}", self.method),
            None => self.method.to_string(),
        }
    }
}

/// Crosses `methods` with `ks`; methods that ignore `k` appear once.
pub fn expand_grid(methods: &[Method], ks: &[usize]) -> Vec<GridEntry> {
    let mut out = Vec::new();
    for &method in methods {
        if method.uses_k() {
            out.extend(ks.iter().map(|&k| GridEntry { method, k: Some(k) }));
        } else {
            out.push(GridEntry { method, k: None });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSettings {
    pub grid: Vec<GridEntry>,
    /// Relative gap under which a cost counts as optimal.
    pub gap_tolerance: f64,
    pub mip: MipConfig,
    pub workers: usize,
    /// Leave time-limited records out of every training set.
    pub exclude_time_limited: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Class {
    Optimal,
    Suboptimal,
    Infeasible,
}

impl Class {
    pub fn name(self) -> &'static str {
        match self {
            Class::Optimal => "optimal",
            Class::Suboptimal => "suboptimal",
            Class::Infeasible => "infeasible",
        }
    }
}

/// Percent excess of `cost` over `reference`.
pub fn gap_percent(cost: f64, reference: f64) -> f64 {
    100.0 * (cost - reference) / reference.abs().max(1e-10)
}

pub fn classify(cost: Cost, reference: f64, gap_tolerance: f64) -> Class {
    match cost {
        Cost::Infinite => Class::Infeasible,
        Cost::Finite(c) if (c - reference) / reference.abs().max(1e-10) <= gap_tolerance => Class::Optimal,
        Cost::Finite(_) => Class::Suboptimal,
    }
}

/// Outcome of one grid entry on one held-out record.
#[derive(Clone, Debug)]
pub struct Cell {
    /// Family position of the held-out instance.
    pub instance: usize,
    pub entry: GridEntry,
    pub class: Class,
    pub cost: Cost,
    pub reference: f64,
    pub gap_pct: Option<f64>,
    pub wall_time: Duration,
    pub nodes: usize,
    pub fixed: usize,
    /// Same statuses as the stored optimum.
    pub same_topology: bool,
    pub bound_validity_unproven: bool,
    pub statuses: Option<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub entry: GridEntry,
    pub instances: usize,
    pub n_opt: usize,
    pub n_sub: usize,
    pub n_infeasible: usize,
    /// Largest percent gap over the suboptimal cells.
    pub gap_max: Option<f64>,
    pub mean_time: f64,
    pub mean_fixed: f64,
    pub n_same_topology: usize,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub grid: Vec<GridEntry>,
    pub instances: usize,
    /// Instance-major: all grid entries of the first record, then the next.
    pub cells: Vec<Cell>,
}

impl RunReport {
    pub fn cells_for(&self, entry: GridEntry) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(move |c| c.entry == entry)
    }

    pub fn aggregates(&self) -> Vec<Aggregate> {
        self.grid
            .iter()
            .map(|&entry| {
                let cells: Vec<&Cell> = self.cells_for(entry).collect();
                let count = |class| cells.iter().filter(|c| c.class == class).count();
                let n = cells.len().max(1) as f64;
                Aggregate {
                    entry,
                    instances: cells.len(),
                    n_opt: count(Class::Optimal),
                    n_sub: count(Class::Suboptimal),
                    n_infeasible: count(Class::Infeasible),
                    gap_max: cells
                        .iter()
                        .filter(|c| c.class == Class::Suboptimal)
                        .filter_map(|c| c.gap_pct)
                        .reduce(f64::max),
                    mean_time: cells.iter().map(|c| c.wall_time.as_secs_f64()).sum::<f64>() / n,
                    mean_fixed: cells.iter().map(|c| c.fixed as f64).sum::<f64>() / n,
                    n_same_topology: cells.iter().filter(|c| c.same_topology).count(),
                }
            })
            .collect()
    }
}

fn to_cell(record: &TrainingRecord, entry: GridEntry, out: &MethodOutcome, gap_tolerance: f64) -> Result<Cell, BenchError> {
    let reference = record.cost;
    if let Cost::Finite(c) = out.cost {
        let slack = gap_tolerance * reference.abs().max(1e-10) + 1e-6 * reference.abs().max(1.0);
        if !record.time_limited && c < reference - slack {
            return Err(BenchError::Dominance {
                instance: record.instance,
                method: entry.label(),
                cost: c,
                reference,
            });
        }
    }
    Ok(Cell {
        instance: record.instance,
        entry,
        class: classify(out.cost, reference, gap_tolerance),
        cost: out.cost,
        reference,
        gap_pct: out.cost.value().map(|c| gap_percent(c, reference)),
        wall_time: out.wall_time,
        nodes: out.nodes,
        fixed: out.fixed,
        same_topology: out.statuses.as_ref() == Some(&record.statuses),
        bound_validity_unproven: out.bound_validity_unproven,
        statuses: out.statuses.clone(),
    })
}

/// Holds out each record in turn, trains on the rest, and scores every grid
/// entry against the held-out record's stored cost.
pub fn leave_one_out(net: &Network, store: &TrainingStore, settings: &EvalSettings) -> Result<RunReport, BenchError> {
    let records = &store.records;
    if records.len() < 2 {
        return Err(BenchError::Invalid("leave-one-out needs at least two records".into()));
    }
    let pool_size = records
        .iter()
        .filter(|r| !(settings.exclude_time_limited && r.time_limited))
        .count();
    for e in &settings.grid {
        if let Some(k) = e.k {
            if k == 0 || k + 1 > pool_size {
                return Err(BenchError::Invalid(format!(
                    "k = {k} needs a training set of at least {k} records, leave-one-out offers {}",
                    pool_size.saturating_sub(1)
                )));
            }
        }
    }

    let per_instance: Vec<Result<Vec<Cell>, BenchError>> = with_workers(settings.workers, || {
        records
            .par_iter()
            .enumerate()
            .map(|(t, held_out)| {
                let training: Vec<&TrainingRecord> = records
                    .iter()
                    .enumerate()
                    .filter(|&(i, r)| i != t && !(settings.exclude_time_limited && r.time_limited))
                    .map(|(_, r)| r)
                    .collect();
                let mut inst = Instance::new(net, held_out.demand.clone(), &settings.mip);
                let mut cells = Vec::with_capacity(settings.grid.len());
                for &entry in &settings.grid {
                    let out = run_method(entry.method, &mut inst, &training, entry.k.unwrap_or(1))?;
                    cells.push(to_cell(held_out, entry, &out, settings.gap_tolerance)?);
                }
                info!("held out instance {}: {} cells", held_out.instance, cells.len());
                Ok(cells)
            })
            .collect()
    })?;
    let mut cells = Vec::new();
    for chunk in per_instance {
        cells.extend(chunk?);
    }
    Ok(RunReport {
        grid: settings.grid.clone(),
        instances: records.len(),
        cells,
    })
}
