//! Nearest-neighbour solution strategies over a store of solved instances.

mod methods;
mod store;

use std::borrow::Borrow;
use std::collections::BTreeMap;

pub use methods::{
    all_hatm, ben, knn_bhatm, knn_d, knn_family, knn_lp, run_method, FamilyVariant, Instance, Method,
    MethodError, MethodOutcome, UnknownMethod,
};
pub use store::{StoreError, StoreHeader, TrainingRecord, TrainingStore};

/// The `k` closest training records, nearest first.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborSet {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

/// Euclidean nearest neighbours on demand vectors; equal distances go to the
/// lower training index. Returns `None` unless `1 <= k <= training.len()`.
pub fn nearest_neighbors<R: Borrow<TrainingRecord>>(training: &[R], demand: &[f64], k: usize) -> Option<NeighborSet> {
    if k == 0 || k > training.len() {
        return None;
    }
    let mut scored: Vec<(f64, usize)> = training
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let sq: f64 = r.borrow().demand.iter().zip(demand).map(|(a, b)| (a - b) * (a - b)).sum();
            (sq, i)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(k);
    Some(NeighborSet {
        indices: scored.iter().map(|s| s.1).collect(),
        distances: scored.iter().map(|s| s.0.sqrt()).collect(),
    })
}

/// Statuses shared by every neighbour.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Unanimity {
    /// Switchable position to agreed closed flag.
    pub fixed: BTreeMap<usize, bool>,
    pub free: Vec<usize>,
}

impl Unanimity {
    /// Positions every neighbour keeps closed.
    pub fn closed(&self) -> impl Iterator<Item = usize> + '_ {
        self.fixed.iter().filter(|(_, &on)| on).map(|(&k, _)| k)
    }
}

pub fn unanimity_bounds<S: AsRef<[bool]>>(statuses: &[S]) -> Unanimity {
    let mut out = Unanimity::default();
    let Some(first) = statuses.first() else {
        return out;
    };
    for (k, &v) in first.as_ref().iter().enumerate() {
        if statuses.iter().all(|s| s.as_ref()[k] == v) {
            out.fixed.insert(k, v);
        } else {
            out.free.push(k);
        }
    }
    out
}

/// Componentwise nearest integer of the mean status; a mean of exactly one
/// half keeps the line closed.
pub fn rounded_mean<S: AsRef<[bool]>>(statuses: &[S]) -> Vec<bool> {
    let Some(first) = statuses.first() else {
        return Vec::new();
    };
    (0..first.as_ref().len())
        .map(|k| 2 * statuses.iter().filter(|s| s.as_ref()[k]).count() >= statuses.len())
        .collect()
}
