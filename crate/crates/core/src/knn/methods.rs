use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use ots_solver::{solve_mip, MipConfig, MipStatus};
use thiserror::Error;

use super::{nearest_neighbors, rounded_mean, unanimity_bounds, NeighborSet, TrainingRecord};
use crate::formulation::{
    build_ots_mip, historic_angle_bigm, shortest_path_bigm, solve_dispatch, BigMBounds, Cost, DispatchSolution,
    FormulationError,
};
use crate::grid::Network;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ben,
    KnnD,
    KnnLp,
    KnnB,
    KnnM,
    KnnBm,
    KnnBhatM,
    AllHatM,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Ben,
        Method::KnnD,
        Method::KnnLp,
        Method::KnnB,
        Method::KnnM,
        Method::KnnBm,
        Method::KnnBhatM,
        Method::AllHatM,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ben => "ben",
            Method::KnnD => "knn-d",
            Method::KnnLp => "knn-lp",
            Method::KnnB => "knn-b",
            Method::KnnM => "knn-m",
            Method::KnnBm => "knn-bm",
            Method::KnnBhatM => "knn-bhatm",
            Method::AllHatM => "all-hatm",
        }
    }

    /// Whether the method consults the `k` nearest neighbours.
    pub fn uses_k(self) -> bool {
        !matches!(self, Method::Ben | Method::AllHatM)
    }

    /// Whether the method needs a training set at all.
    pub fn needs_training(self) -> bool {
        self != Method::Ben
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown method '{0}'")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MethodError {
    #[error("k = {k} is outside 1..={available}")]
    BadK { k: usize, available: usize },
    #[error(transparent)]
    Formulation(#[from] FormulationError),
}

/// What a method produced for one demand vector.
#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub method: Method,
    pub k: Option<usize>,
    pub statuses: Option<Vec<bool>>,
    pub dispatch: Option<DispatchSolution>,
    pub cost: Cost,
    pub wall_time: Duration,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Status binaries fixed before the solve.
    pub fixed: usize,
    pub mip_status: Option<MipStatus>,
    pub mip_bound: Option<f64>,
    pub bounds: Option<BigMBounds>,
    /// The big-M bounds may exclude feasible points of the problem solved.
    pub bound_validity_unproven: bool,
}

/// One demand vector on one network, with memoized topology costs.
pub struct Instance<'a> {
    pub network: &'a Network,
    pub demand: Vec<f64>,
    pub config: &'a MipConfig,
    cache: HashMap<Vec<bool>, (Cost, Duration)>,
    pub cache_hits: usize,
}

impl<'a> Instance<'a> {
    pub fn new(network: &'a Network, demand: Vec<f64>, config: &'a MipConfig) -> Self {
        Instance {
            network,
            demand,
            config,
            cache: HashMap::new(),
            cache_hits: 0,
        }
    }

    /// Cost of a topology and the time its LP took when first solved.
    pub fn evaluate(&mut self, statuses: &[bool]) -> Result<(Cost, Duration), FormulationError> {
        if let Some(&hit) = self.cache.get(statuses) {
            self.cache_hits += 1;
            return Ok(hit);
        }
        let start = Instant::now();
        let cost = match solve_dispatch(self.network, &self.demand, statuses, &self.config.lp)? {
            Some(d) => Cost::Finite(d.cost),
            None => Cost::Infinite,
        };
        let entry = (cost, start.elapsed());
        self.cache.insert(statuses.to_vec(), entry);
        Ok(entry)
    }

    fn neighbours<R: Borrow<TrainingRecord>>(&self, training: &[R], k: usize) -> Result<NeighborSet, MethodError> {
        nearest_neighbors(training, &self.demand, k).ok_or(MethodError::BadK {
            k,
            available: training.len(),
        })
    }

    fn lp_outcome(&self, method: Method, k: usize, statuses: Vec<bool>, cost: Cost, wall_time: Duration) -> MethodOutcome {
        MethodOutcome {
            method,
            k: Some(k),
            statuses: Some(statuses),
            dispatch: None,
            cost,
            wall_time,
            nodes: 0,
            lp_iterations: 0,
            fixed: self.network.num_switchable(),
            mip_status: None,
            mip_bound: None,
            bounds: None,
            bound_validity_unproven: false,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        method: Method,
        k: Option<usize>,
        bounds: BigMBounds,
        fixed: &BTreeMap<usize, bool>,
        unproven: bool,
        start: Instant,
    ) -> Result<MethodOutcome, MethodError> {
        let model = build_ots_mip(self.network, &self.demand, &bounds, fixed)?;
        let sol = solve_mip(&model.mip, self.config).map_err(FormulationError::from)?;
        let wall_time = start.elapsed();
        let (cost, dispatch) = match (&sol.incumbent, sol.objective) {
            (Some(x), Some(obj)) => (Cost::Finite(obj), Some(model.decode(self.network, x, obj))),
            _ => (Cost::Infinite, None),
        };
        Ok(MethodOutcome {
            method,
            k,
            statuses: dispatch.as_ref().map(|d| d.statuses.clone()),
            dispatch,
            cost,
            wall_time,
            nodes: sol.nodes,
            lp_iterations: sol.lp_iterations,
            fixed: fixed.len(),
            mip_status: Some(sol.status),
            mip_bound: Some(sol.bound),
            bounds: Some(bounds),
            bound_validity_unproven: unproven,
        })
    }
}

/// Exact benchmark: shortest-path bounds over the non-switchable lines, one
/// MIP, nothing fixed.
pub fn ben(inst: &Instance<'_>) -> Result<MethodOutcome, MethodError> {
    let start = Instant::now();
    let bounds = shortest_path_bigm(inst.network, &BTreeSet::new())?;
    inst.solve(Method::Ben, None, bounds, &BTreeMap::new(), false, start)
}

/// Rounded mean of the neighbour topologies, evaluated by one LP.
pub fn knn_d<R: Borrow<TrainingRecord>>(
    inst: &mut Instance<'_>,
    training: &[R],
    k: usize,
) -> Result<MethodOutcome, MethodError> {
    let start = Instant::now();
    let nb = inst.neighbours(training, k)?;
    let statuses = rounded_mean(&nb.indices.iter().map(|&i| &training[i].borrow().statuses).collect::<Vec<_>>());
    let search = start.elapsed();
    let (cost, lp_time) = inst.evaluate(&statuses)?;
    Ok(inst.lp_outcome(Method::KnnD, k, statuses, cost, search + lp_time))
}

/// Best neighbour topology by exact LP cost; equal costs go to the lower
/// training index. Time is the sum of the LP solves.
pub fn knn_lp<R: Borrow<TrainingRecord>>(
    inst: &mut Instance<'_>,
    training: &[R],
    k: usize,
) -> Result<MethodOutcome, MethodError> {
    let nb = inst.neighbours(training, k)?;
    let mut order = nb.indices.clone();
    order.sort_unstable();
    let mut total = Duration::ZERO;
    let mut best: Option<(Cost, usize)> = None;
    for i in order {
        let (cost, t) = inst.evaluate(&training[i].borrow().statuses)?;
        total += t;
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, i));
        }
    }
    let (cost, i) = best.expect("k >= 1");
    Ok(inst.lp_outcome(Method::KnnLp, k, training[i].borrow().statuses.clone(), cost, total))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyVariant {
    /// Fix unanimous statuses; bounds over the non-switchable lines.
    B,
    /// Fix nothing; bounds over the non-switchable and unanimously closed lines.
    M,
    /// Fix unanimous statuses and shorten the bounds.
    BM,
}

pub fn knn_family<R: Borrow<TrainingRecord>>(
    inst: &Instance<'_>,
    training: &[R],
    k: usize,
    variant: FamilyVariant,
) -> Result<MethodOutcome, MethodError> {
    let start = Instant::now();
    let nb = inst.neighbours(training, k)?;
    let agree = unanimity_bounds(&nb.indices.iter().map(|&i| &training[i].borrow().statuses).collect::<Vec<_>>());
    let closed: BTreeSet<usize> = agree.closed().collect();
    let spanning = || shortest_path_bigm(inst.network, &BTreeSet::new());
    let (method, bounds, fixed, unproven) = match variant {
        FamilyVariant::B => (Method::KnnB, spanning()?, agree.fixed, false),
        FamilyVariant::M => {
            // The unanimously closed lines stay free here, so they keep
            // their spanning bounds.
            let base = spanning()?;
            let shortened = shortest_path_bigm(inst.network, &closed)?;
            let merged = (0..inst.network.num_switchable())
                .map(|j| shortened.get(j).or(base.get(j)))
                .collect();
            let bounds = BigMBounds::new(base.kind(), merged);
            (Method::KnnM, bounds, BTreeMap::new(), !closed.is_empty())
        }
        FamilyVariant::BM => (Method::KnnBm, shortest_path_bigm(inst.network, &closed)?, agree.fixed, false),
    };
    inst.solve(method, Some(k), bounds, &fixed, unproven, start)
}

/// Unanimous statuses of the `k` neighbours fixed, historic-angle bounds
/// over the whole training set.
pub fn knn_bhatm<R: Borrow<TrainingRecord>>(
    inst: &Instance<'_>,
    training: &[R],
    k: usize,
) -> Result<MethodOutcome, MethodError> {
    let start = Instant::now();
    let nb = inst.neighbours(training, k)?;
    let agree = unanimity_bounds(&nb.indices.iter().map(|&i| &training[i].borrow().statuses).collect::<Vec<_>>());
    let fallback = shortest_path_bigm(inst.network, &BTreeSet::new())?;
    let bounds = historic_angle_bigm(training, inst.network, &fallback);
    inst.solve(Method::KnnBhatM, Some(k), bounds, &agree.fixed, true, start)
}

/// Historic-angle bounds over the whole training set, nothing fixed.
pub fn all_hatm<R: Borrow<TrainingRecord>>(inst: &Instance<'_>, training: &[R]) -> Result<MethodOutcome, MethodError> {
    let start = Instant::now();
    if training.is_empty() {
        return Err(MethodError::BadK { k: 1, available: 0 });
    }
    let fallback = shortest_path_bigm(inst.network, &BTreeSet::new())?;
    let bounds = historic_angle_bigm(training, inst.network, &fallback);
    inst.solve(Method::AllHatM, None, bounds, &BTreeMap::new(), true, start)
}

/// Dispatches on `method`; `k` is ignored by methods that do not use it.
pub fn run_method<R: Borrow<TrainingRecord>>(
    method: Method,
    inst: &mut Instance<'_>,
    training: &[R],
    k: usize,
) -> Result<MethodOutcome, MethodError> {
    match method {
        Method::Ben => ben(inst),
        Method::KnnD => knn_d(inst, training, k),
        Method::KnnLp => knn_lp(inst, training, k),
        Method::KnnB => knn_family(inst, training, k, FamilyVariant::B),
        Method::KnnM => knn_family(inst, training, k, FamilyVariant::M),
        Method::KnnBm => knn_family(inst, training, k, FamilyVariant::BM),
        Method::KnnBhatM => knn_bhatm(inst, training, k),
        Method::AllHatM => all_hatm(inst, training),
    }
}
