//! Branch-and-bound over binary variables.
//!
//! Nodes carry their own binary bounds and the parent's optimal basis as a
//! warm-start hint. The search dives depth-first until an incumbent exists and
//! then switches to best-bound selection (configurable). A node is pruned when
//! its bound cannot improve the incumbent by more than the relative gap
//! tolerance; the smallest such pruned bound is kept so the reported global
//! bound stays honest.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::io::{self, Write};
use std::rc::Rc;
use std::time::{Duration, Instant};

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lp::{solve_lp, solve_lp_warm, Basis, LinearProgram, LpError, LpSolution, LpStatus, SimplexConfig};

/// Denominator guard for relative gaps.
pub const GAP_EPS: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MipError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("x{0} is not a binary variable")]
    NotBinary(usize),
    #[error("binary x{var} has bounds [{lower}, {upper}] outside [0, 1]")]
    BinaryBounds { var: usize, lower: f64, upper: f64 },
    #[error("gap tolerance must be positive, got {0}")]
    BadGap(f64),
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("LP iteration limit hit at node {0}")]
    LpIterationLimit(usize),
}

/// An LP with a subset of variables restricted to `{0, 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedIntegerProgram {
    lp: LinearProgram,
    binaries: Vec<usize>,
}

impl MixedIntegerProgram {
    pub fn new(lp: LinearProgram, mut binaries: Vec<usize>) -> Result<Self, MipError> {
        binaries.sort_unstable();
        binaries.dedup();
        for &j in &binaries {
            if j >= lp.num_vars() {
                return Err(MipError::NotBinary(j));
            }
            let (l, u) = (lp.lower()[j], lp.upper()[j]);
            if l < 0.0 || u > 1.0 || l > u {
                return Err(MipError::BinaryBounds {
                    var: j,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(MixedIntegerProgram { lp, binaries })
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn binaries(&self) -> &[usize] {
        &self.binaries
    }

    /// Returns a copy with each listed binary's bounds collapsed onto its value.
    pub fn fix_binaries(&self, assignments: &BTreeMap<usize, u8>) -> Result<Self, MipError> {
        let mut out = self.clone();
        for (&var, &value) in assignments {
            if self.binaries.binary_search(&var).is_err() {
                return Err(MipError::NotBinary(var));
            }
            if value > 1 {
                return Err(MipError::BinaryBounds {
                    var,
                    lower: f64::from(value),
                    upper: f64::from(value),
                });
            }
            let v = f64::from(value);
            out.lp.set_bounds(var, v, v);
        }
        Ok(out)
    }

    /// Number of binaries whose bounds already pin them to one value.
    pub fn fixed_count(&self) -> usize {
        self.binaries
            .iter()
            .filter(|&&j| self.lp.lower()[j] == self.lp.upper()[j])
            .count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BranchingRule {
    /// Fractional part closest to one half, lowest index on ties.
    MostFractional,
    /// Lowest-index fractional binary.
    FirstFractional,
    /// Uniformly random fractional binary drawn from the configured seed.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeSelection {
    /// Depth-first until the first incumbent, then best bound.
    DiveThenBestBound,
    BestBound,
    DepthFirst,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MipConfig {
    /// Relative gap `(objective - bound) / max(|objective|, 1e-10)` at which the
    /// search stops.
    pub gap_tolerance: f64,
    pub time_limit: Duration,
    pub node_limit: Option<usize>,
    pub branching: BranchingRule,
    pub node_selection: NodeSelection,
    pub seed: u64,
    pub integrality_tol: f64,
    pub lp: SimplexConfig,
    /// Record one [`NodeRecord`] per processed node.
    pub record_log: bool,
}

impl Default for MipConfig {
    fn default() -> Self {
        MipConfig {
            gap_tolerance: 1e-4,
            time_limit: Duration::from_secs(3600),
            node_limit: None,
            branching: BranchingRule::MostFractional,
            node_selection: NodeSelection::DiveThenBestBound,
            seed: 0,
            integrality_tol: 1e-6,
            lp: SimplexConfig::default(),
            record_log: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MipStatus {
    OptimalWithinGap,
    /// A limit (time or node count) stopped the search with an incumbent.
    FeasibleTimeLimit,
    Infeasible,
    /// A limit stopped the search before any incumbent was found.
    NoIncumbentTimeLimit,
}

impl fmt::Display for MipStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MipStatus::OptimalWithinGap => "optimal-within-gap",
            MipStatus::FeasibleTimeLimit => "feasible-time-limit",
            MipStatus::Infeasible => "infeasible",
            MipStatus::NoIncumbentTimeLimit => "no-incumbent-time-limit",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeDecision {
    Branched { var: usize },
    Integral,
    PrunedByBound,
    Infeasible,
}

/// One processed node of the search tree.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    pub node: usize,
    pub depth: usize,
    /// LP bound of the node (`+inf` when infeasible).
    pub bound: f64,
    /// Global lower bound after processing the node.
    pub global_bound: f64,
    pub incumbent: Option<f64>,
    pub decision: NodeDecision,
}

/// Writes the search log as one whitespace-separated record per line.
pub fn write_log<W: Write>(records: &[NodeRecord], out: &mut W) -> io::Result<()> {
    for r in records {
        let inc = r.incumbent.map_or_else(|| "-".to_string(), |v| format!("{v}"));
        let decision = match r.decision {
            NodeDecision::Branched { var } => format!("branch x{var}"),
            NodeDecision::Integral => "integral".to_string(),
            NodeDecision::PrunedByBound => "pruned".to_string(),
            NodeDecision::Infeasible => "infeasible".to_string(),
        };
        writeln!(
            out,
            "node={} depth={} bound={} global={} incumbent={} decision={}",
            r.node, r.depth, r.bound, r.global_bound, inc, decision
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct MipSolution {
    pub status: MipStatus,
    pub incumbent: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Best proven lower bound (`+inf` when infeasible).
    pub bound: f64,
    pub gap: Option<f64>,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub root_bound: f64,
    pub wall_time: Duration,
    /// Longest single node processing time, the granularity of the time limit.
    pub longest_node: Duration,
    pub log: Vec<NodeRecord>,
}

impl MipSolution {
    pub fn has_incumbent(&self) -> bool {
        self.incumbent.is_some()
    }
}

pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    ((objective - bound) / objective.abs().max(GAP_EPS)).max(0.0)
}

struct Node {
    id: usize,
    depth: usize,
    /// (lower, upper) per entry of `binaries`.
    bounds: Vec<(f64, f64)>,
    parent_bound: f64,
    hint: Option<Rc<Basis>>,
}

struct Ranked(Node);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    // Max-heap: the smallest bound, then the oldest node, ranks highest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .parent_bound
            .total_cmp(&self.0.parent_bound)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

enum Frontier {
    Stack(Vec<Node>),
    Heap(BinaryHeap<Ranked>),
}

impl Frontier {
    fn push(&mut self, node: Node) {
        match self {
            Frontier::Stack(s) => s.push(node),
            Frontier::Heap(h) => h.push(Ranked(node)),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Frontier::Stack(s) => s.pop(),
            Frontier::Heap(h) => h.pop().map(|r| r.0),
        }
    }

    fn min_bound(&self) -> f64 {
        match self {
            Frontier::Stack(s) => s.iter().map(|n| n.parent_bound).fold(f64::INFINITY, f64::min),
            Frontier::Heap(h) => h.peek().map_or(f64::INFINITY, |r| r.0.parent_bound),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Frontier::Stack(s) => s.is_empty(),
            Frontier::Heap(h) => h.is_empty(),
        }
    }

    fn into_heap(self) -> Frontier {
        match self {
            Frontier::Stack(s) => Frontier::Heap(s.into_iter().map(Ranked).collect()),
            heap => heap,
        }
    }
}

struct Search<'a> {
    mip: &'a MixedIntegerProgram,
    config: &'a MipConfig,
    lp: LinearProgram,
    rng: ChaCha8Rng,
    incumbent: Option<(Vec<f64>, f64)>,
    pruned_bound: f64,
    lp_iterations: usize,
}

impl Search<'_> {
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((_, obj)) => obj - self.config.gap_tolerance * obj.abs().max(GAP_EPS),
            None => f64::INFINITY,
        }
    }

    fn solve_node(&mut self, node: &Node) -> Result<LpSolution, MipError> {
        for (k, &j) in self.mip.binaries.iter().enumerate() {
            let (l, u) = node.bounds[k];
            self.lp.set_bounds(j, l, u);
        }
        let sol = match &node.hint {
            Some(h) => solve_lp_warm(&self.lp, h, &self.config.lp)?,
            None => solve_lp(&self.lp, &self.config.lp)?,
        };
        self.lp_iterations += sol.stats.iterations;
        Ok(sol)
    }

    fn pick_branch(&mut self, x: &[f64]) -> Option<usize> {
        let tol = self.config.integrality_tol;
        let fractional: Vec<(usize, f64)> = self
            .mip
            .binaries
            .iter()
            .enumerate()
            .filter_map(|(k, &j)| {
                let f = x[j] - x[j].floor();
                let score = f.min(1.0 - f);
                (score > tol).then_some((k, score))
            })
            .collect();
        match self.config.branching {
            BranchingRule::MostFractional => fractional
                .iter()
                .fold(None, |best: Option<(usize, f64)>, &(k, s)| match best {
                    Some((_, bs)) if s <= bs => best,
                    _ => Some((k, s)),
                })
                .map(|(k, _)| k),
            BranchingRule::FirstFractional => fractional.first().map(|&(k, _)| k),
            BranchingRule::Random => fractional.choose(&mut self.rng).map(|&(k, _)| k),
        }
    }

    /// Rounds the binaries of an LP point and accepts it when it still
    /// satisfies every row; otherwise re-solves with the binaries fixed.
    fn try_incumbent(&mut self, node: &Node, x: &[f64], hint: Option<&Basis>) -> Result<Option<(Vec<f64>, f64)>, MipError> {
        let mut rounded = x.to_vec();
        for &j in &self.mip.binaries {
            rounded[j] = rounded[j].round();
        }
        let tol = self.config.lp.feasibility_tol * 10.0;
        if self.mip.lp.max_violation(&rounded) <= tol {
            let obj = self.mip.lp.objective_value(&rounded);
            return Ok(Some((rounded, obj)));
        }
        let mut fixed = node.bounds.clone();
        for (k, &j) in self.mip.binaries.iter().enumerate() {
            fixed[k] = (rounded[j], rounded[j]);
        }
        let probe = Node {
            id: node.id,
            depth: node.depth,
            bounds: fixed,
            parent_bound: node.parent_bound,
            hint: hint.map(|h| Rc::new(h.clone())),
        };
        let sol = self.solve_node(&probe)?;
        if sol.status != LpStatus::Optimal {
            return Ok(None);
        }
        let mut point = sol.primal;
        for &j in &self.mip.binaries {
            point[j] = point[j].round();
        }
        let obj = self.mip.lp.objective_value(&point);
        Ok(Some((point, obj)))
    }
}

/// Solves a mixed-binary program by LP-based branch and bound.
pub fn solve_mip(mip: &MixedIntegerProgram, config: &MipConfig) -> Result<MipSolution, MipError> {
    if !(config.gap_tolerance > 0.0) {
        return Err(MipError::BadGap(config.gap_tolerance));
    }
    mip.lp.check()?;
    let started = Instant::now();

    let mut search = Search {
        mip,
        config,
        lp: mip.lp.clone(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        incumbent: None,
        pruned_bound: f64::INFINITY,
        lp_iterations: 0,
    };

    let root = Node {
        id: 0,
        depth: 0,
        bounds: mip
            .binaries
            .iter()
            .map(|&j| (mip.lp.lower()[j], mip.lp.upper()[j]))
            .collect(),
        parent_bound: f64::NEG_INFINITY,
        hint: None,
    };
    let mut frontier = match config.node_selection {
        NodeSelection::BestBound => Frontier::Heap(BinaryHeap::new()),
        _ => Frontier::Stack(Vec::new()),
    };
    frontier.push(root);

    let mut next_id = 1usize;
    let mut nodes = 0usize;
    let mut root_bound = f64::NEG_INFINITY;
    let mut global_bound = f64::NEG_INFINITY;
    let mut log = Vec::new();
    let mut hit_limit = false;
    let mut longest_node = Duration::ZERO;

    while !frontier.is_empty() {
        if started.elapsed() >= config.time_limit || config.node_limit.is_some_and(|l| nodes >= l) {
            hit_limit = true;
            break;
        }
        let Some(node) = frontier.pop() else { break };
        if node.parent_bound >= search.cutoff() {
            search.pruned_bound = search.pruned_bound.min(node.parent_bound);
            continue;
        }

        let node_start = Instant::now();
        let sol = search.solve_node(&node)?;
        nodes += 1;

        let (bound, decision) = match sol.status {
            LpStatus::Infeasible => (f64::INFINITY, NodeDecision::Infeasible),
            LpStatus::Unbounded => return Err(MipError::Unbounded),
            LpStatus::IterationLimit => return Err(MipError::LpIterationLimit(node.id)),
            LpStatus::Optimal => {
                let bound = sol.objective.max(node.parent_bound);
                if node.id == 0 {
                    root_bound = sol.objective;
                }
                if bound >= search.cutoff() {
                    search.pruned_bound = search.pruned_bound.min(bound);
                    (bound, NodeDecision::PrunedByBound)
                } else if let Some(k) = search.pick_branch(&sol.primal) {
                    let j = mip.binaries[k];
                    let hint = sol.basis.map(Rc::new);
                    let mut down = node.bounds.clone();
                    down[k] = (node.bounds[k].0, 0.0);
                    let mut up = node.bounds.clone();
                    up[k] = (1.0, node.bounds[k].1);
                    let frac = sol.primal[j] - sol.primal[j].floor();
                    let mut children = [(down, 0u8), (up, 1u8)];
                    // Under a stack the last push is explored first; dive
                    // toward the nearer integer.
                    if frac < 0.5 {
                        children.reverse();
                    }
                    for (bounds, _) in children {
                        frontier.push(Node {
                            id: next_id,
                            depth: node.depth + 1,
                            bounds,
                            parent_bound: bound,
                            hint: hint.clone(),
                        });
                        next_id += 1;
                    }
                    (bound, NodeDecision::Branched { var: j })
                } else {
                    if let Some((point, obj)) = search.try_incumbent(&node, &sol.primal, sol.basis.as_ref())? {
                        let better = search.incumbent.as_ref().is_none_or(|(_, best)| obj < *best);
                        if better {
                            debug!("node {}: new incumbent {obj}", node.id);
                            let first = search.incumbent.is_none();
                            search.incumbent = Some((point, obj));
                            if first && config.node_selection == NodeSelection::DiveThenBestBound {
                                frontier = frontier.into_heap();
                            }
                        }
                    }
                    (bound, NodeDecision::Integral)
                }
            }
        };

        longest_node = longest_node.max(node_start.elapsed());
        let open_min = frontier.min_bound().min(search.pruned_bound);
        let incumbent_obj = search.incumbent.as_ref().map(|(_, o)| *o);
        let candidate = open_min.min(incumbent_obj.unwrap_or(f64::INFINITY));
        if candidate.is_finite() || frontier.is_empty() {
            global_bound = global_bound.max(candidate);
        }
        if config.record_log {
            log.push(NodeRecord {
                node: node.id,
                depth: node.depth,
                bound,
                global_bound,
                incumbent: incumbent_obj,
                decision,
            });
        }
        if let Some(obj) = incumbent_obj {
            if relative_gap(obj, global_bound) <= config.gap_tolerance {
                break;
            }
        }
    }

    let wall_time = started.elapsed();
    let (status, incumbent, objective, bound, gap) = match search.incumbent {
        Some((point, obj)) => {
            let bound = if frontier.is_empty() {
                search.pruned_bound.min(obj).max(global_bound)
            } else {
                global_bound
            };
            let bound = bound.min(obj);
            let gap = relative_gap(obj, bound);
            let status = if gap <= config.gap_tolerance {
                MipStatus::OptimalWithinGap
            } else if hit_limit {
                MipStatus::FeasibleTimeLimit
            } else {
                MipStatus::OptimalWithinGap
            };
            (status, Some(point), Some(obj), bound, Some(gap))
        }
        None if hit_limit => (MipStatus::NoIncumbentTimeLimit, None, None, global_bound, None),
        None => (MipStatus::Infeasible, None, None, f64::INFINITY, None),
    };

    Ok(MipSolution {
        status,
        incumbent,
        objective,
        bound,
        gap,
        nodes,
        lp_iterations: search.lp_iterations,
        root_bound,
        wall_time,
        longest_node,
        log,
    })
}

/// Solves only the LP relaxation at the root.
pub fn root_relaxation(mip: &MixedIntegerProgram, config: &SimplexConfig) -> Result<LpSolution, LpError> {
    solve_lp(&mip.lp, config)
}
