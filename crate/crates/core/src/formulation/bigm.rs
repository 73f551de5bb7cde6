use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use super::FormulationError;
use crate::grid::Network;
use crate::knn::TrainingRecord;

/// Big-M pair for one switchable line, in MW.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MBound {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundsKind {
    /// Weighted shortest path over closed lines; provably valid.
    ShortestPath,
    /// Observed angle differences; tight but not guaranteed valid.
    Historic,
    Custom,
}

/// One optional bound per switchable line. `None` marks a line that must be
/// fixed in service, since only such lines may go unbounded.
#[derive(Clone, Debug, PartialEq)]
pub struct BigMBounds {
    kind: BoundsKind,
    bounds: Vec<Option<MBound>>,
}

impl BigMBounds {
    pub fn new(kind: BoundsKind, bounds: Vec<Option<MBound>>) -> Self {
        BigMBounds { kind, bounds }
    }

    pub fn kind(&self) -> BoundsKind {
        self.kind
    }

    pub fn get(&self, k: usize) -> Option<MBound> {
        self.bounds.get(k).copied().flatten()
    }

    pub fn as_slice(&self) -> &[Option<MBound>] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// Every bound multiplied by `factor`, as a custom family.
    pub fn scaled(&self, factor: f64) -> Self {
        BigMBounds {
            kind: BoundsKind::Custom,
            bounds: self
                .bounds
                .iter()
                .map(|b| {
                    b.map(|m| MBound {
                        lower: m.lower * factor,
                        upper: m.upper * factor,
                    })
                })
                .collect(),
        }
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Entry(0.0, source)]);
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry(nd, v));
            }
        }
    }
    dist
}

/// Symmetric bounds `M = b * (shortest path length)` where each closed line
/// weighs `capacity / b`. The graph holds the non-switchable lines plus
/// `extra_closed` (switchable positions), which themselves get no bound.
pub fn shortest_path_bigm(net: &Network, extra_closed: &BTreeSet<usize>) -> Result<BigMBounds, FormulationError> {
    if let Some(&k) = extra_closed.iter().find(|&&k| k >= net.num_switchable()) {
        return Err(FormulationError::UnknownSwitchable(k));
    }
    let mut adj = vec![Vec::new(); net.num_buses()];
    let extra: BTreeSet<usize> = extra_closed.iter().map(|&k| net.switchable()[k]).collect();
    for (l, line) in net.lines().iter().enumerate() {
        if !line.switchable || extra.contains(&l) {
            let (a, b) = net.endpoints(line);
            let w = line.capacity / net.susceptance_mw(line);
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
    }
    let mut from_source: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut bounds = Vec::with_capacity(net.num_switchable());
    for k in 0..net.num_switchable() {
        if extra_closed.contains(&k) {
            bounds.push(None);
            continue;
        }
        let line = net.switchable_line(k);
        let (a, b) = net.endpoints(line);
        let dist = from_source.entry(a).or_insert_with(|| dijkstra(&adj, a));
        if !dist[b].is_finite() {
            return Err(FormulationError::Disconnected {
                from: line.from_bus,
                to: line.to_bus,
            });
        }
        let m = net.susceptance_mw(line) * dist[b];
        bounds.push(Some(MBound { lower: -m, upper: m }));
    }
    Ok(BigMBounds::new(BoundsKind::ShortestPath, bounds))
}

/// Bounds from the extreme susceptance-scaled angle differences observed on
/// each line over the training records in which it was open. Lines never
/// observed open keep their `fallback` bound.
pub fn historic_angle_bigm<R: Borrow<TrainingRecord>>(
    training: &[R],
    net: &Network,
    fallback: &BigMBounds,
) -> BigMBounds {
    let bounds = (0..net.num_switchable())
        .map(|k| {
            let line = net.switchable_line(k);
            let (a, b) = net.endpoints(line);
            let diffs = training
                .iter()
                .map(Borrow::borrow)
                .filter(|r| !r.statuses[k])
                .map(|r| r.angles[a] - r.angles[b]);
            let (lo, hi) = diffs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
            if lo > hi {
                return fallback.get(k);
            }
            let s = net.susceptance_mw(line);
            Some(MBound {
                lower: s * lo,
                upper: s * hi,
            })
        })
        .collect();
    BigMBounds::new(BoundsKind::Historic, bounds)
}
