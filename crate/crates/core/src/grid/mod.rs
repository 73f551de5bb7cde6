//! Power network data model and structural validation.

mod matpower;
mod native;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use matpower::{parse_matpower_case, parse_sidecar, Sidecar};
pub use native::{parse_native, write_native};

/// External bus label as it appears in input files.
pub type BusId = u32;

#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    pub id: BusId,
    /// Load in MW.
    pub demand: f64,
    pub slack: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub bus: BusId,
    /// Marginal cost per MWh.
    pub cost: f64,
    pub pmin: f64,
    pub pmax: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub id: u32,
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// Per-unit on the network base.
    pub susceptance: f64,
    /// Thermal limit in MW.
    pub capacity: f64,
    pub switchable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoSlack,
    MultipleSlack(Vec<BusId>),
    DuplicateBus(BusId),
    DuplicateLine(u32),
    NegativeDemand(BusId),
    NonFinite(String),
    GeneratorLimits { index: usize, pmin: f64, pmax: f64 },
    UnknownGeneratorBus { index: usize, bus: BusId },
    UnknownLineBus { line: u32, bus: BusId },
    SelfLoop(u32),
    NonPositiveSusceptance(u32),
    NonPositiveCapacity(u32),
    BadBase(f64),
    /// Buses not reachable from the first bus over non-switchable lines.
    Disconnected(Vec<BusId>),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoSlack => write!(f, "no slack bus declared"),
            Violation::MultipleSlack(ids) => write!(f, "multiple slack buses: {ids:?}"),
            Violation::DuplicateBus(id) => write!(f, "duplicate bus id {id}"),
            Violation::DuplicateLine(id) => write!(f, "duplicate line id {id}"),
            Violation::NegativeDemand(id) => write!(f, "bus {id} has negative demand"),
            Violation::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Violation::GeneratorLimits { index, pmin, pmax } => {
                write!(f, "generator {index} has limits [{pmin}, {pmax}], need 0 <= pmin <= pmax")
            }
            Violation::UnknownGeneratorBus { index, bus } => {
                write!(f, "generator {index} references unknown bus {bus}")
            }
            Violation::UnknownLineBus { line, bus } => write!(f, "line {line} references unknown bus {bus}"),
            Violation::SelfLoop(id) => write!(f, "line {id} connects a bus to itself"),
            Violation::NonPositiveSusceptance(id) => write!(f, "line {id} has non-positive susceptance"),
            Violation::NonPositiveCapacity(id) => write!(f, "line {id} has non-positive capacity"),
            Violation::BadBase(b) => write!(f, "base power {b} is not positive"),
            Violation::Disconnected(ids) => {
                write!(f, "non-switchable subgraph disconnected; unreachable buses {ids:?}")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: unknown bus {bus}")]
    UnknownBus { line: usize, bus: BusId },
    #[error("line {line}: duplicate line id {id}")]
    DuplicateLineId { line: usize, id: u32 },
    #[error("branch {branch}: zero capacity line")]
    ZeroCapacity { branch: usize },
    #[error("branch {branch}: zero reactance")]
    ZeroReactance { branch: usize },
    #[error("missing base declaration")]
    MissingBase,
    #[error("missing annotation: {0}")]
    MissingAnnotation(String),
    #[error("{}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// A DC network. Buses, generators and lines keep their declaration order;
/// switchable lines are addressed by their position among switchable lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    base_mva: f64,
    buses: Vec<Bus>,
    generators: Vec<Generator>,
    lines: Vec<Line>,
    index: HashMap<BusId, usize>,
    switchable: Vec<usize>,
}

impl Network {
    /// Assembles a network without checking it. See [`Network::validated`].
    pub fn new(base_mva: f64, buses: Vec<Bus>, generators: Vec<Generator>, lines: Vec<Line>) -> Self {
        let mut index = HashMap::new();
        for (i, b) in buses.iter().enumerate() {
            index.entry(b.id).or_insert(i);
        }
        let switchable = lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.switchable)
            .map(|(i, _)| i)
            .collect();
        Network {
            base_mva,
            buses,
            generators,
            lines,
            index,
            switchable,
        }
    }

    pub fn validated(
        base_mva: f64,
        buses: Vec<Bus>,
        generators: Vec<Generator>,
        lines: Vec<Line>,
    ) -> Result<Self, GridError> {
        let net = Network::new(base_mva, buses, generators, lines);
        let report = net.validate();
        if report.is_empty() {
            Ok(net)
        } else {
            Err(GridError::Invalid(report))
        }
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    /// Internal index of an external bus id.
    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn slack_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.slack)
    }

    /// Line positions of the switchable lines, in declaration order.
    pub fn switchable(&self) -> &[usize] {
        &self.switchable
    }

    pub fn num_switchable(&self) -> usize {
        self.switchable.len()
    }

    /// The `k`-th switchable line.
    pub fn switchable_line(&self, k: usize) -> &Line {
        &self.lines[self.switchable[k]]
    }

    /// Susceptance in MW per radian.
    pub fn susceptance_mw(&self, line: &Line) -> f64 {
        self.base_mva * line.susceptance
    }

    /// Internal endpoints of a line. Panics on an unvalidated network with
    /// dangling references.
    pub fn endpoints(&self, line: &Line) -> (usize, usize) {
        (self.index[&line.from_bus], self.index[&line.to_bus])
    }

    pub fn baseline_demand(&self) -> Vec<f64> {
        self.buses.iter().map(|b| b.demand).collect()
    }

    /// SHA-256 of the canonical native serialization, as lowercase hex.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(write_native(self).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Every invariant violation, empty when the network is well-formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            out.push(Violation::BadBase(self.base_mva));
        }
        let slacks: Vec<BusId> = self.buses.iter().filter(|b| b.slack).map(|b| b.id).collect();
        match slacks.len() {
            0 => out.push(Violation::NoSlack),
            1 => {}
            _ => out.push(Violation::MultipleSlack(slacks)),
        }
        let mut seen = HashSet::new();
        for b in &self.buses {
            if !seen.insert(b.id) {
                out.push(Violation::DuplicateBus(b.id));
            }
            if !b.demand.is_finite() {
                out.push(Violation::NonFinite(format!("demand of bus {}", b.id)));
            } else if b.demand < 0.0 {
                out.push(Violation::NegativeDemand(b.id));
            }
        }
        for (i, g) in self.generators.iter().enumerate() {
            if !self.index.contains_key(&g.bus) {
                out.push(Violation::UnknownGeneratorBus { index: i, bus: g.bus });
            }
            if ![g.cost, g.pmin, g.pmax].iter().all(|v| v.is_finite()) {
                out.push(Violation::NonFinite(format!("generator {i}")));
            } else if g.pmin < 0.0 || g.pmin > g.pmax {
                out.push(Violation::GeneratorLimits {
                    index: i,
                    pmin: g.pmin,
                    pmax: g.pmax,
                });
            }
        }
        let mut seen = HashSet::new();
        for l in &self.lines {
            if !seen.insert(l.id) {
                out.push(Violation::DuplicateLine(l.id));
            }
            for bus in [l.from_bus, l.to_bus] {
                if !self.index.contains_key(&bus) {
                    out.push(Violation::UnknownLineBus { line: l.id, bus });
                }
            }
            if l.from_bus == l.to_bus {
                out.push(Violation::SelfLoop(l.id));
            }
            if !(l.susceptance > 0.0) || !l.susceptance.is_finite() {
                out.push(Violation::NonPositiveSusceptance(l.id));
            }
            if !(l.capacity > 0.0) || !l.capacity.is_finite() {
                out.push(Violation::NonPositiveCapacity(l.id));
            }
        }
        let unreached = self.unreachable_over_fixed_lines();
        if !unreached.is_empty() {
            out.push(Violation::Disconnected(unreached));
        }
        out
    }

    fn unreachable_over_fixed_lines(&self) -> Vec<BusId> {
        let n = self.buses.len();
        if n == 0 {
            return Vec::new();
        }
        let mut adj = vec![Vec::new(); n];
        for l in self.lines.iter().filter(|l| !l.switchable) {
            if let (Some(&a), Some(&b)) = (self.index.get(&l.from_bus), self.index.get(&l.to_bus)) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        (0..n).filter(|&i| !seen[i]).map(|i| self.buses[i].id).collect()
    }
}
