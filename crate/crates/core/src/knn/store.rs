use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Network;

const FORMAT: &str = "ots-training";
const VERSION: u32 = 1;

/// One solved instance: demand, optimal statuses and angles, cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    /// Position of the instance in its family.
    pub instance: usize,
    pub demand: Vec<f64>,
    /// Closed flag per switchable line.
    pub statuses: Vec<bool>,
    /// Radians per bus.
    pub angles: Vec<f64>,
    pub cost: f64,
    /// The solve hit its time limit; the record holds the incumbent.
    #[serde(default)]
    pub time_limited: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreHeader {
    pub format: String,
    pub version: u32,
    pub network: String,
    /// Content hash of the network the records were solved on.
    pub hash: String,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("store is empty")]
    Empty,
    #[error("not a training store (format '{0}')")]
    Format(String),
    #[error("store was built for network hash {found}, this network hashes to {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("record {index} does not match the network dimensions")]
    Dimensions { index: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingStore {
    pub header: StoreHeader,
    pub records: Vec<TrainingRecord>,
}

impl TrainingStore {
    pub fn new(network_name: &str, net: &Network, records: Vec<TrainingRecord>) -> Self {
        TrainingStore {
            header: StoreHeader {
                format: FORMAT.into(),
                version: VERSION,
                network: network_name.into(),
                hash: net.content_hash(),
            },
            records,
        }
    }

    /// Writes the header line followed by one JSON record per line.
    pub fn write<W: Write>(&self, mut out: W) -> Result<(), StoreError> {
        let json = |e| StoreError::Json { line: 0, source: e };
        writeln!(out, "{}", serde_json::to_string(&self.header).map_err(json)?)?;
        for r in &self.records {
            writeln!(out, "{}", serde_json::to_string(r).map_err(json)?)?;
        }
        Ok(())
    }

    /// Reads a store and rejects it unless it was built for `net`.
    pub fn read<R: BufRead>(input: R, net: &Network) -> Result<Self, StoreError> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
            Ok(s) => !s.trim().is_empty(),
            Err(_) => true,
        });
        let (_, first) = lines.next().ok_or(StoreError::Empty)?;
        let header: StoreHeader =
            serde_json::from_str(&first?).map_err(|source| StoreError::Json { line: 1, source })?;
        if header.format != FORMAT {
            return Err(StoreError::Format(header.format));
        }
        let expected = net.content_hash();
        if header.hash != expected {
            return Err(StoreError::HashMismatch {
                expected,
                found: header.hash,
            });
        }
        let mut records = Vec::new();
        for (no, line) in lines {
            let r: TrainingRecord =
                serde_json::from_str(&line?).map_err(|source| StoreError::Json { line: no + 1, source })?;
            if r.demand.len() != net.num_buses()
                || r.angles.len() != net.num_buses()
                || r.statuses.len() != net.num_switchable()
            {
                return Err(StoreError::Dimensions { index: records.len() });
            }
            records.push(r);
        }
        Ok(TrainingStore { header, records })
    }
}
