use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::Network;

/// Demand vectors sampled around a network's baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFamily {
    pub network: String,
    pub hash: String,
    pub seed: u64,
    pub perturbation: f64,
    pub demands: Vec<Vec<f64>>,
}

impl InstanceFamily {
    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }
}

/// Draws each bus demand independently and uniformly from
/// `[(1 - p) d, (1 + p) d]` around the baseline `d`.
pub fn generate_instances(net: &Network, name: &str, count: usize, seed: u64, perturbation: f64) -> InstanceFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = net.baseline_demand();
    let demands = (0..count)
        .map(|_| {
            base.iter()
                .map(|&d| d * (1.0 + perturbation * rng.gen_range(-1.0..=1.0)))
                .collect()
        })
        .collect();
    InstanceFamily {
        network: name.to_string(),
        hash: net.content_hash(),
        seed,
        perturbation,
        demands,
    }
}
