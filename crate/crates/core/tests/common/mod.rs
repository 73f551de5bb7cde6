#![allow(dead_code)]

use std::path::PathBuf;

use ots_core::bench::load_network;
use ots_core::formulation::{evaluate_cost, Cost};
use ots_core::grid::{Bus, Generator, Line, Network};
use ots_solver::{MipConfig, SimplexConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn fixture(name: &str) -> Network {
    load_network(&data(name), None).unwrap()
}

/// Fixtures small enough to enumerate, with their switchable counts.
pub const ORACLE_FIXTURES: [&str; 6] = ["braess3.net", "braess6.net", "case14.m", "mesh8.net", "mesh9.net", "grid10.net"];

pub fn exact_mip() -> MipConfig {
    MipConfig {
        gap_tolerance: 1e-9,
        ..MipConfig::default()
    }
}

/// Bit `k` of `mask` is the status of switchable line `k`.
pub fn topology(mask: u64, s: usize) -> Vec<bool> {
    (0..s).map(|k| mask >> k & 1 == 1).collect()
}

/// Minimum dispatch cost over every topology, each solved from scratch.
pub fn enumerate_min(net: &Network, demand: &[f64]) -> (Cost, Option<Vec<bool>>) {
    let s = net.num_switchable();
    let cfg = SimplexConfig::default();
    let mut best = (Cost::Infinite, None);
    for mask in 0..1u64 << s {
        let x = topology(mask, s);
        let c = evaluate_cost(net, demand, &x, &cfg).unwrap();
        if c < best.0 {
            best = (c, Some(x));
        }
    }
    best
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// A connected random network: a fixed spanning tree plus switchable chords.
pub fn random_network(seed: u64, buses: usize, chords: usize) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bus_list: Vec<Bus> = (0..buses)
        .map(|i| Bus {
            id: i as u32 + 1,
            demand: if i == 0 { 0.0 } else { rng.gen_range(0.0..40.0f64).round() },
            slack: i == 0,
        })
        .collect();
    let total: f64 = bus_list.iter().map(|b| b.demand).sum();
    let generators = (0..rng.gen_range(2..4))
        .map(|g| Generator {
            bus: if g == 0 { 1 } else { rng.gen_range(1..=buses as u32) },
            cost: rng.gen_range(5.0..60.0f64).round(),
            pmin: 0.0,
            pmax: (total * rng.gen_range(0.5..1.2)).round() + 1.0,
        })
        .collect();
    let mut lines = Vec::new();
    let mut add = |from: u32, to: u32, switchable: bool, rng: &mut ChaCha8Rng| {
        lines.push(Line {
            id: lines.len() as u32 + 1,
            from_bus: from,
            to_bus: to,
            susceptance: rng.gen_range(1.0..20.0f64).round() / 2.0,
            capacity: rng.gen_range(10.0..80.0f64).round(),
            switchable,
        });
    };
    for i in 1..buses {
        let parent = rng.gen_range(0..i);
        add(parent as u32 + 1, i as u32 + 1, false, &mut rng);
    }
    for _ in 0..chords {
        let a = rng.gen_range(0..buses);
        let mut b = rng.gen_range(0..buses - 1);
        if b >= a {
            b += 1;
        }
        add(a as u32 + 1, b as u32 + 1, true, &mut rng);
    }
    Network::validated(1.0, bus_list, generators, lines).unwrap()
}

/// Single-source shortest distances by Bellman-Ford over an undirected edge list.
pub fn bellman_ford(n: usize, edges: &[(usize, usize, f64)], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for &(a, b, w) in edges {
            for (u, v) in [(a, b), (b, a)] {
                if dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}
