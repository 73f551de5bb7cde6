mod common;

use std::collections::BTreeSet;
use std::fs;

use common::*;
use ots_core::bench::oracle::{brute_force, for_each_topology};
use ots_core::bench::{
    bound_table, build_training_store, classify, emit_report, expand_grid, gap_percent, generate_instances,
    leave_one_out, load_network, savings, write_bound_table, BenchError, Class, EvalSettings, ExperimentConfig,
    GridEntry, RunReport,
};
use ots_core::formulation::{evaluate_cost, historic_angle_bigm, shortest_path_bigm, Cost};
use ots_core::grid::Network;
use ots_core::knn::{Method, TrainingRecord, TrainingStore};
use ots_solver::SimplexConfig;
use proptest::prelude::*;

fn settings(grid: Vec<GridEntry>) -> EvalSettings {
    EvalSettings {
        grid,
        gap_tolerance: 1e-4,
        mip: exact_mip(),
        workers: 1,
        exclude_time_limited: false,
    }
}

fn store_for(name: &str, count: usize, seed: u64, perturbation: f64) -> (Network, TrainingStore) {
    let net = fixture(name);
    let family = generate_instances(&net, name, count, seed, perturbation);
    let (store, summary) = build_training_store(&net, &family, &exact_mip(), 1).unwrap();
    assert!(summary.infeasible.is_empty());
    assert_eq!(summary.time_limited, 0);
    (net, store)
}

#[test]
fn zero_perturbation_reproduces_the_baseline() {
    let net = fixture("mesh9.net");
    let fam = generate_instances(&net, "mesh9", 4, 17, 0.0);
    assert!(fam.demands.iter().all(|d| *d == net.baseline_demand()));
    assert_eq!(fam.hash, net.content_hash());
}

#[test]
fn same_seed_same_family() {
    let net = fixture("grid10.net");
    assert_eq!(generate_instances(&net, "g", 30, 3, 0.1), generate_instances(&net, "g", 30, 3, 0.1));
    assert_ne!(generate_instances(&net, "g", 30, 3, 0.1), generate_instances(&net, "g", 30, 4, 0.1));
}

#[test]
fn five_hundred_samples_stay_within_ten_percent() {
    let net = fixture("case118.m");
    let base = net.baseline_demand();
    let fam = generate_instances(&net, "case118", 500, 2024, 0.10);
    assert_eq!(fam.len(), 500);
    for d in &fam.demands {
        for (v, b) in d.iter().zip(&base) {
            assert!(*v >= 0.9 * b - 1e-12 && *v <= 1.1 * b + 1e-12);
        }
    }
    // Buses move independently: two loaded buses do not scale together.
    let loaded: Vec<usize> = (0..base.len()).filter(|&i| base[i] > 0.0).take(2).collect();
    let ratio = |d: &Vec<f64>, i: usize| d[i] / base[i];
    assert!(fam.demands.iter().any(|d| (ratio(d, loaded[0]) - ratio(d, loaded[1])).abs() > 1e-3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samples_respect_the_band(seed in any::<u64>(), p in 0.0f64..0.5, count in 1usize..20) {
        let net = fixture("mesh8.net");
        let base = net.baseline_demand();
        let fam = generate_instances(&net, "m", count, seed, p);
        prop_assert_eq!(fam.len(), count);
        for d in &fam.demands {
            for (v, b) in d.iter().zip(&base) {
                prop_assert!(*v >= (1.0 - p) * b - 1e-9 && *v <= (1.0 + p) * b + 1e-9);
            }
        }
    }
}

#[test]
fn oracle_matches_independent_enumeration() {
    let cfg = SimplexConfig::default();
    for name in ["braess3.net", "braess6.net", "mesh8.net", "case14.m"] {
        let net = fixture(name);
        for demand in &generate_instances(&net, name, 2, 6, 0.1).demands {
            let fast = brute_force(&net, demand, &cfg).unwrap();
            let (slow, _) = enumerate_min(&net, demand);
            assert_eq!(fast.evaluated, 1 << net.num_switchable());
            assert!(rel_diff(fast.cost.value().unwrap(), slow.value().unwrap()) <= 1e-9, "{name}");
            let replay = evaluate_cost(&net, demand, fast.statuses.as_ref().unwrap(), &cfg).unwrap();
            assert!(rel_diff(replay.value().unwrap(), slow.value().unwrap()) <= 1e-9);
        }
    }
}

#[test]
fn oracle_visits_every_topology_once() {
    let net = fixture("mesh8.net");
    let cfg = SimplexConfig::default();
    let demand = net.baseline_demand();
    let mut seen = BTreeSet::new();
    for_each_topology(&net, &demand, &cfg, |x, d| {
        assert!(seen.insert(x.to_vec()));
        let want = evaluate_cost(&net, &demand, x, &cfg).unwrap();
        match (d, want) {
            (None, Cost::Infinite) => {}
            (Some(d), Cost::Finite(c)) => assert!(rel_diff(d.cost, c) <= 1e-9),
            other => panic!("{other:?}"),
        }
    })
    .unwrap();
    assert_eq!(seen.len(), 256);
}

#[test]
fn oracle_refuses_large_networks() {
    let net = fixture("hard30.net");
    let err = brute_force(&net, &net.baseline_demand(), &SimplexConfig::default()).unwrap_err();
    assert!(matches!(err, BenchError::TooManyTopologies(30)));
}

#[test]
fn training_store_matches_the_oracle() {
    let (net, store) = store_for("mesh8.net", 5, 21, 0.1);
    let cfg = SimplexConfig::default();
    for r in &store.records {
        let best = brute_force(&net, &r.demand, &cfg).unwrap();
        assert!(rel_diff(r.cost, best.cost.value().unwrap()) <= 1e-6);
        let replay = evaluate_cost(&net, &r.demand, &r.statuses, &cfg).unwrap().value().unwrap();
        assert!(rel_diff(replay, r.cost) <= 1e-6);
        assert_eq!(r.angles[net.slack_index().unwrap()], 0.0);
    }
}

#[test]
fn identical_instances_share_one_topology() {
    let (_, store) = store_for("grid10.net", 4, 1, 0.0);
    let topologies: BTreeSet<&Vec<bool>> = store.records.iter().map(|r| &r.statuses).collect();
    assert_eq!(topologies.len(), 1);
}

#[test]
fn family_for_another_network_rejected() {
    let net = fixture("mesh8.net");
    let fam = generate_instances(&fixture("mesh9.net"), "mesh9", 2, 1, 0.1);
    assert!(matches!(build_training_store(&net, &fam, &exact_mip(), 1), Err(BenchError::Invalid(_))));
}

#[test]
fn gap_and_classification() {
    assert!((gap_percent(101.0, 100.0) - 1.0).abs() < 1e-12);
    assert_eq!(classify(Cost::Finite(100.005), 100.0, 1e-4), Class::Optimal);
    assert_eq!(classify(Cost::Finite(100.02), 100.0, 1e-4), Class::Suboptimal);
    assert_eq!(classify(Cost::Infinite, 100.0, 1e-4), Class::Infeasible);
    assert_eq!(classify(Cost::Finite(0.0), 0.0, 1e-4), Class::Optimal);
}

#[test]
fn grid_expansion_and_labels() {
    let grid = expand_grid(&[Method::Ben, Method::KnnD, Method::AllHatM], &[1, 5]);
    let labels: Vec<String> = grid.iter().map(GridEntry::label).collect();
    assert_eq!(labels, vec!["ben", "knn-d_k1", "knn-d_k5", "all-hatm"]);
}

#[test]
fn ben_scored_against_itself_is_always_optimal() {
    let (net, store) = store_for("braess6.net", 6, 2, 0.1);
    let report = leave_one_out(&net, &store, &settings(expand_grid(&[Method::Ben], &[]))).unwrap();
    let agg = &report.aggregates()[0];
    assert_eq!((agg.instances, agg.n_opt, agg.n_sub, agg.n_infeasible), (6, 6, 0, 0));
    assert_eq!(agg.gap_max, None);
}

fn strip_times(r: &RunReport) -> Vec<String> {
    r.cells
        .iter()
        .map(|c| format!("{} {} {:?} {} {:?} {} {:?}", c.instance, c.entry.label(), c.class, c.cost, c.gap_pct, c.fixed, c.statuses))
        .collect()
}

#[test]
fn leave_one_out_partitions_and_repeats() {
    let (net, store) = store_for("grid10.net", 12, 5, 0.1);
    let grid = expand_grid(&[Method::KnnD, Method::KnnLp, Method::KnnBm, Method::KnnBhatM, Method::AllHatM], &[1, 3, 11]);
    let a = leave_one_out(&net, &store, &settings(grid.clone())).unwrap();
    assert_eq!(a.cells.len(), 12 * grid.len());
    for agg in a.aggregates() {
        assert_eq!(agg.n_opt + agg.n_sub + agg.n_infeasible, 12);
        if let Some(g) = agg.gap_max {
            assert!(g > 0.0);
        }
    }
    let knn_d = a.aggregates().into_iter().find(|g| g.entry.label() == "knn-d_k1").unwrap();
    assert!(knn_d.n_sub + knn_d.n_infeasible >= 1);
    let b = leave_one_out(&net, &store, &settings(grid)).unwrap();
    assert_eq!(strip_times(&a), strip_times(&b));
}

#[test]
fn oversized_k_rejected() {
    let (net, store) = store_for("braess6.net", 4, 2, 0.1);
    let err = leave_one_out(&net, &store, &settings(expand_grid(&[Method::KnnD], &[4]))).unwrap_err();
    assert!(matches!(err, BenchError::Invalid(_)));
    let one = TrainingStore::new("x", &net, store.records[..1].to_vec());
    assert!(leave_one_out(&net, &one, &settings(vec![])).is_err());
}

#[test]
fn beating_the_reference_is_fatal_unless_time_limited() {
    let (net, mut store) = store_for("braess6.net", 4, 2, 0.1);
    store.records[2].cost *= 1.05;
    let grid = expand_grid(&[Method::Ben], &[]);
    let err = leave_one_out(&net, &store, &settings(grid.clone())).unwrap_err();
    assert!(matches!(err, BenchError::Dominance { instance: 2, .. }), "{err}");
    store.records[2].time_limited = true;
    let report = leave_one_out(&net, &store, &settings(grid)).unwrap();
    assert_eq!(report.aggregates()[0].n_opt, 4);
}

#[test]
fn excluded_time_limited_records_leave_training() {
    let (net, mut store) = store_for("braess6.net", 5, 2, 0.1);
    store.records[0].time_limited = true;
    let mut s = settings(expand_grid(&[Method::KnnD], &[4]));
    s.exclude_time_limited = true;
    assert!(leave_one_out(&net, &store, &s).is_err());
    s.grid = expand_grid(&[Method::KnnD], &[3]);
    assert_eq!(leave_one_out(&net, &store, &s).unwrap().cells.len(), 5);
}

#[test]
fn report_files() {
    let (net, store) = store_for("braess6.net", 5, 3, 0.1);
    let dir = tempfile::tempdir().unwrap();

    let empty = leave_one_out(&net, &store, &settings(vec![])).unwrap();
    emit_report(&empty, dir.path()).unwrap();
    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    let long = fs::read_to_string(dir.path().join("instances.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1);
    assert_eq!(long.lines().count(), 1);
    assert!(agg.starts_with("method,k,instances,n_opt,n_sub,n_infeasible,gap_max_pct,mean_time_s"));

    let grid = expand_grid(&[Method::Ben, Method::KnnLp], &[2]);
    let report = leave_one_out(&net, &store, &settings(grid.clone())).unwrap();
    emit_report(&report, dir.path()).unwrap();
    let long = fs::read_to_string(dir.path().join("instances.csv")).unwrap();
    assert_eq!(long.lines().count(), 1 + 5 * grid.len());
    for entry in &grid {
        let text = fs::read_to_string(dir.path().join(format!("curve_{}.csv", entry.label()))).unwrap();
        let rows: Vec<(f64, usize)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let (t, n) = l.split_once(',').unwrap();
                (t.parse().unwrap(), n.parse().unwrap())
            })
            .collect();
        assert_eq!(rows.last().unwrap().1, 5);
        assert!(rows.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
    }
}

#[test]
fn bound_table_on_the_three_bus_fixture() {
    let (net, store) = store_for("braess3.net", 4, 7, 0.1);
    let rows = bound_table(&net, &store, 2).unwrap();
    let exact = shortest_path_bigm(&net, &BTreeSet::new()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].exact, exact.get(0).unwrap().upper);
    // The line is open in every record, so unanimity always fixes it.
    assert!(store.records.iter().all(|r| r.statuses == vec![false]));
    assert_eq!(rows[0].updated_fixed, 4);
    assert_eq!(rows[0].updated, None);
    let mut hi = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..4 {
        let training: Vec<&TrainingRecord> = store.records.iter().enumerate().filter(|(i, _)| *i != t).map(|(_, r)| r).collect();
        let m = historic_angle_bigm(&training, &net, &exact).get(0).unwrap();
        hi = (hi.0.min(m.upper), hi.1.max(m.upper));
    }
    let got = rows[0].historic_upper.unwrap();
    assert_eq!((got.min, got.max), hi);

    let mut buf = Vec::new();
    write_bound_table(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("line,from_bus,to_bus,exact_m,updated_min"));
    assert_eq!(text.lines().count(), 2);
    assert!(bound_table(&net, &store, 4).is_err());
}

#[test]
fn bound_table_matches_shortest_paths_when_lines_stay_free() {
    let (net, store) = store_for("grid10.net", 8, 3, 0.1);
    let exact = shortest_path_bigm(&net, &BTreeSet::new()).unwrap();
    for row in bound_table(&net, &store, 3).unwrap() {
        let j = (0..net.num_switchable()).find(|&j| net.switchable_line(j).id == row.line).unwrap();
        assert_eq!(row.exact, exact.get(j).unwrap().upper);
        if let Some(r) = row.updated {
            assert!(r.min <= r.max && r.max <= row.exact * (1.0 + 1e-12));
        }
        assert!(row.updated_fixed + usize::from(row.updated.is_some()) >= 1);
    }
}

#[test]
fn braess_family_saves_money() {
    let (net, store) = store_for("braess6.net", 10, 4, 0.1);
    let rep = savings(&net, &store.records, &SimplexConfig::default()).unwrap();
    assert_eq!(rep.excluded, 0);
    assert!(rep.mean.unwrap() > 0.0);
    assert!(rep.per_instance.iter().all(|s| s.unwrap() >= -1e-9));
}

#[test]
fn infeasible_all_on_instances_are_excluded() {
    let net = fixture("braess3.net");
    // 400 MW exceeds what the closed network can deliver through its limits.
    let record = |load: f64, cost: f64| TrainingRecord {
        instance: 0,
        demand: vec![0.0, 0.0, load],
        statuses: vec![false],
        angles: vec![0.0; 3],
        cost,
        time_limited: false,
    };
    let cfg = SimplexConfig::default();
    assert_eq!(evaluate_cost(&net, &[0.0, 0.0, 400.0], &[true], &cfg).unwrap(), Cost::Infinite);
    let rep = savings(&net, &[record(400.0, 1.0), record(100.0, 1000.0)], &cfg).unwrap();
    assert_eq!(rep.excluded, 1);
    assert_eq!(rep.per_instance[0], None);
    let all_on = evaluate_cost(&net, &[0.0, 0.0, 100.0], &[true], &cfg).unwrap().value().unwrap();
    assert!((rep.mean.unwrap() - 100.0 * (all_on - 1000.0) / all_on).abs() < 1e-9);
}

#[test]
fn experiment_config() {
    let cfg = ExperimentConfig::parse("network = \"a.net\"\ninstances = 5\nmethods = [\"ben\", \"knn-d\"]\nk_grid = [1, 2]\n").unwrap();
    assert_eq!(cfg.perturbation, 0.10);
    assert_eq!(cfg.gap_tolerance, 1e-4);
    assert_eq!(cfg.time_limit, 3600.0);
    assert_eq!(cfg.workers, 1);
    assert_eq!(cfg.methods().unwrap(), vec![Method::Ben, Method::KnnD]);
    assert_eq!(cfg.mip_config().time_limit.as_secs(), 3600);
    assert!(ExperimentConfig::parse("network = \"a\"\ninstances = 5\nmethods = []\ncolour = 1\n").is_err());
    assert!(ExperimentConfig::parse("network = \"a\"\ninstances = 5\nmethods = [\"magic\"]\n").is_err());
    assert!(ExperimentConfig::parse("network = \"a\"\ninstances = 0\nmethods = []\n").is_err());
}

#[test]
fn case_files_pick_up_their_sidecar() {
    let net = load_network(&data("case14.m"), None).unwrap();
    assert_eq!(net.num_switchable(), 7);
    assert_eq!(net.slack_index(), Some(0));
    let explicit = load_network(&data("case14.m"), Some(&data("case118.switch")));
    assert!(explicit.is_err());
}
