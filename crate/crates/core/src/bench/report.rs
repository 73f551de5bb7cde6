use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{BenchError, RunReport};
use crate::formulation::{historic_angle_bigm, shortest_path_bigm};
use crate::grid::{BusId, Network};
use crate::knn::{nearest_neighbors, unanimity_bounds, TrainingRecord, TrainingStore};

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

/// Writes `aggregate.csv`, `instances.csv` and one `curve_<entry>.csv` per
/// grid entry into `dir`.
///
/// Columns:
/// - aggregate: method, k, instances, n_opt, n_sub, n_infeasible,
///   gap_max_pct, mean_time_s, mean_fixed, n_same_topology
/// - instances: instance, method, k, class, cost, reference_cost, gap_pct,
///   time_s, nodes, fixed, same_topology, bound_validity_unproven, statuses
/// - curve: time_s, solved (instances finished by that time)
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir)?;
    let mut agg = csv::Writer::from_path(dir.join("aggregate.csv"))?;
    agg.write_record([
        "method",
        "k",
        "instances",
        "n_opt",
        "n_sub",
        "n_infeasible",
        "gap_max_pct",
        "mean_time_s",
        "mean_fixed",
        "n_same_topology",
    ])?;
    for a in report.aggregates() {
        agg.write_record([
            a.entry.method.to_string(),
            a.entry.k.map_or_else(String::new, |k| k.to_string()),
            a.instances.to_string(),
            a.n_opt.to_string(),
            a.n_sub.to_string(),
            a.n_infeasible.to_string(),
            opt(a.gap_max),
            format!("{:.6}", a.mean_time),
            format!("{}", a.mean_fixed),
            a.n_same_topology.to_string(),
        ])?;
    }
    agg.flush()?;

    let mut long = csv::Writer::from_path(dir.join("instances.csv"))?;
    long.write_record([
        "instance",
        "method",
        "k",
        "class",
        "cost",
        "reference_cost",
        "gap_pct",
        "time_s",
        "nodes",
        "fixed",
        "same_topology",
        "bound_validity_unproven",
        "statuses",
    ])?;
    for c in &report.cells {
        long.write_record([
            c.instance.to_string(),
            c.entry.method.to_string(),
            c.entry.k.map_or_else(String::new, |k| k.to_string()),
            c.class.name().to_string(),
            c.cost.to_string(),
            c.reference.to_string(),
            opt(c.gap_pct),
            format!("{:.6}", c.wall_time.as_secs_f64()),
            c.nodes.to_string(),
            c.fixed.to_string(),
            c.same_topology.to_string(),
            c.bound_validity_unproven.to_string(),
            c.statuses
                .as_ref()
                .map(|s| s.iter().map(|&b| if b { '1' } else { '0' }).collect())
                .unwrap_or_default(),
        ])?;
    }
    long.flush()?;

    for &entry in &report.grid {
        let mut times: Vec<f64> = report.cells_for(entry).map(|c| c.wall_time.as_secs_f64()).collect();
        times.sort_by(f64::total_cmp);
        let mut curve = csv::Writer::from_path(dir.join(format!("curve_{}.csv", entry.label())))?;
        curve.write_record(["time_s", "solved"])?;
        for (i, t) in times.iter().enumerate() {
            curve.write_record([format!("{t:.6}"), (i + 1).to_string()])?;
        }
        curve.flush()?;
    }
    Ok(())
}

/// Closed interval of observed values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn add(slot: &mut Option<Range>, v: f64) {
        *slot = Some(match *slot {
            Some(r) => Range {
                min: r.min.min(v),
                max: r.max.max(v),
            },
            None => Range { min: v, max: v },
        });
    }
}

/// Big-M comparison for one switchable line across held-out instances.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub line: u32,
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// Spanning shortest-path bound (symmetric).
    pub exact: f64,
    /// Shortened shortest-path bound over instances where the line stayed free.
    pub updated: Option<Range>,
    /// Instances in which unanimity fixed the line.
    pub updated_fixed: usize,
    pub historic_upper: Option<Range>,
    /// Negated historic lower bound.
    pub historic_neg_lower: Option<Range>,
}

/// For each record held out in turn, computes the bounds the exact method,
/// the unanimity-shortened method and the historic-angle method would use
/// with `k` neighbours, and summarizes them per line.
pub fn bound_table(net: &Network, store: &TrainingStore, k: usize) -> Result<Vec<BoundRow>, BenchError> {
    let records = &store.records;
    if records.len() < 2 || k == 0 || k >= records.len() {
        return Err(BenchError::Invalid(format!(
            "bound table needs 1 <= k < {} records",
            records.len()
        )));
    }
    let exact = shortest_path_bigm(net, &BTreeSet::new())?;
    let mut rows: Vec<BoundRow> = (0..net.num_switchable())
        .map(|j| {
            let line = net.switchable_line(j);
            BoundRow {
                line: line.id,
                from_bus: line.from_bus,
                to_bus: line.to_bus,
                exact: exact.get(j).map_or(0.0, |m| m.upper),
                updated: None,
                updated_fixed: 0,
                historic_upper: None,
                historic_neg_lower: None,
            }
        })
        .collect();
    for (t, held_out) in records.iter().enumerate() {
        let training: Vec<&TrainingRecord> = records.iter().enumerate().filter(|&(i, _)| i != t).map(|(_, r)| r).collect();
        let nb = nearest_neighbors(&training, &held_out.demand, k).expect("k checked");
        let agree = unanimity_bounds(&nb.indices.iter().map(|&i| &training[i].statuses).collect::<Vec<_>>());
        let updated = shortest_path_bigm(net, &agree.closed().collect())?;
        let historic = historic_angle_bigm(&training, net, &exact);
        for (j, row) in rows.iter_mut().enumerate() {
            if agree.fixed.contains_key(&j) {
                row.updated_fixed += 1;
            } else if let Some(m) = updated.get(j) {
                Range::add(&mut row.updated, m.upper);
            }
            if let Some(m) = historic.get(j) {
                Range::add(&mut row.historic_upper, m.upper);
                Range::add(&mut row.historic_neg_lower, -m.lower);
            }
        }
    }
    Ok(rows)
}

pub fn write_bound_table<W: Write>(rows: &[BoundRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "line",
        "from_bus",
        "to_bus",
        "exact_m",
        "updated_min",
        "updated_max",
        "updated_fixed",
        "historic_upper_min",
        "historic_upper_max",
        "historic_neg_lower_min",
        "historic_neg_lower_max",
    ])?;
    let lo = |r: Option<Range>| opt(r.map(|r| r.min));
    let hi = |r: Option<Range>| opt(r.map(|r| r.max));
    for r in rows {
        w.write_record([
            r.line.to_string(),
            r.from_bus.to_string(),
            r.to_bus.to_string(),
            r.exact.to_string(),
            lo(r.updated),
            hi(r.updated),
            r.updated_fixed.to_string(),
            lo(r.historic_upper),
            hi(r.historic_upper),
            lo(r.historic_neg_lower),
            hi(r.historic_neg_lower),
        ])?;
    }
    w.flush()?;
    Ok(())
}
