//! Vertex-enumeration oracle for small LPs with finite variable bounds.

#![allow(dead_code)]

use ots_solver::{LinearProgram, Relation};

/// Hyperplane `a . x = b` used as a candidate active constraint.
struct Plane {
    a: Vec<f64>,
    b: f64,
}

fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-10 {
            return None;
        }
        m.swap(c, p);
        rhs.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                if f != 0.0 {
                    for k in c..n {
                        m[r][k] -= f * m[c][k];
                    }
                    rhs[r] -= f * rhs[c];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

fn combinations(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        combinations(n, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Minimum objective over all vertices, `None` when no vertex is feasible.
/// Every variable must have finite bounds.
pub fn vertex_min(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let mut planes = Vec::new();
    for j in 0..n {
        assert!(lp.lower()[j].is_finite() && lp.upper()[j].is_finite());
        for b in [lp.lower()[j], lp.upper()[j]] {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            planes.push(Plane { a, b });
        }
    }
    for row in lp.constraints() {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        planes.push(Plane { a, b: row.rhs });
    }
    let mut sets = Vec::new();
    combinations(planes.len(), n, 0, &mut Vec::new(), &mut sets);
    let mut best: Option<f64> = None;
    for set in sets {
        let m = set.iter().map(|&i| planes[i].a.clone()).collect();
        let rhs = set.iter().map(|&i| planes[i].b).collect();
        let Some(x) = solve_square(m, rhs) else { continue };
        if lp.max_violation(&x) <= 1e-7 {
            let obj = lp.objective_value(&x);
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    }
    best
}

/// Minimum over every 0/1 assignment of `binaries`, each evaluated by vertex
/// enumeration.
pub fn binary_enum_min(lp: &LinearProgram, binaries: &[usize]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << binaries.len()) {
        let mut fixed = lp.clone();
        for (k, &j) in binaries.iter().enumerate() {
            let v = f64::from((mask >> k) & 1);
            fixed.set_bounds(j, v, v);
        }
        if let Some(obj) = vertex_min(&fixed) {
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    }
    best
}

pub fn relation(k: u8) -> Relation {
    match k % 3 {
        0 => Relation::Le,
        1 => Relation::Ge,
        _ => Relation::Eq,
    }
}
