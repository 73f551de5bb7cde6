//! Bounded-variable primal revised simplex.
//!
//! Every row `a_i x (<=,=,>=) b_i` gets a logical variable `r_i = a_i x` whose
//! bounds encode the relation, so the working system is `A x - r = 0` with an
//! all-logical starting basis `B = -I`. Phase one minimizes the sum of basic
//! bound violations with a composite cost that is rebuilt every iteration;
//! phase two minimizes the true objective. The basis inverse is kept dense and
//! updated in product form, with a fresh Gauss-Jordan inversion every
//! `refactor_interval` pivots.

use std::time::Instant;

use log::trace;

use super::model::{LinearProgram, Relation};
use super::{Basis, LpSolution, LpStatus, SimplexConfig, SolveStats, VarState};

const SINGULAR_TOL: f64 = 1e-11;

pub(crate) struct Simplex<'a> {
    cfg: &'a SimplexConfig,
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    header: Vec<usize>,
    binv: Vec<f64>,
    since_refactor: usize,
    stats: SolveStats,
}

enum Step {
    Flip,
    Pivot { row: usize, to_upper: bool },
}

impl<'a> Simplex<'a> {
    pub(crate) fn new(lp: &LinearProgram, cfg: &'a SimplexConfig) -> Self {
        let n = lp.num_vars();
        let m = lp.num_constraints();

        let mut counts = vec![0usize; n + 1];
        for row in lp.constraints() {
            for &(j, _) in &row.coeffs {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let nnz = col_start[n];
        let mut fill = counts;
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, row) in lp.constraints().iter().enumerate() {
            for &(j, a) in &row.coeffs {
                col_row[fill[j]] = i;
                col_val[fill[j]] = a;
                fill[j] += 1;
            }
        }

        let mut lo = lp.lower().to_vec();
        let mut up = lp.upper().to_vec();
        let mut cost = lp.objective().to_vec();
        for row in lp.constraints() {
            let (l, u) = match row.relation {
                Relation::Le => (f64::NEG_INFINITY, row.rhs),
                Relation::Ge => (row.rhs, f64::INFINITY),
                Relation::Eq => (row.rhs, row.rhs),
            };
            lo.push(l);
            up.push(u);
            cost.push(0.0);
        }

        Simplex {
            cfg,
            n,
            m,
            col_start,
            col_row,
            col_val,
            lo,
            up,
            cost,
            x: vec![0.0; n + m],
            state: vec![VarState::AtLower; n + m],
            header: Vec::with_capacity(m),
            binv: Vec::new(),
            since_refactor: 0,
            stats: SolveStats::default(),
        }
    }

    fn default_state(&self, j: usize) -> VarState {
        let (l, u) = (self.lo[j], self.up[j]);
        match (l.is_finite(), u.is_finite()) {
            (true, true) if self.cost[j] < 0.0 && l != u => VarState::AtUpper,
            (true, _) => VarState::AtLower,
            (false, true) => VarState::AtUpper,
            (false, false) => VarState::Zero,
        }
    }

    /// Repairs a nonbasic state against the current bounds and returns the value.
    fn place_nonbasic(&mut self, j: usize, wanted: VarState) {
        let (l, u) = (self.lo[j], self.up[j]);
        let st = match wanted {
            VarState::AtLower if l.is_finite() => VarState::AtLower,
            VarState::AtUpper if u.is_finite() => VarState::AtUpper,
            VarState::Zero if !l.is_finite() && !u.is_finite() => VarState::Zero,
            _ => self.default_state(j),
        };
        self.state[j] = st;
        self.x[j] = match st {
            VarState::AtLower => l,
            VarState::AtUpper => u,
            _ => 0.0,
        };
    }

    pub(crate) fn cold_start(&mut self) {
        for j in 0..self.n {
            let st = self.default_state(j);
            self.place_nonbasic(j, st);
        }
        self.header.clear();
        for i in 0..self.m {
            self.state[self.n + i] = VarState::Basic;
            self.header.push(self.n + i);
        }
        let m = self.m;
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
        }
        self.since_refactor = 0;
        self.recompute_basics();
    }

    /// Installs a basis hint. Returns false when the hint cannot be used.
    pub(crate) fn warm_start(&mut self, hint: &Basis) -> bool {
        let total = self.n + self.m;
        if hint.states.len() != total || hint.header.len() != self.m {
            return false;
        }
        let mut seen = vec![false; total];
        for &v in &hint.header {
            if v >= total || seen[v] || hint.states[v] != VarState::Basic {
                return false;
            }
            seen[v] = true;
        }
        if hint.states.iter().filter(|s| **s == VarState::Basic).count() != self.m {
            return false;
        }
        for j in 0..total {
            if hint.states[j] == VarState::Basic {
                self.state[j] = VarState::Basic;
            } else {
                self.place_nonbasic(j, hint.states[j]);
            }
        }
        self.header = hint.header.clone();
        if !self.refactor() {
            return false;
        }
        self.recompute_basics();
        true
    }

    fn column_dot(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|k| y[self.col_row[k]] * self.col_val[k])
                .sum()
        } else {
            -y[j - self.n]
        }
    }

    /// `B^-1 a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                let (r, a) = (self.col_row[k], self.col_val[k]);
                for (i, out) in alpha.iter_mut().enumerate() {
                    *out += self.binv[i * m + r] * a;
                }
            }
        } else {
            let r = j - self.n;
            for (i, out) in alpha.iter_mut().enumerate() {
                *out = -self.binv[i * m + r];
            }
        }
        alpha
    }

    /// `c_B^T B^-1`.
    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, b) in y.iter_mut().zip(row) {
                    *yk += c * b;
                }
            }
        }
        y
    }

    /// Rebuilds `B^-1` from scratch. Returns false on a singular basis.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        self.stats.refactorizations += 1;
        self.since_refactor = 0;
        let mut b = vec![0.0; m * m];
        for (p, &v) in self.header.iter().enumerate() {
            if v < self.n {
                for k in self.col_start[v]..self.col_start[v + 1] {
                    b[self.col_row[k] * m + p] = self.col_val[k];
                }
            } else {
                b[(v - self.n) * m + p] = -1.0;
            }
        }
        match invert(&mut b, m) {
            Some(inv) => {
                self.binv = inv;
                true
            }
            None => false,
        }
    }

    fn refresh(&mut self) {
        if self.refactor() {
            self.recompute_basics();
        } else {
            trace!("singular basis during refactor, restarting from logical basis");
            self.cold_start();
        }
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut w = vec![0.0; m];
        for j in 0..self.n + self.m {
            if self.state[j] == VarState::Basic || self.x[j] == 0.0 {
                continue;
            }
            let v = self.x[j];
            if j < self.n {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    w[self.col_row[k]] -= self.col_val[k] * v;
                }
            } else {
                w[j - self.n] += v;
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let val: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            self.x[self.header[p]] = val;
        }
    }

    fn basic_infeasibility(&self) -> f64 {
        let tol = self.cfg.feasibility_tol;
        self.header
            .iter()
            .map(|&v| {
                let (x, l, u) = (self.x[v], self.lo[v], self.up[v]);
                if x < l - tol {
                    l - x
                } else if x > u + tol {
                    x - u
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn phase_costs(&self, phase_one: bool) -> Vec<f64> {
        let tol = self.cfg.feasibility_tol;
        self.header
            .iter()
            .map(|&v| {
                if phase_one {
                    if self.x[v] < self.lo[v] - tol {
                        -1.0
                    } else if self.x[v] > self.up[v] + tol {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    self.cost[v]
                }
            })
            .collect()
    }

    /// Picks an entering variable. Returns (var, reduced cost).
    fn price(&self, y: &[f64], phase_one: bool, bland: bool, rejected: &[bool]) -> Option<(usize, f64)> {
        let tol = self.cfg.optimality_tol;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n + self.m {
            let st = self.state[j];
            if st == VarState::Basic || rejected[j] || self.lo[j] == self.up[j] {
                continue;
            }
            let c = if phase_one { 0.0 } else { self.cost[j] };
            let d = c - self.column_dot(y, j);
            let eligible = match st {
                VarState::AtLower => d < -tol,
                VarState::AtUpper => d > tol,
                VarState::Zero => d.abs() > tol,
                VarState::Basic => false,
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some((j, d));
            }
            if best.is_none_or(|(_, bd)| d.abs() > bd.abs()) {
                best = Some((j, d));
            }
        }
        best
    }

    /// Chooses the step length and leaving row for entering `q` moving in `dir`.
    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], phase_one: bool, bland: bool) -> (f64, Step) {
        let ftol = self.cfg.feasibility_tol;
        let ptol = self.cfg.pivot_tol;
        let span = self.up[q] - self.lo[q];
        let flip_t = if span.is_finite() { span } else { f64::INFINITY };

        // (row, exact ratio, relaxed ratio, leaves at upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if a.abs() <= ptol {
                continue;
            }
            let delta = -dir * a;
            let v = self.header[i];
            let (val, l, u) = (self.x[v], self.lo[v], self.up[v]);
            if phase_one && val < l - ftol {
                if delta > 0.0 {
                    let t = (l - val) / delta;
                    cands.push((i, t, t, false));
                }
            } else if phase_one && val > u + ftol {
                if delta < 0.0 {
                    let t = (u - val) / delta;
                    cands.push((i, t, t, true));
                }
            } else if delta > 0.0 {
                if u.is_finite() {
                    let t = ((u - val) / delta).max(0.0);
                    let relaxed = ((u + ftol - val) / delta).max(0.0);
                    cands.push((i, t, relaxed, true));
                }
            } else if l.is_finite() {
                let t = ((l - val) / delta).max(0.0);
                let relaxed = ((l - ftol - val) / delta).max(0.0);
                cands.push((i, t, relaxed, false));
            }
        }

        let chosen = if bland {
            let tmin = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let tie = 1e-12 * tmin.max(1.0);
            cands
                .iter()
                .filter(|c| c.1 <= tmin + tie)
                .min_by_key(|c| self.header[c.0])
                .copied()
        } else {
            // Harris two-pass: bound relaxed by the feasibility tolerance, then
            // the largest pivot among rows inside the relaxed step.
            let tmax = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 <= tmax)
                .max_by(|a, b| {
                    alpha[a.0]
                        .abs()
                        .total_cmp(&alpha[b.0].abs())
                        .then_with(|| b.0.cmp(&a.0))
                })
                .copied()
        };

        match chosen {
            Some((row, t, _, to_upper)) if t < flip_t => (t, Step::Pivot { row, to_upper }),
            _ => (flip_t, Step::Flip),
        }
    }

    fn pivot(&mut self, row: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[row];
        let (head, rest) = self.binv.split_at_mut(row * m);
        let (prow, tail) = rest.split_at_mut(m);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        for (i, chunk) in head.chunks_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (a, b) in chunk.iter_mut().zip(prow.iter()) {
                    *a -= f * b;
                }
            }
        }
        for (off, chunk) in tail.chunks_mut(m).enumerate() {
            let f = alpha[row + 1 + off];
            if f != 0.0 {
                for (a, b) in chunk.iter_mut().zip(prow.iter()) {
                    *a -= f * b;
                }
            }
        }
        self.since_refactor += 1;
    }

    pub(crate) fn run(&mut self) -> LpStatus {
        let started = Instant::now();
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut rejected = vec![false; self.n + self.m];
        let mut any_rejected = false;
        let mut stuck = 0usize;

        let status = loop {
            if self.stats.iterations >= self.cfg.max_iterations {
                break LpStatus::IterationLimit;
            }
            if self.since_refactor >= self.cfg.refactor_interval {
                self.refresh();
            }

            let infeas = self.basic_infeasibility();
            let phase_one = infeas > 0.0;
            let cb = self.phase_costs(phase_one);
            let y = self.btran(&cb);

            let Some((q, d)) = self.price(&y, phase_one, bland, &rejected) else {
                if any_rejected && stuck < 3 {
                    rejected.iter_mut().for_each(|r| *r = false);
                    any_rejected = false;
                    stuck += 1;
                    self.refresh();
                    continue;
                }
                if self.since_refactor > 0 {
                    // Confirm with a fresh factorization before concluding.
                    self.refresh();
                    continue;
                }
                break if phase_one {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            };

            let dir = if d < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);
            let (t, step) = self.ratio_test(q, dir, &alpha, phase_one, bland);

            if t.is_infinite() {
                if phase_one {
                    rejected[q] = true;
                    any_rejected = true;
                    continue;
                }
                if self.since_refactor > 0 {
                    self.refresh();
                    continue;
                }
                break LpStatus::Unbounded;
            }

            self.stats.iterations += 1;
            if phase_one {
                self.stats.phase_one_iterations += 1;
            }
            if bland {
                self.stats.bland_pivots += 1;
            }

            self.x[q] += dir * t;
            for (i, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let v = self.header[i];
                    self.x[v] -= dir * a * t;
                }
            }

            match step {
                Step::Flip => {
                    let at_upper = dir > 0.0;
                    self.state[q] = if at_upper { VarState::AtUpper } else { VarState::AtLower };
                    self.x[q] = if at_upper { self.up[q] } else { self.lo[q] };
                }
                Step::Pivot { row, to_upper } => {
                    let leaving = self.header[row];
                    if to_upper {
                        self.state[leaving] = VarState::AtUpper;
                        self.x[leaving] = self.up[leaving];
                    } else {
                        self.state[leaving] = VarState::AtLower;
                        self.x[leaving] = self.lo[leaving];
                    }
                    self.state[q] = VarState::Basic;
                    self.header[row] = q;
                    self.pivot(row, &alpha);
                    if any_rejected {
                        rejected.iter_mut().for_each(|r| *r = false);
                        any_rejected = false;
                    }
                }
            }

            if t <= 1e-12 {
                degenerate += 1;
                if degenerate > self.cfg.stall_threshold {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
        };
        trace!(
            "simplex finished: {:?} after {} iterations in {:?}",
            status,
            self.stats.iterations,
            started.elapsed()
        );
        status
    }

    pub(crate) fn into_solution(mut self, lp: &LinearProgram, status: LpStatus) -> LpSolution {
        let n = self.n;
        let primal: Vec<f64> = self.x[..n].to_vec();
        let objective = match status {
            LpStatus::Optimal | LpStatus::IterationLimit => lp.objective_value(&primal),
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
        };
        let (dual, reduced_costs) = if status == LpStatus::Optimal {
            let cb = self.phase_costs(false);
            let y = self.btran(&cb);
            let d: Vec<f64> = (0..n).map(|j| self.cost[j] - self.column_dot(&y, j)).collect();
            (Some(y), Some(d))
        } else {
            (None, None)
        };
        let basis = Basis {
            states: std::mem::take(&mut self.state),
            header: std::mem::take(&mut self.header),
        };
        LpSolution {
            status,
            objective,
            primal,
            dual,
            reduced_costs,
            basis: Some(basis),
            stats: self.stats,
        }
    }

    pub(crate) fn stats_mut(&mut self) -> &mut SolveStats {
        &mut self.stats
    }
}

/// Gauss-Jordan inversion with partial pivoting of a dense row-major matrix.
fn invert(a: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for c in 0..m {
        let (p, pv) = (c..m)
            .map(|r| (r, a[r * m + c].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if pv < SINGULAR_TOL {
            return None;
        }
        if p != c {
            for k in 0..m {
                a.swap(p * m + k, c * m + k);
                inv.swap(p * m + k, c * m + k);
            }
        }
        let d = a[c * m + c];
        for k in 0..m {
            a[c * m + k] /= d;
            inv[c * m + k] /= d;
        }
        for r in 0..m {
            if r == c {
                continue;
            }
            let f = a[r * m + c];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                a[r * m + k] -= f * a[c * m + k];
                inv[r * m + k] -= f * inv[c * m + k];
            }
        }
    }
    Some(inv)
}
