//! Bounded-variable primal revised simplex on `[A -I](x, s) = 0`.
//!
//! Every row gets a logical `s_k = a_k'x` whose bounds encode the sense.
//! Phase 1 minimises the sum of bound infeasibilities of the basic variables
//! (stepping to the first breakpoint), phase 2 the true cost. The basis is
//! factored through its kernel (basic structural columns on the rows whose
//! logicals are nonbasic) and updated in product form between refactors.

use super::{Basis, LpError, LpOptions, LpProblem, LpSolution, LpStatus, VarStatus};
use crate::linalg::{Lu, Matrix};
use crate::model::Sense;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR: usize = 64;
const DEGENERATE_STREAK: usize = 40;

struct Simplex<'a> {
    lp: &'a LpProblem,
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    up: Vec<f64>,
    status: Vec<VarStatus>,
    value: Vec<f64>,
    head: Vec<usize>,
    factor: Factor,
    etas: Vec<Eta>,
    since_refactor: usize,
}

/// `B0` with basic logicals on rows `R_s` and basic structurals `S` on the
/// remaining rows `R_k`: `x_S = K^{-1} b[R_k]` with `K = A[R_k, S]`, and
/// `x_L = A[R_s, S] x_S - b[R_s]`.
#[derive(Default)]
struct Factor {
    lu: Option<Lu>,
    /// Head positions and variable ids of the kernel columns.
    kpos: Vec<usize>,
    kcols: Vec<usize>,
    /// Kernel rows in kernel order.
    krows: Vec<usize>,
    /// Head position of each row's basic logical, `usize::MAX` for kernel rows.
    lpos: Vec<usize>,
}

/// Pivot on head position `r` with entering column `B^{-1} a_q = alpha`.
struct Eta {
    r: usize,
    pivot: f64,
    /// Nonzero `alpha_i`, `i != r`.
    col: Vec<(usize, f64)>,
}

pub(super) fn solve(lp: &LpProblem, warm: Option<&Basis>, opts: &LpOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut s = Simplex::new(lp);
    let warmed = warm.map(|b| s.load_basis(b)).unwrap_or(false);
    if !warmed {
        s.slack_basis();
    }
    s.run(opts.max_iter)
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LpProblem) -> Self {
        let n = lp.num_cols();
        let m = lp.num_rows();
        let mut cols = vec![Vec::new(); n];
        for (k, r) in lp.rows.iter().enumerate() {
            for &(j, a) in &r.coeffs {
                if a != 0.0 {
                    cols[j].push((k, a));
                }
            }
        }
        let mut lo = Vec::with_capacity(n + m);
        let mut up = Vec::with_capacity(n + m);
        for b in &lp.bounds {
            lo.push(b.lower);
            up.push(b.upper);
        }
        for r in &lp.rows {
            let (l, u) = match r.sense {
                Sense::Ge => (r.rhs, f64::INFINITY),
                Sense::Le => (f64::NEG_INFINITY, r.rhs),
                Sense::Eq => (r.rhs, r.rhs),
            };
            lo.push(l);
            up.push(u);
        }
        Simplex {
            lp,
            m,
            n,
            cols,
            lo,
            up,
            status: vec![VarStatus::AtLower; n + m],
            value: vec![0.0; n + m],
            head: Vec::new(),
            factor: Factor::default(),
            etas: Vec::new(),
            since_refactor: 0,
        }
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.lp.cost[j]
        } else {
            0.0
        }
    }

    fn nonbasic_status(&self, j: usize) -> VarStatus {
        if self.lo[j].is_finite() {
            VarStatus::AtLower
        } else if self.up[j].is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        }
    }

    fn nonbasic_value(&self, j: usize, st: VarStatus) -> f64 {
        match st {
            VarStatus::AtLower if self.lo[j].is_finite() => self.lo[j],
            VarStatus::AtUpper if self.up[j].is_finite() => self.up[j],
            _ => {
                if self.lo[j].is_finite() {
                    self.lo[j]
                } else if self.up[j].is_finite() {
                    self.up[j]
                } else {
                    0.0
                }
            }
        }
    }

    fn normalised_status(&self, j: usize, st: VarStatus) -> VarStatus {
        match st {
            VarStatus::Basic => VarStatus::Basic,
            VarStatus::AtLower if self.lo[j].is_finite() => VarStatus::AtLower,
            VarStatus::AtUpper if self.up[j].is_finite() => VarStatus::AtUpper,
            _ => self.nonbasic_status(j),
        }
    }

    fn slack_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        for j in 0..n {
            let st = self.nonbasic_status(j);
            self.status[j] = st;
            self.value[j] = self.nonbasic_value(j, st);
        }
        self.head = (n..n + m).collect();
        for k in 0..m {
            self.status[n + k] = VarStatus::Basic;
        }
        let ok = self.refactor();
        debug_assert!(ok);
    }

    fn load_basis(&mut self, b: &Basis) -> bool {
        let (n, m) = (self.n, self.m);
        if b.columns.len() != n || b.rows.len() != m {
            return false;
        }
        let all: Vec<VarStatus> = b.columns.iter().chain(&b.rows).copied().collect();
        if all.iter().filter(|&&s| s == VarStatus::Basic).count() != m {
            return false;
        }
        self.head.clear();
        for (j, &st) in all.iter().enumerate() {
            let st = self.normalised_status(j, st);
            self.status[j] = st;
            if st == VarStatus::Basic {
                self.head.push(j);
            } else {
                self.value[j] = self.nonbasic_value(j, st);
            }
        }
        self.refactor()
    }

    /// Refactors the current basis; `false` if it is singular.
    fn refactor(&mut self) -> bool {
        let (n, m) = (self.n, self.m);
        let mut f = Factor { lpos: vec![usize::MAX; m], ..Factor::default() };
        for (i, &j) in self.head.iter().enumerate() {
            if j < n {
                f.kpos.push(i);
                f.kcols.push(j);
            } else {
                f.lpos[j - n] = i;
            }
        }
        let mut kindex = vec![usize::MAX; m];
        for r in 0..m {
            if f.lpos[r] == usize::MAX {
                kindex[r] = f.krows.len();
                f.krows.push(r);
            }
        }
        let k = f.kcols.len();
        if f.krows.len() != k {
            return false;
        }
        let mut kmat = Matrix::zeros(k, k);
        for (t, &j) in f.kcols.iter().enumerate() {
            for &(r, a) in &self.cols[j] {
                if kindex[r] != usize::MAX {
                    kmat.set(kindex[r], t, a);
                }
            }
        }
        match Lu::factor(kmat) {
            Some(lu) => f.lu = Some(lu),
            None => return false,
        }
        self.factor = f;
        self.etas.clear();
        self.since_refactor = 0;
        self.compute_basic_values();
        true
    }

    fn compute_basic_values(&mut self) {
        let m = self.m;
        // r = -N x_N
        let mut r = vec![0.0; m];
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let v = self.value[j];
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for &(k, a) in &self.cols[j] {
                    r[k] -= a * v;
                }
            } else {
                r[j - self.n] += v;
            }
        }
        let xb = self.ftran_vec(&r);
        for (i, &j) in self.head.iter().enumerate() {
            self.value[j] = xb[i];
        }
    }

    /// `B^{-1} b` for `b` over rows; the result is indexed by head position.
    fn ftran_vec(&self, b: &[f64]) -> Vec<f64> {
        let f = &self.factor;
        let mut out = vec![0.0; self.m];
        let mut xs: Vec<f64> = f.krows.iter().map(|&r| b[r]).collect();
        if let Some(lu) = &f.lu {
            lu.solve(&mut xs);
        }
        let mut acc = vec![0.0; self.m];
        for (t, &j) in f.kcols.iter().enumerate() {
            out[f.kpos[t]] = xs[t];
            if xs[t] != 0.0 {
                for &(r, a) in &self.cols[j] {
                    acc[r] += a * xs[t];
                }
            }
        }
        for (r, &p) in f.lpos.iter().enumerate() {
            if p != usize::MAX {
                out[p] = acc[r] - b[r];
            }
        }
        for e in &self.etas {
            let v = out[e.r] / e.pivot;
            out[e.r] = v;
            if v != 0.0 {
                for &(i, a) in &e.col {
                    out[i] -= a * v;
                }
            }
        }
        out
    }

    /// `B^{-1} a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.m];
        if j < self.n {
            for &(k, a) in &self.cols[j] {
                b[k] = a;
            }
        } else {
            b[j - self.n] = -1.0;
        }
        self.ftran_vec(&b)
    }

    /// `y' = c_B' B^{-1}`.
    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let f = &self.factor;
        let mut u = cb.to_vec();
        for e in self.etas.iter().rev() {
            let s: f64 = e.col.iter().map(|&(i, a)| u[i] * a).sum();
            u[e.r] = (u[e.r] - s) / e.pivot;
        }
        let mut y = vec![0.0; self.m];
        for (r, &p) in f.lpos.iter().enumerate() {
            if p != usize::MAX {
                y[r] = -u[p];
            }
        }
        let mut rhs: Vec<f64> = f
            .kcols
            .iter()
            .zip(&f.kpos)
            .map(|(&j, &p)| u[p] - self.cols[j].iter().filter(|&&(r, _)| f.lpos[r] != usize::MAX).map(|&(r, a)| a * y[r]).sum::<f64>())
            .collect();
        if let Some(lu) = &f.lu {
            lu.solve_transpose(&mut rhs);
        }
        for (&r, v) in f.krows.iter().zip(rhs) {
            y[r] = v;
        }
        y
    }

    fn reduced_cost(&self, j: usize, cost: f64, y: &[f64]) -> f64 {
        if j < self.n {
            cost - self.cols[j].iter().map(|&(k, a)| a * y[k]).sum::<f64>()
        } else {
            cost + y[j - self.n]
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.value[j];
        if v < self.lo[j] - PRIMAL_TOL {
            self.lo[j] - v
        } else if v > self.up[j] + PRIMAL_TOL {
            v - self.up[j]
        } else {
            0.0
        }
    }

    fn run(&mut self, max_iter: usize) -> Result<LpSolution, LpError> {
        let total = self.n + self.m;
        let mut iter = 0usize;
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if iter >= max_iter {
                return Err(LpError::IterationLimit(max_iter));
            }
            if self.since_refactor >= REFACTOR && !self.refactor() {
                self.slack_basis();
            }
            let phase1 = self.head.iter().any(|&j| self.infeasibility(j) > 0.0);
            let cb: Vec<f64> = self
                .head
                .iter()
                .map(|&j| {
                    if phase1 {
                        let v = self.value[j];
                        if v < self.lo[j] - PRIMAL_TOL {
                            -1.0
                        } else if v > self.up[j] + PRIMAL_TOL {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        self.cost(j)
                    }
                })
                .collect();
            let y = self.btran(&cb);

            // Pricing.
            let mut entering: Option<(usize, f64, f64)> = None; // (j, dir, |d|)
            for j in 0..total {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lo[j] == self.up[j] {
                    continue;
                }
                let c = if phase1 { 0.0 } else { self.cost(j) };
                let d = self.reduced_cost(j, c, &y);
                let dir = match st {
                    VarStatus::AtLower if d < -DUAL_TOL => 1.0,
                    VarStatus::AtUpper if d > DUAL_TOL => -1.0,
                    VarStatus::Free if d.abs() > DUAL_TOL => -d.signum(),
                    _ => continue,
                };
                let score = d.abs();
                match entering {
                    None => entering = Some((j, dir, score)),
                    Some((_, _, best)) if !bland && score > best => entering = Some((j, dir, score)),
                    _ => {}
                }
                if bland {
                    break;
                }
            }

            let Some((q, dir, _)) = entering else {
                if self.since_refactor > 0 {
                    if !self.refactor() {
                        self.slack_basis();
                    }
                    continue;
                }
                if phase1 {
                    return Ok(self.finish(LpStatus::Infeasible, None, iter));
                }
                return Ok(self.finish(LpStatus::Optimal, None, iter));
            };

            let alpha = self.ftran(q);
            let range = self.up[q] - self.lo[q];
            let choice = if bland { self.ratio_bland(&alpha, dir) } else { self.ratio_harris(&alpha, dir) };

            let flip = range.is_finite() && choice.map_or(true, |(_, t, _)| range <= t);
            if flip {
                let t = range;
                self.apply_step(q, dir, t, &alpha);
                self.status[q] = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
                self.value[q] = if dir > 0.0 { self.up[q] } else { self.lo[q] };
                iter += 1;
                degenerate = 0;
                bland = false;
                continue;
            }
            let Some((r, t, bp_upper)) = choice else {
                if phase1 {
                    // Phase-1 objective is bounded below; an unblocked ray is noise.
                    if !self.refactor() {
                        return Err(LpError::NumericalFailure("unbounded phase-1 direction".into()));
                    }
                    iter += 1;
                    continue;
                }
                let mut ray = vec![0.0; self.n];
                if q < self.n {
                    ray[q] = dir;
                }
                for (i, &j) in self.head.iter().enumerate() {
                    if j < self.n {
                        ray[j] = -dir * alpha[i];
                    }
                }
                let scale = ray.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if scale > 0.0 {
                    for v in &mut ray {
                        *v /= scale;
                    }
                }
                return Ok(self.finish(LpStatus::Unbounded, Some(ray), iter));
            };

            if t <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
            self.apply_step(q, dir, t, &alpha);
            self.pivot(r, q, &alpha, bp_upper);
            iter += 1;
        }
    }

    fn apply_step(&mut self, q: usize, dir: f64, t: f64, alpha: &[f64]) {
        if t == 0.0 {
            return;
        }
        for (i, &j) in self.head.iter().enumerate() {
            self.value[j] -= dir * t * alpha[i];
        }
        self.value[q] += dir * t;
    }

    /// Breakpoint of basic position `i` moving at rate `delta`; returns the
    /// target bound and whether it is the upper one.
    fn breakpoint(&self, j: usize, delta: f64) -> Option<(f64, bool)> {
        let v = self.value[j];
        if delta > 0.0 {
            if v < self.lo[j] - PRIMAL_TOL {
                Some((self.lo[j], false))
            } else if self.up[j].is_finite() && v <= self.up[j] + PRIMAL_TOL {
                Some((self.up[j], true))
            } else {
                None
            }
        } else if v > self.up[j] + PRIMAL_TOL {
            Some((self.up[j], true))
        } else if self.lo[j].is_finite() && v >= self.lo[j] - PRIMAL_TOL {
            Some((self.lo[j], false))
        } else {
            None
        }
    }

    fn ratio_harris(&self, alpha: &[f64], dir: f64) -> Option<(usize, f64, bool)> {
        let mut tmax = f64::INFINITY;
        let mut cands = Vec::new();
        for (i, &j) in self.head.iter().enumerate() {
            let delta = -dir * alpha[i];
            if delta.abs() <= PIVOT_TOL {
                continue;
            }
            if let Some((bp, upper)) = self.breakpoint(j, delta) {
                let relaxed = if delta > 0.0 { bp + PRIMAL_TOL } else { bp - PRIMAL_TOL };
                let t_relaxed = ((relaxed - self.value[j]) / delta).max(0.0);
                tmax = tmax.min(t_relaxed);
                let t = ((bp - self.value[j]) / delta).max(0.0);
                cands.push((i, t, upper, delta.abs()));
            }
        }
        cands
            .into_iter()
            .filter(|c| c.1 <= tmax)
            .max_by(|a, b| a.3.partial_cmp(&b.3).unwrap().then(b.0.cmp(&a.0)))
            .map(|(i, t, upper, _)| (i, t, upper))
    }

    fn ratio_bland(&self, alpha: &[f64], dir: f64) -> Option<(usize, f64, bool)> {
        let mut best: Option<(usize, f64, bool)> = None;
        for (i, &j) in self.head.iter().enumerate() {
            let delta = -dir * alpha[i];
            if delta.abs() <= PIVOT_TOL {
                continue;
            }
            if let Some((bp, upper)) = self.breakpoint(j, delta) {
                let t = ((bp - self.value[j]) / delta).max(0.0);
                let better = match best {
                    None => true,
                    Some((bi, bt, _)) => t < bt - 1e-12 || (t <= bt + 1e-12 && j < self.head[bi]),
                };
                if better {
                    best = Some((i, t, upper));
                }
            }
        }
        best
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], to_upper: bool) {
        let leaving = self.head[r];
        self.status[leaving] = if self.lo[leaving] == self.up[leaving] {
            VarStatus::AtLower
        } else if to_upper {
            VarStatus::AtUpper
        } else {
            VarStatus::AtLower
        };
        self.value[leaving] = if to_upper { self.up[leaving] } else { self.lo[leaving] };
        self.status[q] = VarStatus::Basic;
        self.head[r] = q;

        let col = alpha.iter().enumerate().filter(|&(i, a)| i != r && *a != 0.0).map(|(i, &a)| (i, a)).collect();
        self.etas.push(Eta { r, pivot: alpha[r], col });
        self.since_refactor += 1;
    }

    fn finish(&self, status: LpStatus, ray: Option<Vec<f64>>, iterations: usize) -> LpSolution {
        let (n, m) = (self.n, self.m);
        let cb: Vec<f64> = self.head.iter().map(|&j| self.cost(j)).collect();
        let y = self.btran(&cb);
        let mut x: Vec<f64> = self.value[..n].to_vec();
        for (j, xv) in x.iter_mut().enumerate() {
            if self.status[j] != VarStatus::Basic {
                *xv = self.value[j];
            }
        }
        let reduced_costs: Vec<f64> = (0..n)
            .map(|j| if self.status[j] == VarStatus::Basic { 0.0 } else { self.reduced_cost(j, self.cost(j), &y) })
            .collect();
        let row_duals: Vec<f64> = (0..m)
            .map(|k| if self.status[n + k] == VarStatus::Basic { 0.0 } else { y[k] })
            .collect();
        let basis = Basis { columns: self.status[..n].to_vec(), rows: self.status[n..].to_vec() };
        LpSolution {
            status,
            objective: self.lp.objective(&x),
            x,
            row_duals,
            reduced_costs,
            basis,
            ray,
            iterations,
        }
    }
}
