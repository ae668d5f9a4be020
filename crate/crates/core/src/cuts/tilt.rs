use serde::{Deserialize, Serialize};

use super::{dot, Cut, CutError, CutFactory, CutOrigin, TIGHT_TOL};
use crate::linalg::{gram_schmidt_extend, norm_inf, null_space};
use crate::mip::{OracleResult, OracleStatus};
use crate::model::Row;

/// Leaves of a tilting tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltOutcome {
    pub cuts: Vec<Cut>,
    /// The oracle budget ran out; unfinished nodes were emitted as leaves.
    pub budget_exceeded: bool,
    /// The block hull is not full-dimensional; the input is returned as is.
    pub not_full_dim: bool,
    pub oracle_calls: usize,
}

/// Affinely independent point set with an orthonormal basis of its direction space.
#[derive(Debug, Default)]
struct AffineSet {
    points: Vec<Vec<f64>>,
    basis: Vec<Vec<f64>>,
}

impl AffineSet {
    fn try_add(&mut self, p: &[f64]) -> bool {
        match self.points.first() {
            None => {}
            Some(o) => {
                let d: Vec<f64> = p.iter().zip(o).map(|(a, b)| a - b).collect();
                match gram_schmidt_extend(&self.basis, &d, 1e-9) {
                    Some(e) => self.basis.push(e),
                    None => return false,
                }
            }
        }
        self.points.push(p.to_vec());
        true
    }
}

struct TiltRun {
    depth: usize,
    start_calls: usize,
    budget_exceeded: bool,
    leaves: Vec<Cut>,
}

impl CutFactory<'_> {
    fn over_budget(&self, run: &TiltRun) -> bool {
        self.oracle_calls() - run.start_calls >= self.tilt_budget
    }

    /// `min w'y` over block `j` intersected with one extra local row.
    fn oracle_min_with_row(&mut self, j: usize, w: &[f64], row: Row) -> Result<OracleResult, CutError> {
        let mut o = self.oracles[j].clone();
        o.add_local_row(row);
        let before = o.calls();
        let r = o.minimize(w)?;
        self.extra_calls += o.calls() - before;
        if let Some(p) = &r.argmin {
            self.caches[j].insert(p.clone());
        }
        Ok(r)
    }

    /// A point of block `j` with `d'x > t`, if one exists (`max d'x` by the
    /// oracle; an unbounded maximum is resolved with the extra row `d'x >= t + 1`).
    fn point_above(&mut self, j: usize, d: &[f64], t: f64) -> Result<Option<Vec<f64>>, CutError> {
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        let r = self.oracle_min(j, &neg, &[])?;
        match r.status {
            OracleStatus::Optimal if -r.value > t + TIGHT_TOL * (1.0 + t.abs()) => Ok(r.argmin),
            OracleStatus::Unbounded => {
                let local: Vec<(usize, f64)> = d.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
                Ok(self.oracle_min_with_row(j, d, Row::ge(local, t + 1.0))?.argmin)
            }
            _ => Ok(None),
        }
    }

    /// Whether `conv(Q^j)` is full-dimensional, found by growing an affinely
    /// independent set along directions orthogonal to its current hull.
    pub fn is_full_dimensional(&mut self, j: usize) -> Result<bool, CutError> {
        if let Some(b) = self.full_dim[j] {
            return Ok(b);
        }
        let k = self.oracles[j].dim();
        let mut s = AffineSet::default();
        for p in self.caches[j].points.clone() {
            s.try_add(&p);
        }
        if s.points.is_empty() {
            let r = self.oracle_min(j, &vec![0.0; k], &[])?;
            match r.argmin {
                Some(p) => s.try_add(&p),
                None => return Err(CutError::EmptyBlock(j)),
            };
        }
        let mut full = true;
        while s.points.len() < k + 1 {
            let d = null_space(&s.basis, k, 1e-9).swap_remove(0);
            let t = dot(&d, &s.points[0]);
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            let found = match self.point_above(j, &d, t)? {
                Some(p) => Some(p),
                None => self.point_above(j, &neg, -t)?,
            };
            match found {
                Some(p) if s.try_add(&p) => {}
                _ => {
                    full = false;
                    break;
                }
            }
        }
        self.full_dim[j] = Some(full);
        Ok(full)
    }

    /// Depth-`depth` tilting tree rooted at a block cut. Both tilted
    /// inequalities of every node are expanded; the leaves are returned.
    pub fn tilt(&mut self, cut: &Cut, depth: usize) -> Result<TiltOutcome, CutError> {
        let j = cut.block.ok_or(CutError::NotABlockCut(cut.id))?;
        let start_calls = self.oracle_calls();
        let unchanged = |not_full_dim, calls| TiltOutcome { cuts: vec![cut.clone()], budget_exceeded: false, not_full_dim, oracle_calls: calls };
        if depth == 0 {
            return Ok(unchanged(false, 0));
        }
        if !self.is_full_dimensional(j)? {
            if !self.flat_blocks.contains(&j) {
                self.flat_blocks.push(j);
            }
            return Ok(unchanged(true, self.oracle_calls() - start_calls));
        }
        let mut run = TiltRun { depth, start_calls, budget_exceeded: false, leaves: Vec::new() };
        self.tilt_node(j, cut.clone(), 0, &mut run)?;
        let mut cuts: Vec<Cut> = Vec::new();
        for c in run.leaves {
            let dup = cuts.iter().any(|d| {
                (d.rhs - c.rhs).abs() <= 1e-9 && d.coeffs.iter().zip(&c.coeffs).all(|(x, y)| (x.1 - y.1).abs() <= 1e-9)
            });
            if !dup {
                cuts.push(c);
            }
        }
        Ok(TiltOutcome { cuts, budget_exceeded: run.budget_exceeded, not_full_dim: false, oracle_calls: self.oracle_calls() - start_calls })
    }

    fn tilt_node(&mut self, j: usize, cut: Cut, level: usize, run: &mut TiltRun) -> Result<(), CutError> {
        if level == run.depth {
            run.leaves.push(cut);
            return Ok(());
        }
        if self.over_budget(run) {
            run.budget_exceeded = true;
            run.leaves.push(cut);
            return Ok(());
        }
        let support = self.model.blocks[j].support.clone();
        let k = support.len();
        let a = cut.local(&support);
        let f = cut.rhs;
        if self.caches[j].tight(&a, f).next().is_none() {
            self.oracle_min(j, &a, &[])?;
        }
        let mut tight = AffineSet::default();
        for p in self.caches[j].tight(&a, f).cloned().collect::<Vec<_>>() {
            tight.try_add(&p);
        }
        if tight.points.len() >= k {
            // Facet: no tilting direction exists.
            run.leaves.push(cut);
            return Ok(());
        }
        let above = TIGHT_TOL * (1.0 + f.abs());
        let cached = self.caches[j].points.iter().find(|p| dot(&a, p) > f + above).cloned();
        let x_bar = match cached {
            Some(p) => p,
            None => match self.point_above(j, &a, f)? {
                Some(p) => p,
                None => {
                    run.leaves.push(cut);
                    return Ok(());
                }
            },
        };
        let Some((v, w)) = tilting_direction(&tight.points, &x_bar) else {
            run.leaves.push(cut);
            return Ok(());
        };
        for sign in [1.0, -1.0] {
            let u: Vec<f64> = v.iter().map(|x| sign * x).collect();
            let (coeffs, rhs) = self.tilt_side(j, &a, f, &u, sign * w, run)?;
            let child = self.block_cut(j, &coeffs, rhs, CutOrigin::Tilted(level + 1), Some(cut.id));
            self.tilt_node(j, child, level + 1, run)?;
        }
        Ok(())
    }

    /// Returns `u'x >= s` if valid, else `(a + lambda u)'x >= f + lambda s` with
    /// the largest valid `lambda >= 0`. The rhs is capped by the last oracle
    /// value so the result is valid even when the search stops early.
    fn tilt_side(&mut self, j: usize, a: &[f64], f: f64, u: &[f64], s: f64, run: &mut TiltRun) -> Result<(Vec<f64>, f64), CutError> {
        let tol = TIGHT_TOL * (1.0 + s.abs());
        let r = self.oracle_min(j, u, &[])?;
        if r.status == OracleStatus::Optimal && r.value >= s - tol {
            return Ok((u.to_vec(), s.min(r.value)));
        }
        let mut lambda = f64::INFINITY;
        for p in &self.caches[j].points {
            let gap = s - dot(u, p);
            if gap > tol {
                lambda = lambda.min(((dot(a, p) - f) / gap).max(0.0));
            }
        }
        if let Some(ray) = &r.ray {
            let ur = dot(u, ray);
            if ur < 0.0 {
                lambda = lambda.min((dot(a, ray) / -ur).max(0.0));
            }
        }
        if !lambda.is_finite() {
            lambda = 0.0;
        }
        loop {
            let coeffs: Vec<f64> = a.iter().zip(u).map(|(x, y)| x + lambda * y).collect();
            let target = f + lambda * s;
            let res = self.oracle_min(j, &coeffs, &[])?;
            match res.status {
                OracleStatus::Optimal => {
                    let x = res.argmin.as_ref().expect("optimal oracle result has a point");
                    let gap = s - dot(u, x);
                    if res.value >= target - TIGHT_TOL * (1.0 + target.abs()) || gap <= 0.0 || self.over_budget(run) {
                        if self.over_budget(run) {
                            run.budget_exceeded = true;
                        }
                        return Ok((coeffs, target.min(res.value)));
                    }
                    lambda = ((dot(a, x) - f) / gap).max(0.0);
                }
                OracleStatus::Unbounded => {
                    let ray = res.ray.as_ref().expect("unbounded oracle result has a ray");
                    let ur = dot(u, ray);
                    let next = if ur < 0.0 { (dot(a, ray) / -ur).max(0.0) } else { 0.0 };
                    if lambda == 0.0 {
                        // The input cut itself is unbounded below; cannot happen for a valid cut.
                        return Ok((a.to_vec(), f));
                    }
                    lambda = if next < lambda { next } else { 0.0 };
                }
                OracleStatus::Infeasible => return Err(CutError::EmptyBlock(j)),
            }
        }
    }
}

/// `(v, w)` with `v'x = w` on `points` and `x_bar`: the projection of the
/// first coordinate axis with a nonzero image onto the null space of the rows
/// `[x', -1]`, scaled to unit max-norm with its first nonzero entry positive.
fn tilting_direction(points: &[Vec<f64>], x_bar: &[f64]) -> Option<(Vec<f64>, f64)> {
    let k = x_bar.len();
    let rows: Vec<Vec<f64>> = points.iter().map(|p| p.as_slice()).chain([x_bar]).map(|p| {
        let mut r = p.to_vec();
        r.push(-1.0);
        r
    }).collect();
    let mut onb: Vec<Vec<f64>> = Vec::new();
    for b in null_space(&rows, k + 1, 1e-9) {
        if let Some(e) = gram_schmidt_extend(&onb, &b, 1e-9) {
            onb.push(e);
        }
    }
    for i in 0..k {
        let mut p = vec![0.0; k + 1];
        for b in &onb {
            for (pi, bi) in p.iter_mut().zip(b) {
                *pi += b[i] * bi;
            }
        }
        let scale = norm_inf(&p[..k]);
        if scale <= 1e-9 {
            continue;
        }
        let first = p[..k].iter().copied().find(|x| x.abs() > 1e-12 * scale).unwrap_or(1.0);
        let norm = scale * first.signum();
        for x in p.iter_mut() {
            *x /= norm;
            if x.abs() < 1e-12 {
                *x = 0.0;
            }
        }
        let w = p.pop().expect("k + 1 entries");
        return Some((p, w));
    }
    None
}
