//! Dual degeneracy, relative bound gaps and brute-force face dimensions of small LPs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{affine_dim, dot, null_space, rank, solve, Matrix};
use crate::lp::{solve_lp, LpError, LpProblem, LpStatus};
use crate::model::Row;

/// Dual entries with `|w_k| <= ZERO_TOL` count as zero.
pub const ZERO_TOL: f64 = 1e-8;
/// Largest LP handled by the enumeration routines.
pub const MAX_ENUM_VARS: usize = 8;
/// Largest number of row subsets examined by the enumeration routines.
pub const MAX_ENUM_SUBSETS: u64 = 5_000_000;

const GEOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("relative gap undefined: z_D = 0")]
    ZeroDenominator,
    #[error("enumeration limit exceeded ({vars} variables, {subsets} row subsets)")]
    SizeLimit { vars: usize, subsets: u64 },
    #[error("LP is infeasible")]
    Infeasible,
    #[error("LP is unbounded")]
    Unbounded,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub n: usize,
    /// `||w||_0` after zero-snapping.
    pub support: usize,
    /// `n - ||w||_0`.
    pub level: i64,
    /// `1 - ||w||_0 / n`.
    pub relative: f64,
}

/// Degeneracy level of a basic dual solution `w` of an LP with `n` variables.
pub fn degeneracy_level(w: &[f64], n: usize, zero_tol: f64) -> DegeneracyReport {
    let support = w.iter().filter(|v| v.abs() > zero_tol).count();
    let relative = if n == 0 { 0.0 } else { 1.0 - support as f64 / n as f64 };
    DegeneracyReport { n, support, level: n as i64 - support as i64, relative }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub z_d: f64,
    pub z_l: f64,
    pub z_r: Option<f64>,
    /// `(z_D - z_L) / |z_D|`.
    pub r_l: f64,
    /// `(z_D - z_R) / |z_D|`.
    pub r_r: Option<f64>,
}

impl GapReport {
    pub const CSV_HEADER: &'static str = "z_d,z_l,z_r,r_l,r_r";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!("{},{},{},{},{}", self.z_d, self.z_l, opt(self.z_r), self.r_l, opt(self.r_r))
    }
}

pub fn gap_report(z_d: f64, z_l: f64, z_r: Option<f64>) -> Result<GapReport, AnalysisError> {
    if z_d == 0.0 {
        return Err(AnalysisError::ZeroDenominator);
    }
    let rel = |z: f64| (z_d - z) / z_d.abs();
    Ok(GapReport { z_d, z_l, z_r, r_l: rel(z_l), r_r: z_r.map(rel) })
}

/// `{x : G x >= h}` with bounds and equalities expanded.
fn ge_system(lp: &LpProblem) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = lp.num_cols();
    let mut g = Vec::new();
    let mut h = Vec::new();
    let mut push = |coeffs: &[(usize, f64)], rhs: f64| {
        let mut a = vec![0.0; n];
        for &(j, v) in coeffs {
            a[j] += v;
        }
        g.push(a);
        h.push(rhs);
    };
    for r in &lp.rows {
        for r in r.to_ge() {
            push(&r.coeffs, r.rhs);
        }
    }
    for (j, b) in lp.bounds.iter().enumerate() {
        if b.lower.is_finite() {
            push(&[(j, 1.0)], b.lower);
        }
        if b.upper.is_finite() {
            push(&[(j, -1.0)], -b.upper);
        }
    }
    (g, h)
}

fn binomial(m: usize, k: usize) -> u64 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((m - i) as u64) / (i as u64 + 1))
}

/// Calls `visit` with every `k`-subset of `0..m` in lexicographic order.
fn for_each_subset(m: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for t in i + 1..k {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Vertices, extreme rays and lineality basis of `{x : G x >= h}`.
struct Enumeration {
    vertices: Vec<Vec<f64>>,
    rays: Vec<Vec<f64>>,
    lineality: Vec<Vec<f64>>,
}

fn enumerate(mut g: Vec<Vec<f64>>, mut h: Vec<f64>, n: usize) -> Result<Enumeration, AnalysisError> {
    let lineality = if g.is_empty() { null_space(&[], n, GEOM_TOL) } else { null_space(&g, n, GEOM_TOL) };
    // Restrict to the orthogonal complement of the lineality space so the rest is pointed.
    for b in &lineality {
        g.push(b.clone());
        h.push(0.0);
        g.push(b.iter().map(|v| -v).collect());
        h.push(0.0);
    }
    let m = g.len();
    let subsets = binomial(m, n) + binomial(m, n.saturating_sub(1));
    if n > MAX_ENUM_VARS || subsets > MAX_ENUM_SUBSETS {
        return Err(AnalysisError::SizeLimit { vars: n, subsets });
    }
    let feasible = |x: &[f64]| g.iter().zip(&h).all(|(a, b)| dot(a, x) >= b - GEOM_TOL * (1.0 + b.abs()));
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    if n == 0 {
        if feasible(&[]) {
            vertices.push(Vec::new());
        }
    } else {
        for_each_subset(m, n, |idx| {
            let a = Matrix::from_rows(&idx.iter().map(|&i| g[i].clone()).collect::<Vec<_>>());
            let rhs: Vec<f64> = idx.iter().map(|&i| h[i]).collect();
            if let Some(x) = solve(&a, &rhs) {
                if feasible(&x) && !vertices.iter().any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() <= 1e-7)) {
                    vertices.push(x);
                }
            }
        });
    }
    let mut rays: Vec<Vec<f64>> = Vec::new();
    if n > 0 {
        for_each_subset(m, n - 1, |idx| {
            let sub: Vec<Vec<f64>> = idx.iter().map(|&i| g[i].clone()).collect();
            if rank(&sub, GEOM_TOL) != n - 1 {
                return;
            }
            let d = null_space(&sub, n, GEOM_TOL).swap_remove(0);
            for d in [d.clone(), d.iter().map(|v| -v).collect::<Vec<_>>()] {
                let scale = d.iter().fold(0.0f64, |s, v| s.max(v.abs()));
                let d: Vec<f64> = d.iter().map(|v| v / scale).collect();
                let in_cone = g.iter().all(|a| dot(a, &d) >= -GEOM_TOL);
                if in_cone && !rays.iter().any(|r| r.iter().zip(&d).all(|(p, q)| (p - q).abs() <= 1e-7)) {
                    rays.push(d);
                }
            }
        });
    }
    Ok(Enumeration { vertices, rays, lineality })
}

fn hull_dim(points: &[Vec<f64>], rays: &[Vec<f64>], lineality: usize) -> isize {
    let Some(p0) = points.first() else { return -1 };
    let mut all = points.to_vec();
    for r in rays {
        all.push(p0.iter().zip(r).map(|(a, b)| a + b).collect());
    }
    affine_dim(&all, GEOM_TOL) + lineality as isize
}

/// Dimension of the optimal face of `min c'x` over the LP's feasible region,
/// by enumerating basic feasible solutions and extreme rays.
pub fn optimal_face_dim(lp: &LpProblem) -> Result<isize, AnalysisError> {
    let n = lp.num_cols();
    if n > MAX_ENUM_VARS {
        return Err(AnalysisError::SizeLimit { vars: n, subsets: 0 });
    }
    let (g, h) = ge_system(lp);
    let e = enumerate(g, h, n)?;
    let tol = GEOM_TOL * (1.0 + crate::linalg::norm_inf(&lp.cost));
    if e.lineality.iter().any(|b| dot(&lp.cost, b).abs() > tol) || e.rays.iter().any(|r| dot(&lp.cost, r) < -tol) {
        return Err(AnalysisError::Unbounded);
    }
    if e.vertices.is_empty() {
        return Err(AnalysisError::Infeasible);
    }
    let z = e.vertices.iter().map(|v| dot(&lp.cost, v)).fold(f64::INFINITY, f64::min);
    let ztol = 1e-7 * (1.0 + z.abs());
    let opt: Vec<Vec<f64>> = e.vertices.into_iter().filter(|v| dot(&lp.cost, v) <= z + ztol).collect();
    let rays: Vec<Vec<f64>> = e.rays.into_iter().filter(|r| dot(&lp.cost, r).abs() <= tol).collect();
    Ok(hull_dim(&opt, &rays, e.lineality.len()))
}

/// Dimension of the LP's feasible region (`-1` if empty).
pub fn polyhedron_dim(lp: &LpProblem) -> Result<isize, AnalysisError> {
    let n = lp.num_cols();
    if n > MAX_ENUM_VARS {
        return Err(AnalysisError::SizeLimit { vars: n, subsets: 0 });
    }
    let (g, h) = ge_system(lp);
    let e = enumerate(g, h, n)?;
    Ok(hull_dim(&e.vertices, &e.rays, e.lineality.len()))
}

/// For a hyperplane `c'x = v` that properly cuts the LP region `P`, checks
/// `dim(P ∩ {c'x = v}) = dim(P) - 1`.
pub fn check_prop2(lp: &LpProblem, v: f64) -> Result<bool, AnalysisError> {
    let min = solve_lp(lp)?;
    let mut neg = lp.clone();
    neg.cost.iter_mut().for_each(|c| *c = -*c);
    let max = solve_lp(&neg)?;
    if min.status == LpStatus::Infeasible {
        return Err(AnalysisError::Infeasible);
    }
    let below = min.status == LpStatus::Unbounded || min.objective < v - GEOM_TOL;
    let above = max.status == LpStatus::Unbounded || -max.objective > v + GEOM_TOL;
    if !below {
        return Err(AnalysisError::PreconditionViolated(format!("c'x >= {v} is valid")));
    }
    if !above {
        return Err(AnalysisError::PreconditionViolated(format!("c'x <= {v} is valid")));
    }
    let full = polyhedron_dim(lp)?;
    let mut slice = lp.clone();
    let coeffs = lp.cost.iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect();
    slice.add_row(Row::eq(coeffs, v));
    Ok(polyhedron_dim(&slice)? == full - 1)
}
