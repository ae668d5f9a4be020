//! Weighted Euclidean projection onto a polyhedron.
//!
//! Solves `min sum_i w_i (z_i - a_i)^2` over the rows and column bounds of an
//! [`LpProblem`] (its costs are ignored) with the Clarabel interior-point solver.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::LpProblem;
use crate::model::{Row, Sense};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("projection region is empty")]
    Infeasible,
    #[error("projection failed: {0}")]
    NumericalFailure(String),
}

/// A solved projection onto a level set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpProjection {
    pub anchor: Vec<f64>,
    pub level: f64,
    pub solution: Vec<f64>,
}

const QP_TOL: f64 = 1e-8;

/// Constraint rows in Clarabel form `A z + s = b`: equalities first (`s = 0`),
/// then inequalities (`s >= 0`).
struct ConeData {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    num_eq: usize,
}

impl ConeData {
    fn push(&mut self, coeffs: &[(usize, f64)], sign: f64, rhs: f64) {
        let r = self.b.len();
        for &(j, v) in coeffs {
            if v != 0.0 {
                self.rows.push(r);
                self.cols.push(j);
                self.vals.push(sign * v);
            }
        }
        self.b.push(sign * rhs);
    }
}

fn cone_data(region: &LpProblem) -> ConeData {
    let mut d = ConeData { rows: Vec::new(), cols: Vec::new(), vals: Vec::new(), b: Vec::new(), num_eq: 0 };
    for r in region.rows.iter().filter(|r| r.sense == Sense::Eq) {
        d.push(&r.coeffs, 1.0, r.rhs);
    }
    for (j, bnd) in region.bounds.iter().enumerate() {
        if bnd.lower == bnd.upper {
            d.push(&[(j, 1.0)], 1.0, bnd.lower);
        }
    }
    d.num_eq = d.b.len();
    for r in &region.rows {
        match r.sense {
            Sense::Le => d.push(&r.coeffs, 1.0, r.rhs),
            Sense::Ge => d.push(&r.coeffs, -1.0, r.rhs),
            Sense::Eq => {}
        }
    }
    for (j, bnd) in region.bounds.iter().enumerate() {
        if bnd.lower == bnd.upper {
            continue;
        }
        if bnd.lower.is_finite() {
            d.push(&[(j, 1.0)], -1.0, bnd.lower);
        }
        if bnd.upper.is_finite() {
            d.push(&[(j, 1.0)], 1.0, bnd.upper);
        }
    }
    d
}

/// Projects `anchor` onto the feasible set of `region` in the `weights` norm.
pub fn project(region: &LpProblem, weights: &[f64], anchor: &[f64]) -> Result<Vec<f64>, QpError> {
    let n = region.num_cols();
    assert_eq!(anchor.len(), n, "anchor dimension");
    assert_eq!(weights.len(), n, "weight dimension");
    assert!(weights.iter().all(|&w| w >= 0.0), "weights must be nonnegative");
    if region.max_violation(anchor) <= 1e-10 {
        return Ok(anchor.to_vec());
    }
    // Solved in the shifted variable `d = z - anchor`, so the objective is `d'Wd`.
    let mut d = cone_data(region);
    for k in 0..d.rows.len() {
        d.b[d.rows[k]] -= d.vals[k] * anchor[d.cols[k]];
    }
    let m = d.b.len();
    let p = CscMatrix::new_from_triplets(n, n, (0..n).collect(), (0..n).collect(), weights.to_vec());
    let q = vec![0.0; n];
    let a = CscMatrix::new_from_triplets(m, n, d.rows, d.cols, d.vals);
    let mut cones = Vec::new();
    if d.num_eq > 0 {
        cones.push(SupportedConeT::ZeroConeT(d.num_eq));
    }
    if m > d.num_eq {
        cones.push(SupportedConeT::NonnegativeConeT(m - d.num_eq));
    }
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(QP_TOL)
        .tol_gap_rel(QP_TOL)
        .tol_feas(QP_TOL)
        .tol_infeas_abs(1e-14)
        .tol_infeas_rel(1e-14)
        .build()
        .expect("valid solver settings");
    let mut solver = DefaultSolver::new(&p, &q, &a, &d.b, &cones, settings)
        .map_err(|e| QpError::NumericalFailure(format!("{e:?}")))?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(solver.solution.x.iter().zip(anchor).map(|(d, a)| d + a).collect()),
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Err(QpError::Infeasible),
        s => Err(QpError::NumericalFailure(format!("{s:?}"))),
    }
}

/// Projection onto `region ∩ {level_row}`; `level_row.rhs` is the level.
pub fn solve_level_qp(region: &LpProblem, level_row: &Row, anchor: &[f64], weights: &[f64]) -> Result<QpProjection, QpError> {
    let mut full = region.clone();
    full.add_row(level_row.clone());
    let solution = project(&full, weights, anchor)?;
    Ok(QpProjection { anchor: anchor.to_vec(), level: level_row.rhs, solution })
}
