//! Dense LP and projection-QP solvers.
//!
//! [`solve_lp`] is a bounded-variable revised simplex returning basic primal
//! and dual solutions; [`qp::project`] is a primal active-set method for
//! weighted Euclidean projection onto a polyhedron.

pub mod qp;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Row;

pub use qp::{project, solve_level_qp, QpError, QpProjection};

/// Primal feasibility tolerance reported by [`LpSolution`] checks.
pub const FEAS_TOL: f64 = 1e-6;
/// Dual feasibility tolerance.
pub const DUAL_TOL: f64 = 1e-6;
/// Complementary slackness tolerance.
pub const CS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarBounds {
    #[serde(with = "crate::serde_inf::scalar")]
    pub lower: f64,
    #[serde(with = "crate::serde_inf::scalar")]
    pub upper: f64,
}

impl VarBounds {
    pub fn new(lower: f64, upper: f64) -> Self {
        VarBounds { lower, upper }
    }

    pub fn free() -> Self {
        VarBounds::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn nonneg() -> Self {
        VarBounds::new(0.0, f64::INFINITY)
    }

    pub fn is_free(&self) -> bool {
        self.lower == f64::NEG_INFINITY && self.upper == f64::INFINITY
    }
}

/// `min cost'x` s.t. sparse rows and column bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub bounds: Vec<VarBounds>,
    pub rows: Vec<Row>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_column(&mut self, cost: f64, bounds: VarBounds) -> usize {
        self.cost.push(cost);
        self.bounds.push(bounds);
        self.cost.len() - 1
    }

    pub fn add_row(&mut self, row: Row) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let bnds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(b, &v)| (b.lower - v).max(v - b.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bnds)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        if self.bounds.len() != self.cost.len() {
            return Err(LpError::InvalidProblem("bounds/cost length mismatch".into()));
        }
        let n = self.cost.len();
        if self.cost.iter().any(|c| !c.is_finite()) {
            return Err(LpError::InvalidProblem("non-finite cost".into()));
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if b.lower.is_nan() || b.upper.is_nan() || b.lower > b.upper || b.lower == f64::INFINITY || b.upper == f64::NEG_INFINITY {
                return Err(LpError::InvalidProblem(format!("bad bounds on column {j}")));
            }
        }
        for (k, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() || r.coeffs.iter().any(|&(i, a)| i >= n || !a.is_finite()) {
                return Err(LpError::InvalidProblem(format!("bad row {k}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Position of a column (or a row's logical variable) relative to the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// Basis description: one status per column and one per row logical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basis {
    pub columns: Vec<VarStatus>,
    pub rows: Vec<VarStatus>,
}

impl Basis {
    /// Extends a basis after columns/rows were appended to the problem:
    /// new columns start nonbasic, new rows start with a basic logical.
    pub fn extended(&self, num_cols: usize, num_rows: usize) -> Basis {
        let mut b = self.clone();
        b.columns.resize(num_cols, VarStatus::AtLower);
        b.rows.resize(num_rows, VarStatus::Basic);
        b
    }

    pub fn is_basic_column(&self, j: usize) -> bool {
        self.columns[j] == VarStatus::Basic
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row; `>=` rows carry nonnegative duals in a minimisation,
    /// `<=` rows nonpositive ones.
    pub row_duals: Vec<f64>,
    /// Reduced costs, i.e. the multipliers of the active column bounds.
    pub reduced_costs: Vec<f64>,
    pub basis: Basis,
    /// Improving recession direction when `status == Unbounded`.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpSolution {
    /// `rhs'y + sum_j d_j x_j`, which equals the objective at an optimum.
    pub fn dual_objective(&self, lp: &LpProblem) -> f64 {
        let rows: f64 = lp.rows.iter().zip(&self.row_duals).map(|(r, y)| r.rhs * y).sum();
        let bnds: f64 = self.reduced_costs.iter().zip(&self.x).map(|(d, x)| d * x).sum();
        rows + bnds
    }

    /// Row duals followed by the bound multipliers, as one vector `w` over the
    /// inequality description of the LP.
    pub fn dual_vector(&self) -> Vec<f64> {
        self.row_duals.iter().chain(&self.reduced_costs).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub max_iter: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { max_iter: 100_000 }
    }
}

/// Solves an LP from the all-logical basis.
pub fn solve_lp(lp: &LpProblem) -> Result<LpSolution, LpError> {
    simplex::solve(lp, None, &LpOptions::default())
}

/// Solves an LP starting from `basis` (falls back to the logical basis if
/// `basis` is inconsistent or singular).
pub fn solve_lp_from(lp: &LpProblem, basis: Option<&Basis>, opts: &LpOptions) -> Result<LpSolution, LpError> {
    simplex::solve(lp, basis, opts)
}

/// Row activities `a_k'x`.
pub fn row_activities(lp: &LpProblem, x: &[f64]) -> Vec<f64> {
    lp.rows.iter().map(|r| r.activity(x)).collect()
}
