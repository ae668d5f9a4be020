//! Block-structured MIP data model, solution evaluation and validation.
//!
//! A model is `min c'x` subject to linking rows `Ax (>=,<=,=) b`, global
//! variable bounds, integrality flags, and `q` blocks. Block `j` owns a
//! support `I(j)` (global variable ids, possibly overlapping other blocks)
//! and its own rows `G^j x_{I(j)} (>=,<=,=) g^j`. The block polyhedron `P^j`
//! is the row set intersected with the global bounds on `I(j)`; `Q^j` adds the
//! inherited integrality.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LpProblem, VarBounds};

/// Absolute tolerance on constraint violation.
pub const FEAS_TOL: f64 = 1e-6;
/// Absolute tolerance on integrality.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
}

/// Sparse linear row `sum coeffs (sense) rhs` over global variable ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Row { coeffs, sense, rhs }
    }

    pub fn ge(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Row::new(coeffs, Sense::Ge, rhs)
    }

    pub fn le(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Row::new(coeffs, Sense::Le, rhs)
    }

    pub fn eq(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Row::new(coeffs, Sense::Eq, rhs)
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * x[i]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }

    /// The row rewritten as one or two `>=` rows.
    pub fn to_ge(&self) -> Vec<Row> {
        let neg = || self.coeffs.iter().map(|&(i, a)| (i, -a)).collect::<Vec<_>>();
        match self.sense {
            Sense::Ge => vec![self.clone()],
            Sense::Le => vec![Row::ge(neg(), -self.rhs)],
            Sense::Eq => vec![Row::ge(self.coeffs.clone(), self.rhs), Row::ge(neg(), -self.rhs)],
        }
    }
}

/// One block: support `I(j)` and its private rows (coefficients use global ids).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub support: Vec<usize>,
    pub rows: Vec<Row>,
}

impl Block {
    pub fn new(support: Vec<usize>, rows: Vec<Row>) -> Self {
        Block { support, rows }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Position of global variable `var` inside the support.
    pub fn local_index(&self, var: usize) -> Option<usize> {
        self.support.iter().position(|&v| v == var)
    }

    /// Restriction of a full-space vector to the support.
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.support.iter().map(|&i| x[i]).collect()
    }
}

/// `min c'x` over a block-structured feasible set. Always a minimisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStructuredMip {
    pub c: Vec<f64>,
    #[serde(with = "crate::serde_inf::vec")]
    pub lower: Vec<f64>,
    #[serde(with = "crate::serde_inf::vec")]
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub linking: Vec<Row>,
    pub blocks: Vec<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

impl BlockStructuredMip {
    /// Model with `n` continuous variables in `[0, inf)`, zero cost and no rows.
    pub fn new(n: usize) -> Self {
        BlockStructuredMip {
            c: vec![0.0; n],
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            integer: vec![false; n],
            linking: Vec::new(),
            blocks: Vec::new(),
            names: None,
        }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn q(&self) -> usize {
        self.blocks.len()
    }

    pub fn var_name(&self, i: usize) -> String {
        match &self.names {
            Some(names) if i < names.len() => names[i].clone(),
            _ => format!("x{}", i + 1),
        }
    }

    /// Integrality flags inherited by block `j`.
    pub fn block_integrality(&self, j: usize) -> Vec<bool> {
        self.blocks[j].support.iter().map(|&i| self.integer[i]).collect()
    }

    /// Number of blocks containing each variable.
    pub fn coverage(&self) -> Vec<usize> {
        let mut cov = vec![0; self.n()];
        for b in &self.blocks {
            for &i in &b.support {
                cov[i] += 1;
            }
        }
        cov
    }

    /// Linking system in `>=` form, the index set of the multipliers `beta`.
    ///
    /// `<=` rows are negated and `=` rows split. Finite bounds of variables
    /// that belong to no block are appended as extra `>=` rows, since such
    /// bounds are not enforced by any block polyhedron.
    pub fn linking_ge(&self) -> Vec<Row> {
        let mut rows: Vec<Row> = self.linking.iter().flat_map(Row::to_ge).collect();
        let cov = self.coverage();
        for i in 0..self.n() {
            if cov[i] > 0 {
                continue;
            }
            if self.lower[i].is_finite() {
                rows.push(Row::ge(vec![(i, 1.0)], self.lower[i]));
            }
            if self.upper[i].is_finite() {
                rows.push(Row::ge(vec![(i, -1.0)], -self.upper[i]));
            }
        }
        rows
    }

    /// Natural LP relaxation: linking rows, then block rows by `j`, global bounds.
    pub fn lp_relaxation(&self) -> LpProblem {
        let mut lp = LpProblem::new();
        for i in 0..self.n() {
            lp.add_column(self.c[i], VarBounds::new(self.lower[i], self.upper[i]));
        }
        for r in &self.linking {
            lp.add_row(r.clone());
        }
        for b in &self.blocks {
            for r in &b.rows {
                lp.add_row(r.clone());
            }
        }
        lp
    }

    /// Every row of the compact formulation (linking first, then blocks).
    pub fn all_rows(&self) -> impl Iterator<Item = &Row> {
        self.linking.iter().chain(self.blocks.iter().flat_map(|b| b.rows.iter()))
    }
}

/// Identifies a violated constraint in a [`SolutionReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintId {
    Linking(usize),
    BlockRow { block: usize, row: usize },
    LowerBound(usize),
    UpperBound(usize),
    Integrality(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub objective: f64,
    pub feasible: bool,
    pub violated: Vec<(ConstraintId, f64)>,
}

/// Computes `c'x` and checks every constraint of the compact formulation.
pub fn evaluate_solution(model: &BlockStructuredMip, x: &[f64]) -> Result<SolutionReport, ModelError> {
    if x.len() != model.n() {
        return Err(ModelError::DimensionMismatch { expected: model.n(), got: x.len() });
    }
    let objective = model.c.iter().zip(x).map(|(c, v)| c * v).sum();
    let mut violated = Vec::new();
    for (k, r) in model.linking.iter().enumerate() {
        let v = r.violation(x);
        if v > FEAS_TOL {
            violated.push((ConstraintId::Linking(k), v));
        }
    }
    for (j, b) in model.blocks.iter().enumerate() {
        for (k, r) in b.rows.iter().enumerate() {
            let v = r.violation(x);
            if v > FEAS_TOL {
                violated.push((ConstraintId::BlockRow { block: j, row: k }, v));
            }
        }
    }
    for i in 0..model.n() {
        if x[i] < model.lower[i] - FEAS_TOL {
            violated.push((ConstraintId::LowerBound(i), model.lower[i] - x[i]));
        }
        if x[i] > model.upper[i] + FEAS_TOL {
            violated.push((ConstraintId::UpperBound(i), x[i] - model.upper[i]));
        }
        if model.integer[i] {
            let frac = (x[i] - x[i].round()).abs();
            if frac > INT_TOL {
                violated.push((ConstraintId::Integrality(i), frac));
            }
        }
    }
    Ok(SolutionReport { objective, feasible: violated.is_empty(), violated })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ValidationIssue {
    VectorLength { field: &'static str, expected: usize, got: usize },
    IndexOutOfRange { location: String, index: usize },
    NonFinite { location: String },
    EmptyBlock(usize),
    DuplicateIndex { block: usize, var: usize },
    RowOutsideSupport { block: usize, row: usize, var: usize },
    InvertedBounds(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationIssue>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Structural checks; never fails, only reports.
pub fn validate_model(model: &BlockStructuredMip) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let n = model.n();
    for (field, len) in [("lower", model.lower.len()), ("upper", model.upper.len()), ("integer", model.integer.len())] {
        if len != n {
            rep.errors.push(ValidationIssue::VectorLength { field, expected: n, got: len });
        }
    }
    if !rep.errors.is_empty() {
        return rep;
    }
    for i in 0..n {
        if !model.c[i].is_finite() {
            rep.errors.push(ValidationIssue::NonFinite { location: format!("c[{i}]") });
        }
        if model.lower[i].is_nan() || model.upper[i].is_nan() || model.lower[i] == f64::INFINITY || model.upper[i] == f64::NEG_INFINITY {
            rep.errors.push(ValidationIssue::NonFinite { location: format!("bounds[{i}]") });
        } else if model.lower[i] > model.upper[i] {
            rep.errors.push(ValidationIssue::InvertedBounds(i));
        }
    }
    let check_row = |rep: &mut ValidationReport, r: &Row, loc: String| {
        if !r.rhs.is_finite() {
            rep.errors.push(ValidationIssue::NonFinite { location: format!("{loc}.rhs") });
        }
        for &(i, a) in &r.coeffs {
            if i >= n {
                rep.errors.push(ValidationIssue::IndexOutOfRange { location: loc.clone(), index: i });
            }
            if !a.is_finite() {
                rep.errors.push(ValidationIssue::NonFinite { location: format!("{loc}[{i}]") });
            }
        }
    };
    for (k, r) in model.linking.iter().enumerate() {
        check_row(&mut rep, r, format!("linking[{k}]"));
    }
    if model.blocks.is_empty() {
        rep.warnings.push("no blocks".to_string());
    }
    let mut seen_supports: Vec<BTreeSet<usize>> = Vec::new();
    for (j, b) in model.blocks.iter().enumerate() {
        if b.support.is_empty() {
            rep.errors.push(ValidationIssue::EmptyBlock(j));
        }
        let mut set = BTreeSet::new();
        for &i in &b.support {
            if i >= n {
                rep.errors.push(ValidationIssue::IndexOutOfRange { location: format!("block[{j}].support"), index: i });
            }
            if !set.insert(i) {
                rep.errors.push(ValidationIssue::DuplicateIndex { block: j, var: i });
            }
        }
        for (k, r) in b.rows.iter().enumerate() {
            check_row(&mut rep, r, format!("block[{j}].row[{k}]"));
            for &(i, _) in &r.coeffs {
                if i < n && !set.contains(&i) {
                    rep.errors.push(ValidationIssue::RowOutsideSupport { block: j, row: k, var: i });
                }
            }
        }
        if seen_supports.contains(&set) {
            rep.warnings.push(format!("block {j} repeats the support of an earlier block"));
        }
        seen_supports.push(set);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example1;

    #[test]
    fn example1_is_valid() {
        let m = example1();
        let rep = validate_model(&m);
        assert!(rep.is_valid(), "{rep:?}");
        assert_eq!(m.q(), 2);
        assert_eq!(m.n(), 4);
    }

    #[test]
    fn out_of_range_support() {
        let mut m = BlockStructuredMip::new(4);
        m.blocks.push(Block::new(vec![4], vec![]));
        let rep = validate_model(&m);
        assert!(!rep.is_valid());
        assert!(matches!(rep.errors[0], ValidationIssue::IndexOutOfRange { index: 4, .. }));
    }

    #[test]
    fn no_blocks_is_a_warning() {
        let m = BlockStructuredMip::new(3);
        let rep = validate_model(&m);
        assert!(rep.is_valid());
        assert_eq!(rep.warnings, vec!["no blocks".to_string()]);
    }

    #[test]
    fn nan_and_duplicates_reported() {
        let mut m = BlockStructuredMip::new(2);
        m.c[0] = f64::NAN;
        m.blocks.push(Block::new(vec![0, 0], vec![Row::ge(vec![(1, 1.0)], 0.0)]));
        m.blocks.push(Block::new(vec![], vec![]));
        let rep = validate_model(&m);
        assert!(rep.errors.iter().any(|e| matches!(e, ValidationIssue::NonFinite { .. })));
        assert!(rep.errors.iter().any(|e| matches!(e, ValidationIssue::DuplicateIndex { var: 0, .. })));
        assert!(rep.errors.iter().any(|e| matches!(e, ValidationIssue::RowOutsideSupport { var: 1, .. })));
        assert!(rep.errors.contains(&ValidationIssue::EmptyBlock(1)));
    }

    #[test]
    fn example1_optimum_is_feasible() {
        let m = example1();
        let rep = evaluate_solution(&m, &[2.0, 2.0, 1.0, 1.0]).unwrap();
        assert!(rep.feasible, "{rep:?}");
        assert_eq!(rep.objective, 8.0);
    }

    #[test]
    fn fractional_point_violates_integrality() {
        let m = example1();
        let rep = evaluate_solution(&m, &[0.5, 2.5, 0.5, 0.5]).unwrap();
        assert!(!rep.feasible);
        assert_eq!(rep.objective, 5.0);
        assert!(rep.violated.iter().any(|(c, _)| matches!(c, ConstraintId::Integrality(_))));
    }

    #[test]
    fn lower_bounds_feasible_without_rows() {
        let mut m = BlockStructuredMip::new(3);
        m.c = vec![1.0, -2.0, 3.0];
        m.lower = vec![-1.0, 0.0, 2.0];
        let rep = evaluate_solution(&m, &m.lower.clone()).unwrap();
        assert!(rep.feasible);
        assert_eq!(rep.objective, -1.0 + 6.0);
    }

    #[test]
    fn dimension_mismatch() {
        let m = example1();
        assert_eq!(
            evaluate_solution(&m, &[1.0]),
            Err(ModelError::DimensionMismatch { expected: 4, got: 1 })
        );
    }

    #[test]
    fn example1_brute_force_minimum_is_eight() {
        let m = example1();
        let mut best = f64::INFINITY;
        for code in 0..16u32 {
            let x: Vec<f64> = (0..4).map(|i| 1.0 + ((code >> i) & 1) as f64).collect();
            let rep = evaluate_solution(&m, &x).unwrap();
            if rep.feasible {
                best = best.min(rep.objective);
            }
        }
        assert_eq!(best, 8.0);
    }

    #[test]
    fn linking_ge_normalises_and_adds_uncovered_bounds() {
        let mut m = BlockStructuredMip::new(3);
        m.upper[2] = 4.0;
        m.linking.push(Row::le(vec![(0, 1.0)], 2.0));
        m.linking.push(Row::eq(vec![(1, 1.0)], 1.0));
        m.blocks.push(Block::new(vec![0, 1], vec![]));
        let rows = m.linking_ge();
        assert_eq!(rows.len(), 1 + 2 + 2);
        assert!(rows.iter().all(|r| r.sense == Sense::Ge));
        assert_eq!(rows[0].coeffs, vec![(0, -1.0)]);
        assert_eq!(rows[0].rhs, -2.0);
        assert_eq!(rows[4].rhs, -4.0);
    }

    #[test]
    fn evaluation_is_order_independent() {
        use proptest::prelude::*;
        proptest!(|(vals in proptest::collection::vec(-100.0f64..100.0, 1..20))| {
            let n = vals.len();
            let mut m = BlockStructuredMip::new(n);
            m.c = vals.iter().map(|v| v * 0.37 + 1.0).collect();
            let fwd = evaluate_solution(&m, &vals).unwrap().objective;
            let rev: f64 = m.c.iter().zip(&vals).rev().map(|(a, b)| a * b).sum();
            prop_assert!((fwd - rev).abs() <= 1e-9 * (1.0 + fwd.abs()));
        });
    }
}
