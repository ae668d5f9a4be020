//! The Lagrangian (Wolfe) dual of the DW relaxation, solved by the level
//! method or by Kelley's cutting-plane method.
//!
//! Both methods keep the multi-cut model `theta_j <= v'pi^j` of every block
//! function `D_j` together with the Wolfe equalities
//! `sum_{j: i in I(j)} pi^j_i + beta'A_i = c_i` and `beta >= 0`.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dw::{big_m, ColumnPool};
use crate::lp::{solve_level_qp, solve_lp, solve_lp_from, Basis, LpError, LpOptions, LpProblem, LpStatus, QpError, VarBounds};
use crate::mip::{solve_mip, BlockOracle, MipError, MipOptions, OracleStatus};
use crate::model::{BlockStructuredMip, Row, INT_TOL};

/// Tolerance on the Wolfe equalities accepted by [`evaluate_dual`].
pub const WOLFE_TOL: f64 = 1e-7;

/// Node budget of the search for `z_bar`.
pub const Z_BAR_NODE_LIMIT: usize = 1000;

/// Weight of the `theta` coordinates in the projection objective; the
/// projection is defined on `(pi, beta)` only.
pub const THETA_WEIGHT: f64 = 0.0;

/// Block multipliers `pi^j`, linking multipliers `beta >= 0` and optional
/// convexity duals `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub pi: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
}

impl DualPoint {
    pub fn new(pi: Vec<Vec<f64>>, beta: Vec<f64>) -> Self {
        DualPoint { pi, beta, theta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LagrangianError {
    #[error("dual has wrong dimensions: {0}")]
    Dimension(String),
    #[error("multipliers violate the Wolfe conditions by {0:e}")]
    DualInfeasible(f64),
    #[error(transparent)]
    Oracle(#[from] MipError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("block {0} has no feasible point")]
    EmptyBlock(usize),
}

/// Residuals `c_i - sum_j pi^j_i - beta'A_i` of the Wolfe equalities, with
/// `A` the linking system in `>=` form.
pub fn wolfe_residual(model: &BlockStructuredMip, dual: &DualPoint) -> Vec<f64> {
    let mut r = model.c.clone();
    for (b, pi) in model.blocks.iter().zip(&dual.pi) {
        for (&i, p) in b.support.iter().zip(pi) {
            r[i] -= p;
        }
    }
    for (row, beta) in model.linking_ge().iter().zip(&dual.beta) {
        for &(i, a) in &row.coeffs {
            r[i] -= beta * a;
        }
    }
    r
}

/// Moves each Wolfe residual into the first block price covering the variable,
/// so interior-point iterates satisfy the equalities exactly.
fn repair_wolfe(model: &BlockStructuredMip, dual: &mut DualPoint) {
    let r = wolfe_residual(model, dual);
    let mut done = vec![false; model.n()];
    for (b, pi) in model.blocks.iter().zip(dual.pi.iter_mut()) {
        for (&i, p) in b.support.iter().zip(pi.iter_mut()) {
            if !done[i] {
                *p += r[i];
                done[i] = true;
            }
        }
    }
}

fn check_dims(model: &BlockStructuredMip, dual: &DualPoint) -> Result<(), LagrangianError> {
    if dual.pi.len() != model.q() {
        return Err(LagrangianError::Dimension(format!("{} blocks, {} pi vectors", model.q(), dual.pi.len())));
    }
    for (j, (b, pi)) in model.blocks.iter().zip(&dual.pi).enumerate() {
        if b.len() != pi.len() {
            return Err(LagrangianError::Dimension(format!("block {j}: support {} vs pi {}", b.len(), pi.len())));
        }
    }
    let k = model.linking_ge().len();
    if dual.beta.len() != k {
        return Err(LagrangianError::Dimension(format!("{k} linking rows, {} beta entries", dual.beta.len())));
    }
    Ok(())
}

/// Checks the Wolfe conditions and returns the largest violation.
pub fn wolfe_violation(model: &BlockStructuredMip, dual: &DualPoint) -> Result<f64, LagrangianError> {
    check_dims(model, dual)?;
    let eq = wolfe_residual(model, dual).iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let sign = dual.beta.iter().fold(0.0f64, |m, b| m.max(-b));
    Ok(eq.max(sign))
}

/// `z(pi, beta) = sum_j D_j(pi^j) + b'beta`; `-inf` when some `D_j` is unbounded.
pub fn evaluate_dual(model: &BlockStructuredMip, dual: &DualPoint) -> Result<f64, LagrangianError> {
    let oracles: Vec<BlockOracle> = (0..model.q()).map(|j| BlockOracle::new(model, j)).collect();
    evaluate_dual_with(model, &oracles, dual)
}

pub fn evaluate_dual_with(model: &BlockStructuredMip, oracles: &[BlockOracle], dual: &DualPoint) -> Result<f64, LagrangianError> {
    let viol = wolfe_violation(model, dual)?;
    if viol > WOLFE_TOL {
        return Err(LagrangianError::DualInfeasible(viol));
    }
    let mut z: f64 = model.linking_ge().iter().zip(&dual.beta).map(|(r, b)| r.rhs * b).sum();
    for (j, o) in oracles.iter().enumerate() {
        let r = o.minimize(&dual.pi[j])?;
        match r.status {
            OracleStatus::Optimal => z += r.value,
            OracleStatus::Unbounded => return Ok(f64::NEG_INFINITY),
            OracleStatus::Infeasible => return Err(LagrangianError::EmptyBlock(j)),
        }
    }
    Ok(z)
}

/// Objective of a feasible point obtained by rounding the natural LP
/// solution, if one of the tried roundings is feasible.
pub fn rounding_upper_bound(model: &BlockStructuredMip) -> Option<f64> {
    let lp = model.lp_relaxation();
    let sol = solve_lp(&lp).ok()?;
    if sol.status != LpStatus::Optimal {
        return None;
    }
    let round = |f: fn(f64) -> f64| -> Vec<f64> {
        (0..model.n())
            .map(|i| {
                let v = sol.x[i];
                if !model.integer[i] {
                    return v;
                }
                let lo = (model.lower[i] - INT_TOL).ceil();
                let hi = (model.upper[i] + INT_TOL).floor();
                f(v).min(hi).max(lo)
            })
            .collect()
    };
    for x in [round(f64::round), round(f64::ceil), round(f64::floor)] {
        let int_ok = x.iter().zip(&model.integer).all(|(v, &i)| !i || (v - v.round()).abs() <= INT_TOL);
        if int_ok && lp.max_violation(&x) <= 1e-9 {
            return Some(lp.objective(&x));
        }
    }
    None
}

/// Objective of the second feasible solution found by branch and bound (the
/// first if only one turns up within `Z_BAR_NODE_LIMIT` nodes).
pub fn heuristic_upper_bound(model: &BlockStructuredMip) -> Option<f64> {
    let opts = MipOptions { node_limit: Z_BAR_NODE_LIMIT, trace_every: 0, solution_limit: Some(2), ..MipOptions::default() };
    let r = solve_mip(model, &opts).ok()?;
    r.objective.is_finite().then_some(r.objective)
}

/// Upper bound `z_bar` on `z_D`: a branch-and-bound solution, else rounding,
/// else the box bound, else Big-M.
pub fn initial_upper_bound(model: &BlockStructuredMip) -> f64 {
    if let Some(z) = heuristic_upper_bound(model).or_else(|| rounding_upper_bound(model)) {
        return z;
    }
    let boxed: f64 = (0..model.n()).map(|i| (model.c[i] * model.lower[i]).max(model.c[i] * model.upper[i])).sum();
    if boxed.is_finite() {
        boxed
    } else {
        big_m(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DualStatus {
    Converged,
    QpFailure,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualIteration {
    pub iteration: usize,
    pub lb: f64,
    pub ub: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualResult {
    pub lb: f64,
    pub ub: f64,
    /// Multipliers attaining `lb`, with `theta_j = D_j(pi^j)`.
    pub best_dual: DualPoint,
    pub trace: Vec<DualIteration>,
    pub status: DualStatus,
    pub iterations: usize,
    /// The best few explored multipliers by bound value, best first.
    pub retained: Vec<(f64, DualPoint)>,
    /// Points and rays collected from the oracle.
    pub pool: ColumnPool,
    pub z_bar: f64,
}

impl DualResult {
    /// `iteration,lb,ub,seconds` lines with a header.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,lb,ub,seconds\n");
        for t in &self.trace {
            let _ = writeln!(s, "{},{},{},{:.6}", t.iteration, t.lb, t.ub, t.seconds);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualOptions {
    /// Upper bound on `z_D`; [`initial_upper_bound`] when `None`.
    pub z_bar: Option<f64>,
    /// Level weight on UB; the level is `level * UB + (1 - level) * LB`.
    pub level: f64,
    pub max_iter: usize,
    /// Relative gap tolerance.
    pub tol: f64,
    /// Number of explored multipliers to retain.
    pub keep: usize,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions { z_bar: None, level: 0.7, max_iter: 500, tol: 1e-6, keep: 5 }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Method {
    Level,
    Kelley,
}

/// Column positions of `(pi, beta, theta)` in the dual master.
struct DualLayout {
    pi_start: Vec<usize>,
    beta_start: usize,
    theta_start: usize,
    len: usize,
}

impl DualLayout {
    fn new(model: &BlockStructuredMip, num_linking: usize) -> Self {
        let mut pi_start = Vec::new();
        let mut k = 0;
        for b in &model.blocks {
            pi_start.push(k);
            k += b.len();
        }
        DualLayout { pi_start, beta_start: k, theta_start: k + num_linking, len: k + num_linking + model.q() }
    }

    fn split(&self, model: &BlockStructuredMip, z: &[f64]) -> DualPoint {
        let pi = model.blocks.iter().enumerate().map(|(j, b)| z[self.pi_start[j]..self.pi_start[j] + b.len()].to_vec()).collect();
        let beta = z[self.beta_start..self.theta_start].iter().map(|b| b.max(0.0)).collect();
        let theta = z[self.theta_start..self.len].to_vec();
        DualPoint { pi, beta, theta: Some(theta) }
    }
}

/// Master LP `max sum theta + b'beta` (stored as a minimisation) without cuts.
fn dual_master(model: &BlockStructuredMip, linking: &[Row], layout: &DualLayout, z_bar: f64) -> LpProblem {
    let mut lp = LpProblem::new();
    for _ in 0..layout.beta_start {
        lp.add_column(0.0, VarBounds::free());
    }
    for r in linking {
        lp.add_column(-r.rhs, VarBounds::nonneg());
    }
    for _ in 0..model.q() {
        lp.add_column(-1.0, VarBounds::free());
    }
    let mut wolfe: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.n()];
    for (j, b) in model.blocks.iter().enumerate() {
        for (k, &i) in b.support.iter().enumerate() {
            wolfe[i].push((layout.pi_start[j] + k, 1.0));
        }
    }
    for (k, r) in linking.iter().enumerate() {
        for &(i, a) in &r.coeffs {
            wolfe[i].push((layout.beta_start + k, a));
        }
    }
    for (i, coeffs) in wolfe.into_iter().enumerate() {
        lp.add_row(Row::eq(coeffs, model.c[i]));
    }
    lp.add_row(Row::le(objective_coeffs(model, linking, layout), z_bar));
    lp
}

/// Coefficients of `sum theta + b'beta`.
fn objective_coeffs(model: &BlockStructuredMip, linking: &[Row], layout: &DualLayout) -> Vec<(usize, f64)> {
    let mut c: Vec<(usize, f64)> = linking.iter().enumerate().filter(|(_, r)| r.rhs != 0.0).map(|(k, r)| (layout.beta_start + k, r.rhs)).collect();
    c.extend((0..model.q()).map(|j| (layout.theta_start + j, 1.0)));
    c
}

fn point_cut(layout: &DualLayout, j: usize, v: &[f64]) -> Row {
    let mut coeffs = vec![(layout.theta_start + j, 1.0)];
    coeffs.extend(v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(k, x)| (layout.pi_start[j] + k, -x)));
    Row::le(coeffs, 0.0)
}

fn ray_cut(layout: &DualLayout, j: usize, r: &[f64]) -> Row {
    Row::ge(r.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(k, x)| (layout.pi_start[j] + k, *x)).collect(), 0.0)
}

/// Level method on the Wolfe dual.
pub fn solve_dual_level(model: &BlockStructuredMip, opts: &DualOptions) -> Result<DualResult, LagrangianError> {
    solve_dual(model, opts, Method::Level)
}

/// Kelley's cutting-plane method on the Wolfe dual (the master argmax is the next iterate).
pub fn solve_dual_kelley(model: &BlockStructuredMip, opts: &DualOptions) -> Result<DualResult, LagrangianError> {
    solve_dual(model, opts, Method::Kelley)
}

fn solve_dual(model: &BlockStructuredMip, opts: &DualOptions, method: Method) -> Result<DualResult, LagrangianError> {
    let start = Instant::now();
    let oracles: Vec<BlockOracle> = (0..model.q()).map(|j| BlockOracle::new(model, j)).collect();
    let linking = model.linking_ge();
    let layout = DualLayout::new(model, linking.len());
    let z_bar = opts.z_bar.unwrap_or_else(|| initial_upper_bound(model));
    let mut lp = dual_master(model, &linking, &layout, z_bar);
    let level_coeffs = objective_coeffs(model, &linking, &layout);
    let weights: Vec<f64> = (0..layout.len).map(|k| if k >= layout.theta_start { THETA_WEIGHT } else { 1.0 }).collect();

    let mut pool = ColumnPool::new(model.q());
    let mut lb = f64::NEG_INFINITY;
    let mut ub = f64::INFINITY;
    let mut best_dual: Option<DualPoint> = None;
    let mut retained: Vec<(f64, DualPoint)> = Vec::new();
    let mut trace = Vec::new();
    let mut basis: Option<Basis> = None;
    let mut anchor: Option<Vec<f64>> = None;
    let lp_opts = LpOptions::default();
    let mut status = DualStatus::IterationLimit;
    let mut iterations = 0;
    let b_dot = |beta: &[f64]| -> f64 { linking.iter().zip(beta).map(|(r, b)| r.rhs * b).sum() };

    while iterations < opts.max_iter {
        iterations += 1;
        let warm = basis.as_ref().map(|b| b.extended(lp.num_cols(), lp.num_rows()));
        let sol = solve_lp_from(&lp, warm.as_ref(), &lp_opts)?;
        if sol.status != LpStatus::Optimal {
            // The z_bar row bounds the master whenever the Wolfe system is
            // consistent; otherwise z_D = -inf is not representable here.
            return Err(LpError::NumericalFailure(format!("dual master is {:?}", sol.status)).into());
        }
        basis = Some(sol.basis.clone());
        ub = ub.min(-sol.objective);

        let iterate = match (method, &anchor) {
            (Method::Level, Some(prev)) if lb.is_finite() => {
                let level = opts.level * ub + (1.0 - opts.level) * lb;
                let level_row = Row::ge(level_coeffs.clone(), level);
                match solve_level_qp(&lp, &level_row, prev, &weights) {
                    Ok(p) => p.solution,
                    Err(e @ (QpError::Infeasible | QpError::NumericalFailure(_))) => {
                        log::warn!("level projection failed at iteration {iterations}: {e}");
                        status = DualStatus::QpFailure;
                        trace.push(DualIteration { iteration: iterations, lb, ub, seconds: start.elapsed().as_secs_f64() });
                        break;
                    }
                }
            }
            _ => sol.x.clone(),
        };

        let mut point = layout.split(model, &iterate);
        repair_wolfe(model, &mut point);
        let mut values = Vec::with_capacity(model.q());
        let mut bounded = true;
        for (j, o) in oracles.iter().enumerate() {
            let r = o.minimize(&point.pi[j])?;
            match r.status {
                OracleStatus::Optimal => {
                    values.push(r.value);
                    let v = r.argmin.expect("optimal oracle result carries a point");
                    if pool.insert_point(j, v.clone()) {
                        lp.add_row(point_cut(&layout, j, &v));
                    }
                }
                OracleStatus::Unbounded => {
                    bounded = false;
                    let ray = r.ray.expect("unbounded oracle result carries a ray");
                    if pool.insert_ray(j, ray) {
                        lp.add_row(ray_cut(&layout, j, pool.rays[j].last().unwrap()));
                    }
                }
                OracleStatus::Infeasible => return Err(LagrangianError::EmptyBlock(j)),
            }
        }
        if bounded {
            let z = values.iter().sum::<f64>() + b_dot(&point.beta);
            point.theta = Some(values);
            if z > lb {
                lb = z;
                best_dual = Some(point.clone());
            }
            retain(&mut retained, z, point, opts.keep);
        }
        anchor = Some(iterate);
        trace.push(DualIteration { iteration: iterations, lb, ub, seconds: start.elapsed().as_secs_f64() });
        if ub - lb <= opts.tol * ub.abs().max(1.0) {
            status = DualStatus::Converged;
            break;
        }
    }

    let best_dual = match best_dual {
        Some(d) => d,
        None => {
            // No bounded iterate was found; report the last master point.
            let x = anchor.unwrap_or_else(|| vec![0.0; layout.len]);
            layout.split(model, &x)
        }
    };
    Ok(DualResult { lb, ub, best_dual, trace, status, iterations, retained, pool, z_bar })
}

fn retain(kept: &mut Vec<(f64, DualPoint)>, z: f64, p: DualPoint, keep: usize) {
    if keep == 0 {
        return;
    }
    kept.push((z, p));
    kept.sort_by(|a, b| b.0.total_cmp(&a.0));
    kept.truncate(keep);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example1, example1_dual_1, example1_dual_2};
    use crate::model::Block;

    #[test]
    fn example1_dual_values() {
        let m = example1();
        let z1 = evaluate_dual(&m, &example1_dual_1()).unwrap();
        let z2 = evaluate_dual(&m, &example1_dual_2()).unwrap();
        assert!((z1 - 27.0 / 4.0).abs() <= 1e-9, "{z1}");
        assert!((z2 - 78.0 / 11.0).abs() <= 1e-9, "{z2}");
    }

    #[test]
    fn wolfe_violation_is_rejected() {
        let mut d = example1_dual_1();
        d.pi[0][0] += 0.5;
        assert!(matches!(evaluate_dual(&example1(), &d), Err(LagrangianError::DualInfeasible(_))));
        let mut d = example1_dual_1();
        d.beta.push(0.0);
        assert!(matches!(evaluate_dual(&example1(), &d), Err(LagrangianError::Dimension(_))));
    }

    #[test]
    fn level_method_converges_on_example1() {
        let r = solve_dual_level(&example1(), &DualOptions::default()).unwrap();
        assert_eq!(r.status, DualStatus::Converged);
        assert!((r.lb - 8.0).abs() <= 1e-6 * 8.0, "{}", r.lb);
        for w in r.trace.windows(2) {
            assert!(w[1].lb >= w[0].lb && w[1].ub <= w[0].ub);
        }
        let z = evaluate_dual(&example1(), &r.best_dual).unwrap();
        assert!((z - r.lb).abs() <= 1e-7);
        assert!(r.retained.len() <= 5);
        assert_eq!(r.retained[0].0, r.lb);
    }

    #[test]
    fn kelley_converges_on_example1() {
        let r = solve_dual_kelley(&example1(), &DualOptions::default()).unwrap();
        assert_eq!(r.status, DualStatus::Converged);
        assert!((r.lb - 8.0).abs() <= 1e-6 * 8.0, "{}", r.lb);
    }

    #[test]
    fn single_iteration_is_one_sweep() {
        let m = example1();
        let r = solve_dual_level(&m, &DualOptions { max_iter: 1, ..DualOptions::default() }).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.trace.len(), 1);
        let z = evaluate_dual(&m, &r.best_dual).unwrap();
        assert!((z - r.lb).abs() <= 1e-9);
    }

    #[test]
    fn integral_block_gives_lp_bound() {
        let mut m = BlockStructuredMip::new(3);
        m.c = vec![-2.0, -3.0, -1.0];
        m.upper = vec![1.0; 3];
        m.integer = vec![true; 3];
        m.linking = vec![Row::le(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 2.0)];
        m.blocks = vec![Block::new(vec![0, 1, 2], vec![])];
        let r = solve_dual_level(&m, &DualOptions::default()).unwrap();
        let lp = solve_lp(&m.lp_relaxation()).unwrap();
        assert!((r.lb - lp.objective).abs() <= 1e-6 * (1.0 + lp.objective.abs()));
    }

    #[test]
    fn upper_bound_is_valid() {
        let m = example1();
        assert!(initial_upper_bound(&m) >= 8.0);
        assert!(rounding_upper_bound(&m).is_some());
    }

    #[test]
    fn trace_csv_layout() {
        let r = solve_dual_kelley(&example1(), &DualOptions::default()).unwrap();
        let csv = r.trace_csv();
        assert!(csv.starts_with("iteration,lb,ub,seconds\n"));
        assert_eq!(csv.lines().count(), r.trace.len() + 1);
    }
}
