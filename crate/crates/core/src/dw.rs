//! Column generation for the Dantzig-Wolfe bound `z_D`.
//!
//! The restricted master keeps the original variables `x` as free columns and
//! ties them to the block columns through copy rows
//! `x_i - sum_v lambda_v v_i - sum_r mu_r r_i = 0`, one per block and support
//! index. Its optimal row duals are therefore exactly the multipliers
//! `(pi^j, beta, theta)` of the Wolfe dual.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lagrangian::DualPoint;
use crate::linalg::norm_inf;
use crate::lp::{solve_lp_from, Basis, LpError, LpOptions, LpProblem, LpStatus, VarBounds};
use crate::mip::{BlockOracle, MipError, OracleStatus};
use crate::model::{BlockStructuredMip, Row};

/// Points closer than this in the inf-norm are treated as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DwError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Oracle(#[from] MipError),
    #[error("block {0} has no feasible point")]
    EmptyBlock(usize),
    #[error("restricted master is {0:?} despite the artificial columns")]
    Master(LpStatus),
}

/// Generated extreme points `V^j` and rays `R^j` per block, in local coordinates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnPool {
    pub points: Vec<Vec<Vec<f64>>>,
    pub rays: Vec<Vec<Vec<f64>>>,
}

impl ColumnPool {
    pub fn new(q: usize) -> Self {
        ColumnPool { points: vec![Vec::new(); q], rays: vec![Vec::new(); q] }
    }

    /// Inserts `v` unless an equal point is already stored.
    pub fn insert_point(&mut self, j: usize, v: Vec<f64>) -> bool {
        if self.points[j].iter().any(|p| max_diff(p, &v) <= DUPLICATE_TOL) {
            return false;
        }
        self.points[j].push(v);
        true
    }

    /// Inserts the ray scaled to unit inf-norm unless already stored.
    pub fn insert_ray(&mut self, j: usize, r: Vec<f64>) -> bool {
        let s = norm_inf(&r);
        if s == 0.0 {
            return false;
        }
        let r: Vec<f64> = r.iter().map(|v| v / s).collect();
        if self.rays[j].iter().any(|p| max_diff(p, &r) <= DUPLICATE_TOL) {
            return false;
        }
        self.rays[j].push(r);
        true
    }

    pub fn num_columns(&self) -> usize {
        self.points.iter().map(Vec::len).sum::<usize>() + self.rays.iter().map(Vec::len).sum::<usize>()
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwIteration {
    pub iteration: usize,
    pub z: f64,
    pub columns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwResult {
    pub z_d: f64,
    /// Optimal duals of the final restricted master.
    pub dual: DualPoint,
    pub pool: ColumnPool,
    pub trace: Vec<DwIteration>,
    pub iterations: usize,
    /// Primal `x` of the final master.
    pub x: Vec<f64>,
    /// Sum of artificial values in the final master (zero when `z_d` is exact).
    pub artificial: f64,
    /// False when the iteration limit stopped the loop.
    pub converged: bool,
}

impl DwResult {
    /// `iteration,z,columns` lines with a header.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,z,columns\n");
        for t in &self.trace {
            let _ = writeln!(s, "{},{},{}", t.iteration, t.z, t.columns);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwOptions {
    pub max_iter: usize,
    /// Columns are added when their reduced cost is below `-tol`.
    pub tol: f64,
}

impl Default for DwOptions {
    fn default() -> Self {
        DwOptions { max_iter: 1000, tol: 1e-6 }
    }
}

/// Row and column positions of the restricted master.
struct Layout {
    /// First copy row of each block.
    copy_start: Vec<usize>,
    linking_start: usize,
    num_linking: usize,
    convexity_start: usize,
}

impl Layout {
    fn new(model: &BlockStructuredMip, num_linking: usize) -> Self {
        let mut copy_start = Vec::with_capacity(model.q());
        let mut k = 0;
        for b in &model.blocks {
            copy_start.push(k);
            k += b.len();
        }
        Layout { copy_start, linking_start: k, num_linking, convexity_start: k + num_linking }
    }
}

fn add_point_column(lp: &mut LpProblem, layout: &Layout, j: usize, v: &[f64]) {
    let col = lp.add_column(0.0, VarBounds::nonneg());
    for (k, &vk) in v.iter().enumerate() {
        if vk != 0.0 {
            lp.rows[layout.copy_start[j] + k].coeffs.push((col, -vk));
        }
    }
    lp.rows[layout.convexity_start + j].coeffs.push((col, 1.0));
}

fn add_ray_column(lp: &mut LpProblem, layout: &Layout, j: usize, r: &[f64]) {
    let col = lp.add_column(0.0, VarBounds::nonneg());
    for (k, &rk) in r.iter().enumerate() {
        if rk != 0.0 {
            lp.rows[layout.copy_start[j] + k].coeffs.push((col, -rk));
        }
    }
}

/// Rows and `x` columns of the extended formulation, without block columns.
fn skeleton(model: &BlockStructuredMip, linking: &[Row]) -> (LpProblem, Layout) {
    let layout = Layout::new(model, linking.len());
    let mut lp = LpProblem::new();
    for i in 0..model.n() {
        lp.add_column(model.c[i], VarBounds::free());
    }
    for b in &model.blocks {
        for &i in &b.support {
            lp.add_row(Row::eq(vec![(i, 1.0)], 0.0));
        }
    }
    for r in linking {
        lp.add_row(r.clone());
    }
    for _ in 0..model.q() {
        lp.add_row(Row::eq(vec![], 1.0));
    }
    (lp, layout)
}

/// The extended formulation restricted to `pool`.
///
/// Columns: `x` (n, free), then `lambda` per block and point, then `mu` per
/// block and ray. Rows: copy rows by block, linking rows in `>=` form,
/// convexity rows.
pub fn extended_formulation(model: &BlockStructuredMip, pool: &ColumnPool) -> LpProblem {
    let linking = model.linking_ge();
    let (mut lp, layout) = skeleton(model, &linking);
    for (j, pts) in pool.points.iter().enumerate() {
        for v in pts {
            add_point_column(&mut lp, &layout, j, v);
        }
    }
    for (j, rays) in pool.rays.iter().enumerate() {
        for r in rays {
            add_ray_column(&mut lp, &layout, j, r);
        }
    }
    lp
}

/// Big-M cost of the artificial columns.
pub fn big_m(model: &BlockStructuredMip) -> f64 {
    1e7 * (1.0 + norm_inf(&model.c))
}

/// Weights that split each cost `c_i` evenly over the blocks containing `i`.
pub fn split_costs(model: &BlockStructuredMip) -> Vec<Vec<f64>> {
    let cov = model.coverage();
    model.blocks.iter().map(|b| b.support.iter().map(|&i| model.c[i] / cov[i] as f64).collect()).collect()
}

/// Seeds every block with one feasible point, adding rays met on the way.
fn seed_pool(model: &BlockStructuredMip, oracles: &[BlockOracle]) -> Result<ColumnPool, DwError> {
    let mut pool = ColumnPool::new(model.q());
    for (j, w) in split_costs(model).into_iter().enumerate() {
        let mut r = oracles[j].minimize(&w)?;
        if r.status == OracleStatus::Unbounded {
            if let Some(ray) = r.ray.take() {
                pool.insert_ray(j, ray);
            }
            r = oracles[j].minimize(&vec![0.0; oracles[j].dim()])?;
        }
        match r.argmin {
            Some(v) if r.status == OracleStatus::Optimal => {
                pool.insert_point(j, v);
            }
            _ => return Err(DwError::EmptyBlock(j)),
        }
    }
    Ok(pool)
}

fn extract_dual(model: &BlockStructuredMip, layout: &Layout, y: &[f64]) -> DualPoint {
    let pi = model
        .blocks
        .iter()
        .enumerate()
        .map(|(j, b)| y[layout.copy_start[j]..layout.copy_start[j] + b.len()].to_vec())
        .collect();
    let beta = y[layout.linking_start..layout.linking_start + layout.num_linking].iter().map(|b| b.max(0.0)).collect();
    let theta = y[layout.convexity_start..layout.convexity_start + model.q()].to_vec();
    DualPoint { pi, beta, theta: Some(theta) }
}

/// Standard Dantzig-Wolfe column generation.
pub fn run_dw(model: &BlockStructuredMip, opts: &DwOptions) -> Result<DwResult, DwError> {
    let oracles: Vec<BlockOracle> = (0..model.q()).map(|j| BlockOracle::new(model, j)).collect();
    run_dw_with(model, &oracles, opts)
}

/// Column generation with caller-supplied block oracles.
pub fn run_dw_with(model: &BlockStructuredMip, oracles: &[BlockOracle], opts: &DwOptions) -> Result<DwResult, DwError> {
    let linking = model.linking_ge();
    let mut pool = seed_pool(model, oracles)?;
    let (mut lp, layout) = skeleton(model, &linking);

    let m = big_m(model);
    let mut artificials = Vec::new();
    for j in 0..model.q() {
        let col = lp.add_column(m, VarBounds::nonneg());
        lp.rows[layout.convexity_start + j].coeffs.push((col, 1.0));
        artificials.push(col);
    }
    for k in 0..linking.len() {
        let col = lp.add_column(m, VarBounds::nonneg());
        lp.rows[layout.linking_start + k].coeffs.push((col, 1.0));
        artificials.push(col);
    }
    for (j, pts) in pool.points.iter().enumerate() {
        for v in pts {
            add_point_column(&mut lp, &layout, j, v);
        }
    }
    for (j, rays) in pool.rays.iter().enumerate() {
        for r in rays {
            add_ray_column(&mut lp, &layout, j, r);
        }
    }

    let lp_opts = LpOptions::default();
    let mut basis: Option<Basis> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let warm = basis.as_ref().map(|b| b.extended(lp.num_cols(), lp.num_rows()));
        let sol = solve_lp_from(&lp, warm.as_ref(), &lp_opts)?;
        if sol.status != LpStatus::Optimal {
            return Err(DwError::Master(sol.status));
        }
        iterations += 1;
        trace.push(DwIteration { iteration: iterations, z: sol.objective, columns: pool.num_columns() });
        let dual = extract_dual(model, &layout, &sol.row_duals);
        let theta = dual.theta.as_ref().expect("master duals include theta");

        let mut added = false;
        if iterations <= opts.max_iter {
            for (j, oracle) in oracles.iter().enumerate() {
                let r = oracle.minimize(&dual.pi[j])?;
                match r.status {
                    OracleStatus::Unbounded => {
                        let ray = r.ray.expect("unbounded oracle result carries a ray");
                        if pool.insert_ray(j, ray) {
                            add_ray_column(&mut lp, &layout, j, pool.rays[j].last().unwrap());
                            added = true;
                        }
                    }
                    OracleStatus::Optimal => {
                        if r.value - theta[j] < -opts.tol {
                            let v = r.argmin.expect("optimal oracle result carries a point");
                            if pool.insert_point(j, v) {
                                add_point_column(&mut lp, &layout, j, pool.points[j].last().unwrap());
                                added = true;
                            }
                        }
                    }
                    OracleStatus::Infeasible => return Err(DwError::EmptyBlock(j)),
                }
            }
        }
        basis = Some(sol.basis.clone());
        if !added {
            let artificial = artificials.iter().map(|&c| sol.x[c]).sum();
            return Ok(DwResult {
                z_d: sol.objective,
                dual,
                pool,
                trace,
                iterations,
                x: sol.x[..model.n()].to_vec(),
                artificial,
                converged: iterations <= opts.max_iter,
            });
        }
    }
}
