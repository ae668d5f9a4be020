//! Exact LP-based branch and bound.
//!
//! Used for the block pricing problems, the strengthening and tilting
//! subproblems, and as the `z*` oracle. Search is depth-first on the most
//! fractional variable; every [`RESTART_EVERY`] nodes the open list is
//! re-sorted so that the best-bound node is explored next.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{solve_lp_from, Basis, LpError, LpOptions, LpProblem, LpStatus, VarBounds};
use crate::model::{BlockStructuredMip, Row, INT_TOL};

/// Open nodes are re-sorted by bound after this many processed nodes.
pub const RESTART_EVERY: usize = 1000;
/// Absolute pruning tolerance; nodes whose bound is within it of the
/// incumbent are discarded.
pub const PRUNE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MipError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("node limit {0} reached before the oracle call was proven optimal")]
    OracleLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
    /// Stopped after finding `solution_limit` improving solutions.
    SolutionLimit,
}

#[derive(Debug, Clone)]
pub struct MipOptions {
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    /// Known feasible solution used as the initial incumbent.
    pub incumbent: Option<Vec<f64>>,
    /// Record a bound sample every this many nodes (0 disables periodic samples).
    pub trace_every: usize,
    /// Stop once this many improving solutions have been found.
    pub solution_limit: Option<usize>,
}

impl Default for MipOptions {
    fn default() -> Self {
        MipOptions { node_limit: usize::MAX, time_limit: None, incumbent: None, trace_every: 100, solution_limit: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub nodes: usize,
    pub seconds: f64,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipResult {
    pub status: MipStatus,
    /// Incumbent objective (`+inf` when none was found).
    pub objective: f64,
    pub x: Option<Vec<f64>>,
    /// Best proven lower bound.
    pub bound: f64,
    pub nodes: usize,
    pub ray: Option<Vec<f64>>,
    pub trace: Vec<BoundSample>,
    pub seconds: f64,
}

impl MipResult {
    /// `(z_UB - z_LB) / |z_UB|`; infinite without an incumbent.
    pub fn gap(&self) -> f64 {
        if !self.objective.is_finite() {
            return f64::INFINITY;
        }
        if self.status == MipStatus::Optimal {
            return 0.0;
        }
        let d = self.objective.abs().max(1e-12);
        ((self.objective - self.bound) / d).max(0.0)
    }

    pub fn solved(&self) -> bool {
        matches!(self.status, MipStatus::Optimal | MipStatus::Infeasible | MipStatus::Unbounded)
    }
}

struct Node {
    bounds: Vec<VarBounds>,
    lb: f64,
    basis: Option<Basis>,
}

/// Branch and bound over `lp` with the given integrality flags.
pub fn solve_mip_lp(lp: &LpProblem, integer: &[bool], opts: &MipOptions) -> Result<MipResult, LpError> {
    let start = Instant::now();
    let n = lp.num_cols();
    let lp_opts = LpOptions::default();
    let mut work = lp.clone();

    let mut inc_obj = f64::INFINITY;
    let mut inc_x: Option<Vec<f64>> = None;
    if let Some(x) = &opts.incumbent {
        if x.len() == n && is_feasible(lp, integer, x) {
            inc_obj = lp.objective(x);
            inc_x = Some(x.clone());
        }
    }

    // Integer variables get integral bounds so that branching never inverts them.
    let mut root_bounds = lp.bounds.clone();
    let mut trivially_infeasible = false;
    for (b, &int) in root_bounds.iter_mut().zip(integer) {
        if int {
            b.lower = (b.lower - INT_TOL).ceil();
            b.upper = (b.upper + INT_TOL).floor();
            trivially_infeasible |= b.lower > b.upper;
        }
    }

    let mut trace = Vec::new();
    let mut stack = Vec::new();
    if !trivially_infeasible {
        stack.push(Node { bounds: root_bounds, lb: f64::NEG_INFINITY, basis: None });
    }
    let mut nodes = 0usize;
    let mut root = true;
    let mut status = None;
    let mut found = 0usize;

    while let Some(node) = stack.pop() {
        if node.lb > inc_obj - PRUNE_TOL {
            continue;
        }
        if opts.solution_limit.is_some_and(|k| found >= k) {
            stack.push(node);
            status = Some(MipStatus::SolutionLimit);
            break;
        }
        if nodes >= opts.node_limit {
            stack.push(node);
            status = Some(MipStatus::NodeLimit);
            break;
        }
        if opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
            stack.push(node);
            status = Some(MipStatus::TimeLimit);
            break;
        }
        nodes += 1;
        if nodes % RESTART_EVERY == 0 {
            stack.sort_by(|a, b| b.lb.total_cmp(&a.lb));
        }

        work.bounds.clone_from(&node.bounds);
        let sol = solve_lp_from(&work, node.basis.as_ref(), &lp_opts)?;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if root {
                    return Ok(MipResult {
                        status: MipStatus::Unbounded,
                        objective: f64::NEG_INFINITY,
                        x: None,
                        bound: f64::NEG_INFINITY,
                        nodes,
                        ray: sol.ray,
                        trace,
                        seconds: start.elapsed().as_secs_f64(),
                    });
                }
                // Cannot happen once the root is bounded; treat as numerical noise.
                continue;
            }
            LpStatus::Optimal => {}
        }
        root = false;
        let lb = sol.objective;
        if lb > inc_obj - PRUNE_TOL {
            continue;
        }
        let branch = most_fractional(&sol.x, integer);
        match branch {
            None => {
                let x = snap(&sol.x, integer);
                let obj = lp.objective(&x);
                if obj < inc_obj {
                    inc_obj = obj;
                    inc_x = Some(x);
                    found += 1;
                    trace.push(sample(nodes, &start, open_bound(&stack, inc_obj), inc_obj));
                }
            }
            Some(i) => {
                let rounded = snap(&sol.x, integer);
                if is_feasible(lp, integer, &rounded) {
                    let obj = lp.objective(&rounded);
                    if obj < inc_obj {
                        inc_obj = obj;
                        inc_x = Some(rounded);
                        found += 1;
                        trace.push(sample(nodes, &start, open_bound(&stack, inc_obj).min(lb), inc_obj));
                    }
                }
                let v = sol.x[i];
                let mut down = node.bounds.clone();
                down[i].upper = v.floor();
                let mut up = node.bounds;
                up[i].lower = v.ceil();
                let down = Node { bounds: down, lb, basis: Some(sol.basis.clone()) };
                let up = Node { bounds: up, lb, basis: Some(sol.basis) };
                // The child on the rounding side is explored first.
                if v - v.floor() >= 0.5 {
                    stack.push(down);
                    stack.push(up);
                } else {
                    stack.push(up);
                    stack.push(down);
                }
            }
        }
        if opts.trace_every > 0 && nodes % opts.trace_every == 0 {
            trace.push(sample(nodes, &start, open_bound(&stack, inc_obj), inc_obj));
        }
    }

    let (status, bound) = match status {
        Some(s) => (s, open_bound(&stack, inc_obj)),
        None if inc_x.is_some() => (MipStatus::Optimal, inc_obj),
        None => (MipStatus::Infeasible, f64::INFINITY),
    };
    trace.push(sample(nodes, &start, bound, inc_obj));
    Ok(MipResult { status, objective: inc_obj, x: inc_x, bound, nodes, ray: None, trace, seconds: start.elapsed().as_secs_f64() })
}

/// Solves the full model `min c'x` over linking rows, block rows, bounds and integrality.
pub fn solve_mip(model: &BlockStructuredMip, opts: &MipOptions) -> Result<MipResult, LpError> {
    solve_mip_lp(&model.lp_relaxation(), &model.integer, opts)
}

fn sample(nodes: usize, start: &Instant, lb: f64, ub: f64) -> BoundSample {
    BoundSample { nodes, seconds: start.elapsed().as_secs_f64(), lb, ub }
}

fn open_bound(stack: &[Node], inc: f64) -> f64 {
    stack.iter().map(|n| n.lb).fold(inc, f64::min)
}

fn most_fractional(x: &[f64], integer: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (&v, &int)) in x.iter().zip(integer).enumerate() {
        if !int {
            continue;
        }
        let f = v - v.floor();
        let score = f.min(1.0 - f);
        if score > INT_TOL && best.is_none_or(|(_, s)| score > s + 1e-12) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

fn snap(x: &[f64], integer: &[bool]) -> Vec<f64> {
    x.iter().zip(integer).map(|(&v, &int)| if int { v.round() } else { v }).collect()
}

fn is_feasible(lp: &LpProblem, integer: &[bool], x: &[f64]) -> bool {
    x.iter().zip(integer).all(|(v, &int)| !int || (v - v.round()).abs() <= INT_TOL) && lp.max_violation(x) <= 1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Answer of a linear optimisation oracle over a block set `Q^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub status: OracleStatus,
    /// `min weights'y`; `-inf` when unbounded, `+inf` when infeasible.
    pub value: f64,
    pub argmin: Option<Vec<f64>>,
    /// Recession direction of `P^j` with negative weight when unbounded.
    pub ray: Option<Vec<f64>>,
    pub nodes: usize,
}

/// Exact linear optimisation over one block's mixed-integer set, in local
/// coordinates (position `k` is global variable `support[k]`).
#[derive(Debug, Clone)]
pub struct BlockOracle {
    pub support: Vec<usize>,
    pub integer: Vec<bool>,
    lp: LpProblem,
    calls: std::cell::Cell<usize>,
}

impl BlockOracle {
    /// Oracle for block `j` of `model`, with the global bounds injected.
    pub fn new(model: &BlockStructuredMip, j: usize) -> Self {
        let b = &model.blocks[j];
        let lower: Vec<f64> = b.support.iter().map(|&i| model.lower[i]).collect();
        let upper: Vec<f64> = b.support.iter().map(|&i| model.upper[i]).collect();
        Self::from_parts(b.support.clone(), &lower, &upper, model.block_integrality(j), &b.rows)
    }

    /// `rows` use global variable ids, all of which must lie in `support`.
    pub fn from_parts(support: Vec<usize>, lower: &[f64], upper: &[f64], integer: Vec<bool>, rows: &[Row]) -> Self {
        let mut lp = LpProblem::new();
        for k in 0..support.len() {
            lp.add_column(0.0, VarBounds::new(lower[k], upper[k]));
        }
        for r in rows {
            let coeffs = r
                .coeffs
                .iter()
                .map(|&(i, a)| (support.iter().position(|&s| s == i).expect("row outside block support"), a))
                .collect();
            lp.add_row(Row::new(coeffs, r.sense, r.rhs));
        }
        BlockOracle { support, integer, lp, calls: std::cell::Cell::new(0) }
    }

    pub fn dim(&self) -> usize {
        self.support.len()
    }

    /// Number of oracle calls answered so far.
    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    pub fn bounds(&self) -> &[VarBounds] {
        &self.lp.bounds
    }

    pub fn is_binary(&self, k: usize) -> bool {
        let b = self.lp.bounds[k];
        self.integer[k] && b.lower >= 0.0 && b.upper <= 1.0
    }

    /// Permanently fixes local variable `k` (used after a strengthening
    /// subproblem proves the other value infeasible).
    pub fn fix(&mut self, k: usize, value: f64) {
        self.lp.bounds[k] = VarBounds::new(value, value);
    }

    /// Adds a local row `coeffs'y (sense) rhs` to the block description.
    pub fn add_local_row(&mut self, row: Row) {
        self.lp.add_row(row);
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.dim() && is_feasible(&self.lp, &self.integer, y)
    }

    pub fn minimize(&self, weights: &[f64]) -> Result<OracleResult, MipError> {
        self.minimize_fixed(weights, &[])
    }

    /// `min weights'y` over the block with extra temporary fixings `(k, value)`.
    pub fn minimize_fixed(&self, weights: &[f64], fixings: &[(usize, f64)]) -> Result<OracleResult, MipError> {
        assert_eq!(weights.len(), self.dim(), "weight vector does not match block support");
        self.calls.set(self.calls.get() + 1);
        let mut lp = self.lp.clone();
        lp.cost = weights.to_vec();
        for &(k, v) in fixings {
            let b = lp.bounds[k];
            if v < b.lower - INT_TOL || v > b.upper + INT_TOL {
                return Ok(OracleResult { status: OracleStatus::Infeasible, value: f64::INFINITY, argmin: None, ray: None, nodes: 0 });
            }
            lp.bounds[k] = VarBounds::new(v, v);
        }
        let res = solve_mip_lp(&lp, &self.integer, &MipOptions { trace_every: 0, ..MipOptions::default() })?;
        Ok(match res.status {
            MipStatus::Optimal => {
                let y = res.x.expect("optimal result carries a point");
                OracleResult { status: OracleStatus::Optimal, value: lp.objective(&y), argmin: Some(y), ray: None, nodes: res.nodes }
            }
            MipStatus::Infeasible => OracleResult { status: OracleStatus::Infeasible, value: f64::INFINITY, argmin: None, ray: None, nodes: res.nodes },
            MipStatus::Unbounded => OracleResult { status: OracleStatus::Unbounded, value: f64::NEG_INFINITY, argmin: None, ray: res.ray, nodes: res.nodes },
            MipStatus::NodeLimit | MipStatus::TimeLimit | MipStatus::SolutionLimit => return Err(MipError::OracleLimit(res.nodes)),
        })
    }
}

/// `D_j(weights) = min { weights'y : y in Q^j }`.
pub fn minimize_over_block(model: &BlockStructuredMip, j: usize, weights: &[f64]) -> Result<OracleResult, MipError> {
    BlockOracle::new(model, j).minimize(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example1;
    use crate::lp::solve_lp;
    use crate::model::Block;
    use proptest::prelude::*;

    /// Enumerates the integer points of a box-bounded pure-integer block.
    fn enumerate(o: &BlockOracle) -> Vec<Vec<f64>> {
        let mut pts = vec![vec![]];
        for b in o.bounds() {
            let mut next = Vec::new();
            for p in &pts {
                let mut v = b.lower.ceil();
                while v <= b.upper.floor() {
                    let mut q: Vec<f64> = p.clone();
                    q.push(v);
                    next.push(q);
                    v += 1.0;
                }
            }
            pts = next;
        }
        pts.into_iter().filter(|p| o.contains(p)).collect()
    }

    fn brute_min(o: &BlockOracle, w: &[f64]) -> f64 {
        enumerate(o).iter().map(|p| p.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn example1_block_values() {
        let m = example1();
        let r = minimize_over_block(&m, 0, &[1.0, 0.25]).unwrap();
        assert_eq!(r.status, OracleStatus::Optimal);
        assert!((r.value - 1.25).abs() < 1e-12);
        assert_eq!(r.argmin.unwrap(), vec![1.0, 1.0]);
        let r = minimize_over_block(&m, 0, &[2.0 / 11.0, 8.0 / 11.0]).unwrap();
        assert!((r.value - 10.0 / 11.0).abs() < 1e-12);
        assert_eq!(r.argmin.unwrap(), vec![1.0, 1.0]);
        let r = minimize_over_block(&m, 1, &[0.0, 0.0]).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn example1_full_mip_is_eight() {
        let r = solve_mip(&example1(), &MipOptions::default()).unwrap();
        assert_eq!(r.status, MipStatus::Optimal);
        assert!((r.objective - 8.0).abs() < 1e-9);
        assert!((r.bound - 8.0).abs() < 1e-9);
        let t = r.trace.last().unwrap();
        assert!(t.lb <= t.ub + 1e-9);
    }

    #[test]
    fn continuous_model_matches_lp() {
        let mut m = example1();
        m.integer = vec![false; 4];
        let r = solve_mip(&m, &MipOptions::default()).unwrap();
        let lp = solve_lp(&m.lp_relaxation()).unwrap();
        assert!((r.objective - lp.objective).abs() < 1e-9);
        assert_eq!(r.nodes, 1);
    }

    #[test]
    fn infeasible_toy() {
        let mut m = BlockStructuredMip::new(1);
        m.lower = vec![f64::NEG_INFINITY];
        m.integer = vec![true];
        m.linking = vec![Row::ge(vec![(0, 1.0)], 1.0), Row::le(vec![(0, 1.0)], 0.0)];
        let r = solve_mip(&m, &MipOptions::default()).unwrap();
        assert_eq!(r.status, MipStatus::Infeasible);
        assert!(r.x.is_none());
    }

    #[test]
    fn unbounded_block_returns_ray() {
        let mut m = BlockStructuredMip::new(2);
        m.integer = vec![true, true];
        m.blocks = vec![Block::new(vec![0, 1], vec![Row::le(vec![(0, 1.0), (1, -1.0)], 1.0)])];
        let r = minimize_over_block(&m, 0, &[-1.0, 0.5]).unwrap();
        assert_eq!(r.status, OracleStatus::Unbounded);
        let ray = r.ray.unwrap();
        assert!(-ray[0] + 0.5 * ray[1] < 0.0);
        assert!(ray[0] - ray[1] <= 1e-12 && ray[0] >= -1e-12 && ray[1] >= -1e-12);
    }

    #[test]
    fn node_limit_reports_partial_result() {
        let mut m = BlockStructuredMip::new(6);
        m.c = vec![-3.0, -5.0, -4.0, -6.0, -2.0, -7.0];
        m.upper = vec![1.0; 6];
        m.integer = vec![true; 6];
        m.linking = vec![Row::le((0..6).map(|i| (i, 2.0 + i as f64 * 1.3)).collect(), 9.1)];
        let r = solve_mip(&m, &MipOptions { node_limit: 2, ..MipOptions::default() }).unwrap();
        assert_eq!(r.status, MipStatus::NodeLimit);
        assert!(r.bound <= r.objective);
        let full = solve_mip(&m, &MipOptions::default()).unwrap();
        assert!(r.bound <= full.objective + 1e-9);
    }

    #[test]
    fn incumbent_is_kept() {
        let m = example1();
        let opts = MipOptions { incumbent: Some(vec![2.0, 2.0, 1.0, 1.0]), ..MipOptions::default() };
        let r = solve_mip(&m, &opts).unwrap();
        assert!((r.objective - 8.0).abs() < 1e-9);
        assert_eq!(r.status, MipStatus::Optimal);
    }

    fn random_block() -> impl Strategy<Value = BlockOracle> {
        (2usize..=4).prop_flat_map(|k| {
            (
                proptest::collection::vec((-1i32..=0, 1i32..=2), k),
                proptest::collection::vec((proptest::collection::vec(-3i32..=3, k), -2i32..=4), 0..=3),
            )
                .prop_map(move |(bnds, rows)| {
                    let support: Vec<usize> = (0..k).collect();
                    let lo: Vec<f64> = bnds.iter().map(|b| b.0 as f64).collect();
                    let up: Vec<f64> = bnds.iter().map(|b| b.1 as f64).collect();
                    let rows: Vec<Row> = rows
                        .into_iter()
                        .map(|(a, r)| Row::le(a.iter().enumerate().map(|(i, v)| (i, *v as f64)).collect(), r as f64))
                        .collect();
                    BlockOracle::from_parts(support, &lo, &up, vec![true; k], &rows)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn oracle_matches_enumeration(o in random_block(), w in proptest::collection::vec(-5.0f64..5.0, 4)) {
            let w = &w[..o.dim()];
            let brute = brute_min(&o, w);
            let r = o.minimize(w).unwrap();
            if brute.is_infinite() {
                prop_assert_eq!(r.status, OracleStatus::Infeasible);
            } else {
                prop_assert_eq!(r.status, OracleStatus::Optimal);
                prop_assert!((r.value - brute).abs() <= 1e-9);
                prop_assert!(o.contains(r.argmin.as_ref().unwrap()));
            }
        }

        #[test]
        fn block_function_is_concave_with_supergradients(
            o in random_block(),
            p1 in proptest::collection::vec(-5.0f64..5.0, 4),
            p2 in proptest::collection::vec(-5.0f64..5.0, 4),
            t in 0.0f64..1.0,
        ) {
            let k = o.dim();
            let (p1, p2) = (&p1[..k], &p2[..k]);
            let r1 = o.minimize(p1).unwrap();
            prop_assume!(r1.status == OracleStatus::Optimal);
            let r2 = o.minimize(p2).unwrap();
            let mid: Vec<f64> = p1.iter().zip(p2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            let rm = o.minimize(&mid).unwrap();
            prop_assert!(rm.value >= t * r1.value + (1.0 - t) * r2.value - 1e-9);
            let g = r1.argmin.unwrap();
            let pred = r1.value + p2.iter().zip(p1).zip(&g).map(|((a, b), y)| (a - b) * y).sum::<f64>();
            prop_assert!(r2.value <= pred + 1e-9);
        }
    }

    #[test]
    fn larger_binary_blocks_match_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let k = 12;
            let rows: Vec<Row> = (0..2)
                .map(|_| Row::le((0..k).map(|i| (i, rng.gen_range(1..20) as f64)).collect(), rng.gen_range(20..60) as f64))
                .collect();
            let o = BlockOracle::from_parts((0..k).collect(), &vec![0.0; k], &vec![1.0; k], vec![true; k], &rows);
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(-10.0..3.0)).collect();
            let r = o.minimize(&w).unwrap();
            assert!((r.value - brute_min(&o, &w)).abs() <= 1e-9);
        }
    }
}
