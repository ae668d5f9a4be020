//! Dantzig-Wolfe block (DWB) cuts `pi'x_{I(j)} >= D_j(pi)` and the objective
//! cut, plus disjunctive coefficient strengthening and tilting.
//!
//! A [`CutFactory`] owns one oracle and one point cache per block; every
//! point the oracle returns is cached and reused to skip later oracle calls.

mod strengthen;
mod tilt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lagrangian::{wolfe_violation, DualPoint, LagrangianError, WOLFE_TOL};
use crate::lp::{LpProblem, VarBounds};
use crate::mip::{BlockOracle, MipError, OracleStatus};
use crate::model::{BlockStructuredMip, Row};

pub use tilt::TiltOutcome;

/// Absolute-plus-relative tolerance for "point is tight on a cut".
/// Relative size below which a cut coefficient is treated as round-off.
pub const SNAP_TOL: f64 = 1e-12;

pub const TIGHT_TOL: f64 = 1e-7;
/// Default cap on oracle calls spent by one [`CutFactory::tilt`] call.
pub const DEFAULT_TILT_BUDGET: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CutError {
    #[error("pricing is unbounded for block {0}; no DWB cut exists for these multipliers")]
    UnboundedDirection(usize),
    #[error("block {0} has no feasible point")]
    EmptyBlock(usize),
    #[error(transparent)]
    Oracle(#[from] MipError),
    #[error(transparent)]
    Dual(#[from] LagrangianError),
    #[error("cut {0} is not attached to a block")]
    NotABlockCut(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutOrigin {
    Dwb,
    Objective,
    Strengthened,
    Tilted(usize),
}

/// `sum coeffs_i x_i >= rhs` with coefficients on global variable ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub id: usize,
    pub block: Option<usize>,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub origin: CutOrigin,
    pub parent: Option<usize>,
}

impl Cut {
    pub fn to_row(&self) -> Row {
        Row::ge(self.coeffs.iter().copied().filter(|&(_, a)| a != 0.0).collect(), self.rhs)
    }

    /// True for the trivial cut `0 >= 0` produced by zero multipliers.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&(_, a)| a == 0.0) && self.rhs <= 0.0
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * x[i]).sum()
    }

    /// Dense coefficients over `support`.
    pub fn local(&self, support: &[usize]) -> Vec<f64> {
        let mut a = vec![0.0; support.len()];
        for &(i, v) in &self.coeffs {
            if let Some(k) = support.iter().position(|&s| s == i) {
                a[k] += v;
            }
        }
        a
    }
}

/// Feasible points of one block seen so far (`Q-hat^j`), in local coordinates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCache {
    pub points: Vec<Vec<f64>>,
}

impl PointCache {
    pub fn insert(&mut self, p: Vec<f64>) -> bool {
        if self.points.iter().any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= 1e-9)) {
            return false;
        }
        self.points.push(p);
        true
    }

    /// Points with `|a'x - f| <= TIGHT_TOL (1 + |f|)`, the known members of the cut's face.
    pub fn tight<'a>(&'a self, a: &'a [f64], f: f64) -> impl Iterator<Item = &'a Vec<f64>> + 'a {
        self.points.iter().filter(move |p| is_tight(a, f, p))
    }
}

pub(crate) fn is_tight(a: &[f64], f: f64, p: &[f64]) -> bool {
    (dot(a, p) - f).abs() <= TIGHT_TOL * (1.0 + f.abs())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Generates, strengthens and tilts cuts for one model.
#[derive(Debug, Clone)]
pub struct CutFactory<'m> {
    model: &'m BlockStructuredMip,
    oracles: Vec<BlockOracle>,
    caches: Vec<PointCache>,
    next_id: usize,
    /// Trivial cuts dropped by [`CutFactory::last_iteration_cuts`].
    pub zero_cuts: usize,
    /// Oracle-call cap for each tilting tree.
    pub tilt_budget: usize,
    /// Blocks whose hull was found not to be full-dimensional.
    pub flat_blocks: Vec<usize>,
    full_dim: Vec<Option<bool>>,
    extra_calls: usize,
}

impl<'m> CutFactory<'m> {
    pub fn new(model: &'m BlockStructuredMip) -> Self {
        CutFactory {
            model,
            oracles: (0..model.q()).map(|j| BlockOracle::new(model, j)).collect(),
            caches: vec![PointCache::default(); model.q()],
            next_id: 0,
            zero_cuts: 0,
            tilt_budget: DEFAULT_TILT_BUDGET,
            flat_blocks: Vec::new(),
            full_dim: vec![None; model.q()],
            extra_calls: 0,
        }
    }

    pub fn model(&self) -> &BlockStructuredMip {
        self.model
    }

    pub fn cache(&self, j: usize) -> &PointCache {
        &self.caches[j]
    }

    /// Seeds the cache of block `j` with known feasible points.
    pub fn seed_cache(&mut self, j: usize, points: impl IntoIterator<Item = Vec<f64>>) {
        for p in points {
            if self.oracles[j].contains(&p) {
                self.caches[j].insert(p);
            }
        }
    }

    /// Total oracle calls across blocks.
    pub fn oracle_calls(&self) -> usize {
        self.oracles.iter().map(BlockOracle::calls).sum::<usize>() + self.extra_calls
    }

    fn fresh_id(&mut self) -> usize {
        self.next_id += 1;
        self.next_id - 1
    }

    /// Drops round-off coefficients (relative size below `SNAP_TOL`) on bounded
    /// variables, relaxing the rhs by their largest possible contribution.
    fn make_cut(&mut self, block: Option<usize>, mut coeffs: Vec<(usize, f64)>, mut rhs: f64, origin: CutOrigin, parent: Option<usize>) -> Cut {
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.1.abs()));
        for (i, a) in coeffs.iter_mut() {
            let reach = self.model.lower[*i].abs().max(self.model.upper[*i].abs());
            if *a != 0.0 && a.abs() <= SNAP_TOL * scale && reach.is_finite() {
                rhs -= a.abs() * reach;
                *a = 0.0;
            }
        }
        Cut { id: self.fresh_id(), block, coeffs, rhs, origin, parent }
    }

    fn block_cut(&mut self, j: usize, a: &[f64], rhs: f64, origin: CutOrigin, parent: Option<usize>) -> Cut {
        let coeffs = self.model.blocks[j].support.iter().zip(a).map(|(&i, &v)| (i, v)).collect();
        self.make_cut(Some(j), coeffs, rhs, origin, parent)
    }

    /// `min a'y` over block `j`, caching the argmin.
    fn oracle_min(&mut self, j: usize, a: &[f64], fixings: &[(usize, f64)]) -> Result<crate::mip::OracleResult, CutError> {
        let r = self.oracles[j].minimize_fixed(a, fixings)?;
        if let Some(p) = &r.argmin {
            self.caches[j].insert(p.clone());
        }
        Ok(r)
    }

    /// The DWB cut `pi'x_{I(j)} >= D_j(pi)`.
    pub fn dwb_cut(&mut self, j: usize, pi: &[f64]) -> Result<Cut, CutError> {
        let r = self.oracle_min(j, pi, &[])?;
        match r.status {
            OracleStatus::Optimal => Ok(self.block_cut(j, pi, r.value, CutOrigin::Dwb, None)),
            OracleStatus::Unbounded => Err(CutError::UnboundedDirection(j)),
            OracleStatus::Infeasible => Err(CutError::EmptyBlock(j)),
        }
    }

    /// One DWB cut per block from Wolfe-feasible multipliers; trivial cuts are
    /// dropped and counted in `zero_cuts`.
    pub fn last_iteration_cuts(&mut self, dual: &DualPoint) -> Result<Vec<Cut>, CutError> {
        let viol = wolfe_violation(self.model, dual)?;
        if viol > WOLFE_TOL {
            return Err(LagrangianError::DualInfeasible(viol).into());
        }
        let mut cuts = Vec::new();
        for j in 0..self.model.q() {
            let cut = self.dwb_cut(j, &dual.pi[j])?;
            if cut.is_zero() {
                self.zero_cuts += 1;
            } else {
                cuts.push(cut);
            }
        }
        Ok(cuts)
    }

    /// `c'x >= z_d` over all variables.
    pub fn objective_cut(&mut self, z_d: f64) -> Cut {
        let coeffs = self.model.c.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(i, &c)| (i, c)).collect();
        self.make_cut(None, coeffs, z_d, CutOrigin::Objective, None)
    }

    /// `min_{y in Q^j} a'y - f`; nonnegative iff the cut is valid. Objective
    /// cuts are checked against the full model by branch and bound.
    pub fn validity_slack(&mut self, cut: &Cut) -> Result<f64, CutError> {
        match cut.block {
            Some(j) => {
                let a = cut.local(&self.model.blocks[j].support);
                let r = self.oracle_min(j, &a, &[])?;
                Ok(match r.status {
                    OracleStatus::Optimal => r.value - cut.rhs,
                    OracleStatus::Unbounded => f64::NEG_INFINITY,
                    OracleStatus::Infeasible => f64::INFINITY,
                })
            }
            None => {
                let mut lp = self.model.lp_relaxation();
                lp.cost = vec![0.0; self.model.n()];
                for &(i, a) in &cut.coeffs {
                    lp.cost[i] += a;
                }
                let r = crate::mip::solve_mip_lp(&lp, &self.model.integer, &Default::default()).map_err(MipError::from)?;
                Ok(r.objective - cut.rhs)
            }
        }
    }
}

/// `D_j(pi)` cut for block `j` of `model`.
pub fn dwb_cut(model: &BlockStructuredMip, j: usize, pi: &[f64]) -> Result<Cut, CutError> {
    CutFactory::new(model).dwb_cut(j, pi)
}

pub fn last_iteration_cuts(model: &BlockStructuredMip, dual: &DualPoint) -> Result<Vec<Cut>, CutError> {
    CutFactory::new(model).last_iteration_cuts(dual)
}

pub fn objective_cut(model: &BlockStructuredMip, z_d: f64) -> Cut {
    CutFactory::new(model).objective_cut(z_d)
}

/// Strengthens one block cut; `order` lists global variable ids (default:
/// the binaries of the block in original order).
pub fn strengthen_coefficients(model: &BlockStructuredMip, cut: &Cut, order: Option<&[usize]>) -> Result<Cut, CutError> {
    let mut f = CutFactory::new(model);
    f.next_id = cut.id + 1;
    f.strengthen(cut, order)
}

/// Depth-`depth` tilting tree of one block cut.
pub fn tilt(model: &BlockStructuredMip, cut: &Cut, depth: usize) -> Result<TiltOutcome, CutError> {
    let mut f = CutFactory::new(model);
    f.next_id = cut.id + 1;
    f.tilt(cut, depth)
}

/// Which rows of the model accompany the cuts in [`cut_lp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutLpBase {
    /// Linking rows and variable bounds only.
    Linking,
    /// The full natural LP relaxation (linking and block rows, bounds).
    Natural,
}

/// `min c'x` over the chosen base rows, the variable bounds and the cuts.
pub fn cut_lp(model: &BlockStructuredMip, cuts: &[Cut], base: CutLpBase) -> LpProblem {
    let mut lp = match base {
        CutLpBase::Natural => model.lp_relaxation(),
        CutLpBase::Linking => {
            let mut lp = LpProblem::new();
            for i in 0..model.n() {
                lp.add_column(model.c[i], VarBounds::new(model.lower[i], model.upper[i]));
            }
            for r in &model.linking {
                lp.add_row(r.clone());
            }
            lp
        }
    };
    for c in cuts {
        lp.add_row(c.to_row());
    }
    lp
}

#[cfg(test)]
mod tests;
