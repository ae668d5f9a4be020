use super::{Cut, CutError, CutFactory, CutOrigin};
use crate::mip::OracleStatus;
use crate::model::INT_TOL;

impl CutFactory<'_> {
    /// One pass of disjunctive coefficient strengthening over the binaries
    /// in `order` (global ids; default: the block's binaries in support order).
    ///
    /// For binary `x_i` the subproblem with `x_i = 1` is tried first; if it
    /// raises the bound, `a_i` is lowered and the `x_i = 0` side is skipped
    /// for that coordinate. An infeasible side permanently fixes `x_i` in
    /// this factory's copy of the block.
    pub fn strengthen(&mut self, cut: &Cut, order: Option<&[usize]>) -> Result<Cut, CutError> {
        let j = cut.block.ok_or(CutError::NotABlockCut(cut.id))?;
        let support = self.model.blocks[j].support.clone();
        let mut a = cut.local(&support);
        let mut f = cut.rhs;
        let locals: Vec<usize> = match order {
            Some(ids) => ids.iter().filter_map(|&i| support.iter().position(|&s| s == i)).collect(),
            None => (0..support.len()).collect(),
        };
        let mut changed = false;
        for k in locals {
            if !self.oracles[j].is_binary(k) {
                continue;
            }
            let (mut seen0, mut seen1) = (false, false);
            for p in self.caches[j].tight(&a, f) {
                seen0 |= p[k].abs() <= INT_TOL;
                seen1 |= (p[k] - 1.0).abs() <= INT_TOL;
            }
            if seen0 && seen1 {
                continue;
            }
            let tol = 1e-9 * (1.0 + f.abs());
            let up = self.oracle_min(j, &a, &[(k, 1.0)])?;
            match up.status {
                OracleStatus::Infeasible => self.oracles[j].fix(k, 0.0),
                OracleStatus::Optimal if up.value > f + tol => {
                    a[k] -= up.value - f;
                    changed = true;
                    continue;
                }
                _ => {}
            }
            let down = self.oracle_min(j, &a, &[(k, 0.0)])?;
            match down.status {
                OracleStatus::Infeasible => self.oracles[j].fix(k, 1.0),
                OracleStatus::Optimal if down.value > f + tol => {
                    a[k] += down.value - f;
                    f = down.value;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return Ok(cut.clone());
        }
        Ok(self.block_cut(j, &a, f, CutOrigin::Strengthened, Some(cut.id)))
    }
}
