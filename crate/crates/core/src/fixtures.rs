//! Small hand-checkable models used by tests, examples and the CLI.

use crate::lagrangian::DualPoint;
use crate::lp::{LpProblem, VarBounds};
use crate::model::{Block, BlockStructuredMip, Row};

/// Two symmetric integer blocks over `[0.5, 2.5]^2` coupled by two rows.
///
/// The second linking row is stored as `3x1 + x2 + 3x3 + x4 >= 12`; the
/// bounds 7 (natural LP), 125/16, 149/19 and 8 all depend on this sign.
pub fn example1() -> BlockStructuredMip {
    let mut m = BlockStructuredMip::new(4);
    m.c = vec![1.0, 1.0, 2.0, 2.0];
    m.lower = vec![0.5; 4];
    m.upper = vec![2.5; 4];
    m.integer = vec![true; 4];
    m.linking = vec![
        Row::ge(vec![(1, 1.0), (3, 1.0)], 3.0),
        Row::ge(vec![(0, 3.0), (1, 1.0), (2, 3.0), (3, 1.0)], 12.0),
    ];
    m.blocks = vec![Block::new(vec![0, 1], vec![]), Block::new(vec![2, 3], vec![])];
    m
}

/// First multiplier pair of the two-block example (`z = 27/4`).
pub fn example1_dual_1() -> DualPoint {
    DualPoint::new(vec![vec![1.0, 0.25], vec![2.0, 1.25]], vec![0.75, 0.0])
}

/// Second multiplier pair of the two-block example (`z = 78/11`).
pub fn example1_dual_2() -> DualPoint {
    DualPoint::new(
        vec![vec![2.0 / 11.0, 8.0 / 11.0], vec![13.0 / 11.0, 19.0 / 11.0]],
        vec![0.0, 3.0 / 11.0],
    )
}

/// `min x1 - x2` s.t. `x1 + x2 >= 1`, `x2 >= 1`, `-x2 >= -1`, `x` free.
pub fn example2_lp() -> LpProblem {
    let mut lp = LpProblem::new();
    lp.add_column(1.0, VarBounds::free());
    lp.add_column(-1.0, VarBounds::free());
    lp.add_row(Row::ge(vec![(0, 1.0), (1, 1.0)], 1.0));
    lp.add_row(Row::ge(vec![(1, 1.0)], 1.0));
    lp.add_row(Row::ge(vec![(1, -1.0)], -1.0));
    lp
}
