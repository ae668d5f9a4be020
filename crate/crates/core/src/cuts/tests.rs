use super::*;
use crate::fixtures::{example1, example1_dual_1, example1_dual_2};
use crate::lp::{solve_lp, LpStatus};
use crate::model::{Block, Sense};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-7
}

/// One block of `n` binaries with the given local rows.
fn binary_block(n: usize, rows: Vec<Row>) -> BlockStructuredMip {
    let mut m = BlockStructuredMip::new(n);
    m.upper = vec![1.0; n];
    m.integer = vec![true; n];
    m.blocks = vec![Block::new((0..n).collect(), rows)];
    m
}

fn block_cut(coeffs: &[f64], rhs: f64) -> Cut {
    Cut { id: 0, block: Some(0), coeffs: coeffs.iter().copied().enumerate().collect(), rhs, origin: CutOrigin::Dwb, parent: None }
}

/// All 0/1 points of the block satisfying its rows.
fn enumerate_binary(m: &BlockStructuredMip) -> Vec<Vec<f64>> {
    let n = m.n();
    (0..1u32 << n)
        .map(|mask| (0..n).map(|i| ((mask >> i) & 1) as f64).collect::<Vec<_>>())
        .filter(|x| m.blocks[0].rows.iter().all(|r| r.violation(x) <= 1e-9))
        .collect()
}

fn valid_by_enumeration(m: &BlockStructuredMip, cut: &Cut) -> bool {
    enumerate_binary(m).iter().all(|x| cut.lhs(x) >= cut.rhs - 1e-9)
}

fn cut_lp_value(m: &BlockStructuredMip, cuts: &[Cut]) -> f64 {
    let sol = solve_lp(&cut_lp(m, cuts, CutLpBase::Linking)).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    sol.objective
}

#[test]
fn example1_block_cut() {
    let m = example1();
    let cut = dwb_cut(&m, 0, &[1.0, 0.25]).unwrap();
    assert_eq!(cut.coeffs, vec![(0, 1.0), (1, 0.25)]);
    assert!(close(cut.rhs, 1.25));
    assert_eq!(cut.origin, CutOrigin::Dwb);
}

#[test]
fn zero_multipliers_give_trivial_cut() {
    let m = example1();
    let cut = dwb_cut(&m, 0, &[0.0, 0.0]).unwrap();
    assert!(cut.is_zero());
}

#[test]
fn box_block_negative_multiplier() {
    let m = binary_block(1, vec![]);
    let cut = dwb_cut(&m, 0, &[-1.0]).unwrap();
    assert!(close(cut.rhs, -1.0));
}

#[test]
fn unbounded_pricing_is_rejected() {
    let mut m = BlockStructuredMip::new(1);
    m.blocks = vec![Block::new(vec![0], vec![])];
    assert_eq!(dwb_cut(&m, 0, &[-1.0]), Err(CutError::UnboundedDirection(0)));
}

#[test]
fn example1_cut_lp_bounds() {
    let m = example1();
    let c1 = last_iteration_cuts(&m, &example1_dual_1()).unwrap();
    let c2 = last_iteration_cuts(&m, &example1_dual_2()).unwrap();
    assert!(close(cut_lp_value(&m, &c1), 125.0 / 16.0));
    assert!(close(cut_lp_value(&m, &c2), 149.0 / 19.0));
    let joint: Vec<Cut> = c1.iter().chain(&c2).cloned().collect();
    assert!(close(cut_lp_value(&m, &joint), 8.0));
}

#[test]
fn infeasible_dual_is_rejected() {
    let m = example1();
    let mut d = example1_dual_1();
    d.pi[0][0] += 1.0;
    assert!(matches!(last_iteration_cuts(&m, &d), Err(CutError::Dual(LagrangianError::DualInfeasible(_)))));
}

#[test]
fn objective_cut_lifts_natural_bound() {
    let m = example1();
    let cut = objective_cut(&m, 8.0);
    assert_eq!(cut.coeffs, vec![(0, 1.0), (1, 1.0), (2, 2.0), (3, 2.0)]);
    assert_eq!(cut.block, None);
    let sol = solve_lp(&cut_lp(&m, &[cut.clone()], CutLpBase::Natural)).unwrap();
    assert!(close(sol.objective, 8.0));
    let mut f = CutFactory::new(&m);
    assert!(f.validity_slack(&cut).unwrap() >= -1e-9);
}

#[test]
fn strengthening_example() {
    let m = binary_block(2, vec![Row::le(vec![(0, 2.0), (1, 2.0)], 3.0)]);
    let root = block_cut(&[-1.0, -1.0], -2.0);
    let mut f = CutFactory::new(&m);
    let s1 = f.strengthen(&root, Some(&[0])).unwrap();
    assert_eq!(s1.local(&[0, 1]), vec![-2.0, -1.0]);
    assert!(close(s1.rhs, -2.0));
    assert!(valid_by_enumeration(&m, &s1));
    let s2 = f.strengthen(&s1, Some(&[1])).unwrap();
    assert_eq!(s2.local(&[0, 1]), vec![-2.0, -2.0]);
    assert!(close(s2.rhs, -2.0));
    assert!(valid_by_enumeration(&m, &s2));
    assert_eq!(s2.origin, CutOrigin::Strengthened);
    assert_eq!(s2.parent, Some(s1.id));
    // Default order runs both coordinates in one pass.
    let once = strengthen_coefficients(&m, &root, None).unwrap();
    assert_eq!(once.local(&[0, 1]), vec![-2.0, -2.0]);
}

/// `min parent_lhs - parent_rhs` over the strengthened cut and the unit box.
fn dominance_gap(child: &Cut, parent: &Cut, n: usize) -> f64 {
    let mut lp = LpProblem::new();
    for _ in 0..n {
        lp.add_column(0.0, VarBounds::new(0.0, 1.0));
    }
    for &(i, a) in &parent.coeffs {
        lp.cost[i] += a;
    }
    lp.add_row(child.to_row());
    solve_lp(&lp).unwrap().objective - parent.rhs
}

#[test]
fn strengthened_cut_implies_parent() {
    let m = binary_block(3, vec![Row::le(vec![(0, 3.0), (1, 2.0), (2, 2.0)], 4.0)]);
    let root = block_cut(&[-1.0, -1.0, -1.0], -3.0);
    let s = strengthen_coefficients(&m, &root, None).unwrap();
    assert!(valid_by_enumeration(&m, &s));
    assert!(dominance_gap(&s, &root, 3) >= -1e-9);
}

#[test]
fn strengthening_tight_cut_is_noop() {
    let m = binary_block(2, vec![Row::ge(vec![(0, 1.0), (1, 1.0)], 1.0)]);
    let root = block_cut(&[1.0, 1.0], 1.0);
    let s = strengthen_coefficients(&m, &root, None).unwrap();
    assert_eq!(s, root);
}

#[test]
fn strengthening_fixes_infeasible_side() {
    let m = binary_block(2, vec![Row::eq(vec![(0, 1.0)], 0.0)]);
    let root = block_cut(&[0.0, 1.0], 0.0);
    let mut f = CutFactory::new(&m);
    let s = f.strengthen(&root, Some(&[0])).unwrap();
    assert_eq!(f.oracles[0].bounds()[0], VarBounds::new(0.0, 0.0));
    assert!(valid_by_enumeration(&m, &s));
}

#[test]
fn continuous_block_is_not_strengthened() {
    let m = example1();
    let cut = dwb_cut(&m, 0, &[1.0, 0.25]).unwrap();
    assert_eq!(strengthen_coefficients(&m, &cut, None).unwrap(), cut);
}

#[test]
fn tilting_unit_square() {
    let m = binary_block(2, vec![]);
    let root = block_cut(&[1.0, 1.0], 0.0);
    let mut f = CutFactory::new(&m);
    f.seed_cache(0, [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
    let out = f.tilt(&root, 1).unwrap();
    assert!(!out.budget_exceeded && !out.not_full_dim);
    let got: Vec<(Vec<f64>, f64)> = out.cuts.iter().map(|c| (c.local(&[0, 1]), c.rhs)).collect();
    assert_eq!(got.len(), 2);
    let expect = [(vec![0.0, 1.0], 0.0), (vec![1.0, 0.0], 0.0)];
    for (e, g) in expect.iter().zip(&got) {
        assert!(e.0.iter().zip(&g.0).all(|(a, b)| (a - b).abs() <= 1e-9) && (e.1 - g.1).abs() <= 1e-9, "{got:?}");
    }
    for c in &out.cuts {
        assert_eq!(c.origin, CutOrigin::Tilted(1));
        assert_eq!(c.parent, Some(root.id));
    }
}

#[test]
fn tilting_without_cache_matches() {
    let m = binary_block(2, vec![]);
    let out = tilt(&m, &block_cut(&[1.0, 1.0], 0.0), 1).unwrap();
    let mut got: Vec<Vec<f64>> = out.cuts.iter().map(|c| c.local(&[0, 1])).collect();
    got.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(got, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
}

#[test]
fn tilting_depth_zero_and_facets() {
    let m = binary_block(2, vec![]);
    let root = block_cut(&[1.0, 1.0], 0.0);
    assert_eq!(tilt(&m, &root, 0).unwrap().cuts, vec![root.clone()]);
    let facet = block_cut(&[1.0, 0.0], 0.0);
    let mut f = CutFactory::new(&m);
    f.seed_cache(0, [vec![0.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!(f.tilt(&facet, 3).unwrap().cuts, vec![facet]);
}

#[test]
fn flat_block_is_returned_unchanged() {
    let m = binary_block(2, vec![Row::eq(vec![(0, 1.0), (1, -1.0)], 0.0)]);
    let root = block_cut(&[1.0, 1.0], 0.0);
    let mut f = CutFactory::new(&m);
    let out = f.tilt(&root, 2).unwrap();
    assert!(out.not_full_dim);
    assert_eq!(out.cuts, vec![root]);
    assert_eq!(f.flat_blocks, vec![0]);
}

#[test]
fn deep_tilting_stays_valid_and_implies_parent() {
    let m = binary_block(4, vec![Row::le(vec![(0, 3.0), (1, 2.0), (2, 2.0), (3, 1.0)], 5.0)]);
    let root = block_cut(&[1.0, 1.0, 1.0, 1.0], 0.0);
    for d in 1..=3 {
        let out = tilt(&m, &root, d).unwrap();
        assert!(!out.cuts.is_empty() && out.cuts.len() <= 1 << d);
        for c in &out.cuts {
            assert!(valid_by_enumeration(&m, c), "{c:?}");
        }
        // The leaves imply the root over the unit box.
        let mut lp = LpProblem::new();
        for _ in 0..4 {
            lp.add_column(1.0, VarBounds::new(0.0, 1.0));
        }
        for c in &out.cuts {
            lp.add_row(c.to_row());
        }
        assert!(solve_lp(&lp).unwrap().objective >= -1e-9);
    }
}

#[test]
fn tilted_children_gain_a_tight_point() {
    let m = binary_block(3, vec![Row::le(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 2.0)]);
    let root = block_cut(&[1.0, 1.0, 1.0], 0.0);
    let mut f = CutFactory::new(&m);
    let out = f.tilt(&root, 1).unwrap();
    let pts = enumerate_binary(&m);
    let tight = |c: &Cut| pts.iter().filter(|x| (c.lhs(x) - c.rhs).abs() <= 1e-9).count();
    for c in &out.cuts {
        assert!(tight(c) > tight(&root), "{c:?}");
    }
}

#[test]
fn cut_serialises() {
    let c = block_cut(&[1.0, 0.25], 1.25);
    let s = serde_json::to_string(&c).unwrap();
    let back: Cut = serde_json::from_str(&s).unwrap();
    assert_eq!(back, c);
    assert_eq!(c.to_row().sense, Sense::Ge);
}

