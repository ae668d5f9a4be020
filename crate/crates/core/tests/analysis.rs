mod common;

use dwb_core::analysis::{check_prop2, degeneracy_level, optimal_face_dim, polyhedron_dim, ZERO_TOL};
use dwb_core::fixtures::example2_lp;
use dwb_core::lp::{solve_lp, LpStatus};

#[test]
fn example2_basis_is_nondegenerate() {
    let lp = example2_lp();
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    let r = degeneracy_level(&sol.row_duals, lp.num_cols(), ZERO_TOL);
    assert_eq!(r.level, 0);
    assert_eq!(optimal_face_dim(&lp).unwrap(), 0);
}

#[test]
fn optimal_face_dim_is_bounded_by_dual_support() {
    let mut wide = 0;
    for seed in 0..80 {
        let lp = common::random_small_lp(seed, 6);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "seed {seed}");
        let n = lp.num_cols();
        let report = degeneracy_level(&sol.dual_vector(), n, ZERO_TOL);
        let dim = optimal_face_dim(&lp).unwrap();
        assert!(dim <= report.level as isize, "seed {seed}: face dim {dim} > {}", report.level);
        assert!(dim >= 0);
        wide += (dim > 0) as usize;
    }
    assert!(wide > 0, "no instance had a non-trivial optimal face");
}

#[test]
fn proper_hyperplane_slices_drop_one_dimension() {
    let mut checked = 0;
    for seed in 0..60 {
        let lp = common::random_small_lp(1000 + seed, 5);
        let min = solve_lp(&lp).unwrap();
        let mut neg = lp.clone();
        neg.cost.iter_mut().for_each(|c| *c = -*c);
        let max = solve_lp(&neg).unwrap();
        let (lo, hi) = (min.objective, -max.objective);
        if hi - lo < 1e-6 {
            continue;
        }
        assert!(polyhedron_dim(&lp).unwrap() >= 1);
        for t in [0.25, 0.5, 0.9] {
            assert!(check_prop2(&lp, lo + t * (hi - lo)).unwrap(), "seed {seed} t {t}");
        }
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} instances had a proper slice");
}
