#![allow(dead_code)]

use dwb_core::instances::{build_mkap_model, build_tkp_model, generate_mkap, generate_random_model, generate_tkp, Correlation, RandomModelConfig};
use dwb_core::lp::{solve_lp, LpProblem, LpStatus, VarBounds};
use dwb_core::{BlockStructuredMip, Row};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Named {
    pub name: String,
    pub model: BlockStructuredMip,
}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Odometer over the integer box `[lo, hi]`.
pub fn integer_box(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut x = lo.to_vec();
    loop {
        out.push(x.clone());
        let mut k = 0;
        loop {
            if k == x.len() {
                return out;
            }
            if x[k] < hi[k] {
                x[k] += 1.0;
                break;
            }
            x[k] = lo[k];
            k += 1;
        }
    }
}

fn satisfies(rows: &[Row], x: &[f64]) -> bool {
    rows.iter().all(|r| r.violation(x) <= 1e-9)
}

/// Integer points of block `j` in local coordinates.
pub fn block_points(model: &BlockStructuredMip, j: usize) -> Vec<Vec<f64>> {
    let b = &model.blocks[j];
    assert!(b.support.iter().all(|&i| model.integer[i] && model.upper[i].is_finite() && model.lower[i].is_finite()));
    let lo: Vec<f64> = b.support.iter().map(|&i| model.lower[i].ceil()).collect();
    let hi: Vec<f64> = b.support.iter().map(|&i| model.upper[i].floor()).collect();
    let mut full = vec![0.0; model.n()];
    integer_box(&lo, &hi)
        .into_iter()
        .filter(|p| {
            for (&i, v) in b.support.iter().zip(p) {
                full[i] = *v;
            }
            satisfies(&b.rows, &full)
        })
        .collect()
}

/// DW bound from all block points: `min c'x` over linking rows, bounds and
/// `x_{I(j)} in conv(Q^j)` for every block.
pub fn enumerated_z_d(model: &BlockStructuredMip) -> f64 {
    let n = model.n();
    let mut lp = LpProblem::new();
    for i in 0..n {
        lp.add_column(model.c[i], VarBounds::new(model.lower[i], model.upper[i]));
    }
    for r in &model.linking {
        lp.add_row(r.clone());
    }
    for (j, b) in model.blocks.iter().enumerate() {
        let pts = block_points(model, j);
        assert!(!pts.is_empty(), "block {j} is empty");
        let cols: Vec<usize> = pts.iter().map(|_| lp.add_column(0.0, VarBounds::nonneg())).collect();
        for (k, &i) in b.support.iter().enumerate() {
            let mut coeffs = vec![(i, 1.0)];
            coeffs.extend(pts.iter().zip(&cols).filter(|(p, _)| p[k] != 0.0).map(|(p, &c)| (c, -p[k])));
            lp.add_row(Row::eq(coeffs, 0.0));
        }
        lp.add_row(Row::eq(cols.iter().map(|&c| (c, 1.0)).collect(), 1.0));
    }
    let sol = solve_lp(&lp).expect("enumerated DW LP");
    assert_eq!(sol.status, LpStatus::Optimal);
    sol.objective
}

/// `min c'x` over all integer points of the model, by enumeration.
pub fn brute_force_z_star(model: &BlockStructuredMip) -> Option<f64> {
    assert!(model.integer.iter().all(|&b| b));
    let lo: Vec<f64> = model.lower.iter().map(|v| v.ceil()).collect();
    let hi: Vec<f64> = model.upper.iter().map(|v| v.floor()).collect();
    integer_box(&lo, &hi)
        .into_iter()
        .filter(|x| model.all_rows().all(|r| r.violation(x) <= 1e-9))
        .map(|x| model.c.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>())
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

/// 20 loosely coupled instances: 2-3 blocks, 2-4 integer variables each.
pub fn random_suite() -> Vec<Named> {
    (0..20)
        .map(|t| {
            let cfg = RandomModelConfig {
                blocks: 2 + t % 2,
                vars_per_block: 2 + t % 3,
                rows_per_block: 1 + t % 2,
                linking_rows: 1 + t % 3,
                upper: 1 + (t % 3) as u32,
            };
            let seed = 100 + t as u64;
            Named { name: format!("random_{t}"), model: generate_random_model(&cfg, seed) }
        })
        .collect()
}

/// 10 TKP models with 6-10 items and windows of 2 or 3.
pub fn tkp_suite() -> Vec<Named> {
    (0..10)
        .map(|t| {
            let (n, b) = (6 + t % 5, 2 + t % 2);
            let inst = generate_tkp(n, 200 + t as u64);
            Named { name: format!("tkp_{n}_{b}_{t}"), model: build_tkp_model(&inst, b).unwrap() }
        })
        .collect()
}

/// The 30-instance recovery suite.
pub fn suite() -> Vec<Named> {
    let mut s = random_suite();
    s.extend(tkp_suite());
    s
}

fn mkap_set(k: usize, m: usize, n: usize, seed: u64) -> Vec<Named> {
    let corr = [Correlation::Uncorrelated, Correlation::Weak, Correlation::Strong];
    (0..10)
        .map(|t| {
            let inst = generate_mkap(k, m, n, corr[t % 3], seed + t as u64).unwrap();
            Named { name: format!("mkap_{k}_{m}_{n}_{t}"), model: build_mkap_model(&inst) }
        })
        .collect()
}

/// 10 MKAP models with 4 classes, 12 knapsacks and 80 items, large enough
/// for the dual methods to separate.
pub fn mkap_minis() -> Vec<Named> {
    mkap_set(4, 12, 80, 300)
}

/// 10 MKAP models small enough for the internal branch and bound.
pub fn mkap_small() -> Vec<Named> {
    mkap_set(2, 2, 10, 400)
}

/// Small LP with integer data in `-3..=3`, `2-max_vars` variables in `[0, 3]`
/// and `1-5` rows built around a feasible integer point, so the region is a
/// nonempty polytope and optimal faces are often non-trivial.
pub fn random_small_lp(seed: u64, max_vars: usize) -> LpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_vars);
    let mut lp = LpProblem::new();
    for _ in 0..n {
        lp.add_column(rng.gen_range(-2..=2) as f64, VarBounds::new(0.0, 3.0));
    }
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=3) as f64).collect();
    for _ in 0..rng.gen_range(1..=5) {
        let a: Vec<(usize, f64)> = (0..n).map(|i| (i, rng.gen_range(-3..=3) as f64)).filter(|t| t.1 != 0.0).collect();
        if a.is_empty() {
            continue;
        }
        let act: f64 = a.iter().map(|&(i, v)| v * x0[i]).sum();
        let slack = rng.gen_range(0..=2) as f64;
        lp.add_row(match rng.gen_range(0..3) {
            0 => Row::ge(a, act - slack),
            1 => Row::le(a, act + slack),
            _ => Row::eq(a, act),
        });
    }
    lp
}
