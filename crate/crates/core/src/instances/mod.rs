//! Instance generators (multiple knapsack assignment, temporal knapsack,
//! random loosely coupled models), their block-structured formulations,
//! versioned JSON files and LP-format export.

mod io;
mod lp_format;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Block, BlockStructuredMip, Row};

pub use io::{read_instance, read_manifest, write_instance, write_manifest, ManifestEntry, SCHEMA_VERSION};
pub use lp_format::{export_lp_file, write_lp};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("item count {n} is not divisible by class count {k}")]
    Divisibility { n: usize, k: usize },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("unsupported schema version {0}")]
    UnsupportedVersion(u64),
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("invalid field: {0}")]
    Field(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    Uncorrelated,
    Weak,
    Strong,
}

impl std::str::FromStr for Correlation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uncorrelated" => Ok(Correlation::Uncorrelated),
            "weak" => Ok(Correlation::Weak),
            "strong" => Ok(Correlation::Strong),
            other => Err(format!("unknown correlation {other:?}")),
        }
    }
}

/// Multiple knapsack assignment: items `N` split into classes `S_k`, knapsacks `M`.
/// Each knapsack takes items of at most one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MkapInstance {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub profits: Vec<f64>,
    pub weights: Vec<f64>,
    pub capacities: Vec<f64>,
    pub classes: Vec<Vec<usize>>,
    pub correlation: Correlation,
    pub seed: u64,
}

/// Generates an MKAP instance. Weights are uniform integers in `[10, 1000]`;
/// profits are uniform in `[10, 1000]` (uncorrelated), uniform in
/// `[w - 100, w + 100]` clipped at 1 (weak) or `w + 100` (strong). Capacities
/// are `round(0.5 sum(w) / |M|)` scaled by a uniform factor in `[0.9, 1.1]`.
/// Classes are consecutive runs of `|N| / |K|` items.
pub fn generate_mkap(k: usize, m: usize, n: usize, correlation: Correlation, seed: u64) -> Result<MkapInstance, InstanceError> {
    if k == 0 || n % k != 0 {
        return Err(InstanceError::Divisibility { n, k });
    }
    if m == 0 {
        return Err(InstanceError::Invalid("no knapsacks".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(10..=1000) as f64).collect();
    let profits: Vec<f64> = weights
        .iter()
        .map(|&w| match correlation {
            Correlation::Uncorrelated => rng.gen_range(10..=1000) as f64,
            Correlation::Weak => (rng.gen_range(-100..=100) as f64 + w).max(1.0),
            Correlation::Strong => w + 100.0,
        })
        .collect();
    let base = 0.5 * weights.iter().sum::<f64>() / m as f64;
    let capacities = (0..m).map(|_| (base * rng.gen_range(0.9..=1.1)).round().max(1.0)).collect();
    let size = n / k;
    let classes = (0..k).map(|c| (c * size..(c + 1) * size).collect()).collect();
    Ok(MkapInstance { k, m, n, profits, weights, capacities, classes, correlation, seed })
}

impl MkapInstance {
    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |s: &str| Err(InstanceError::Invalid(s.into()));
        if self.profits.len() != self.n || self.weights.len() != self.n || self.capacities.len() != self.m {
            return bad("vector lengths do not match K, M, N");
        }
        if self.classes.len() != self.k {
            return bad("class count does not match K");
        }
        let mut seen = vec![false; self.n];
        for c in &self.classes {
            for &j in c {
                if j >= self.n || seen[j] {
                    return bad("classes do not partition the items");
                }
                seen[j] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("classes do not partition the items");
        }
        if self.profits.iter().chain(&self.weights).chain(&self.capacities).any(|v| *v <= 0.0) {
            return bad("profits, weights and capacities must be positive");
        }
        Ok(())
    }

    /// Global id of `x_{ij}`.
    pub fn x_index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Global id of `y_{ik}`.
    pub fn y_index(&self, i: usize, k: usize) -> usize {
        self.m * self.n + i * self.k + k
    }
}

/// Binary `x_{ij}` (item `j` in knapsack `i`) and `y_{ik}` (knapsack `i` takes
/// class `k`); `min -sum p_j x_{ij}`; linking rows `sum_i x_{ij} <= 1` and
/// `sum_k y_{ik} <= 1`; one block per `(i, k)` with `sum_{j in S_k} w_j x_{ij} <= C_i y_{ik}`.
pub fn build_mkap_model(inst: &MkapInstance) -> BlockStructuredMip {
    let nv = inst.m * inst.n + inst.m * inst.k;
    let mut m = BlockStructuredMip::new(nv);
    m.upper = vec![1.0; nv];
    m.integer = vec![true; nv];
    let mut names = vec![String::new(); nv];
    for i in 0..inst.m {
        for j in 0..inst.n {
            m.c[inst.x_index(i, j)] = -inst.profits[j];
            names[inst.x_index(i, j)] = format!("x_{}_{}", i + 1, j + 1);
        }
        for k in 0..inst.k {
            names[inst.y_index(i, k)] = format!("y_{}_{}", i + 1, k + 1);
        }
    }
    for j in 0..inst.n {
        m.linking.push(Row::le((0..inst.m).map(|i| (inst.x_index(i, j), 1.0)).collect(), 1.0));
    }
    for i in 0..inst.m {
        m.linking.push(Row::le((0..inst.k).map(|k| (inst.y_index(i, k), 1.0)).collect(), 1.0));
    }
    for i in 0..inst.m {
        for (k, class) in inst.classes.iter().enumerate() {
            let mut support: Vec<usize> = class.iter().map(|&j| inst.x_index(i, j)).collect();
            let mut coeffs: Vec<(usize, f64)> = class.iter().map(|&j| (inst.x_index(i, j), inst.weights[j])).collect();
            support.push(inst.y_index(i, k));
            coeffs.push((inst.y_index(i, k), -inst.capacities[i]));
            m.blocks.push(Block::new(support, vec![Row::le(coeffs, 0.0)]));
        }
    }
    m.names = Some(names);
    m
}

/// Temporal knapsack: item `i` occupies capacity during `[s_i, t_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TkpInstance {
    pub profits: Vec<f64>,
    pub weights: Vec<f64>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub capacity: f64,
}

impl TkpInstance {
    pub fn n(&self) -> usize {
        self.profits.len()
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let n = self.n();
        if self.weights.len() != n || self.start.len() != n || self.end.len() != n {
            return Err(InstanceError::Invalid("vector lengths differ".into()));
        }
        if self.start.iter().zip(&self.end).any(|(s, t)| s >= t) {
            return Err(InstanceError::Invalid("every item needs start < end".into()));
        }
        Ok(())
    }

    /// `S_j = {i : s_i <= s_j < t_i}`, the items active at the start of item `j`.
    pub fn active_set(&self, j: usize) -> Vec<usize> {
        let sj = self.start[j];
        (0..self.n()).filter(|&i| self.start[i] <= sj && self.end[i] > sj).collect()
    }
}

/// Random TKP with `n` items sorted by start time: starts uniform in
/// `[0, 2n)`, durations in `[1, n]`, weights and profits in `[1, 100]`, and
/// capacity half of the heaviest active load (at least the largest weight).
pub fn generate_tkp(n: usize, seed: u64) -> TkpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items: Vec<(f64, f64, f64, f64)> = (0..n)
        .map(|_| {
            let s = rng.gen_range(0..(2 * n).max(1)) as f64;
            let d = rng.gen_range(1..=n.max(1)) as f64;
            (s, s + d, rng.gen_range(1..=100) as f64, rng.gen_range(1..=100) as f64)
        })
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut inst = TkpInstance {
        profits: items.iter().map(|it| it.3).collect(),
        weights: items.iter().map(|it| it.2).collect(),
        start: items.iter().map(|it| it.0).collect(),
        end: items.iter().map(|it| it.1).collect(),
        capacity: 0.0,
    };
    let peak = (0..n).map(|j| inst.active_set(j).iter().map(|&i| inst.weights[i]).sum::<f64>()).fold(0.0, f64::max);
    let heaviest = inst.weights.iter().copied().fold(0.0, f64::max);
    inst.capacity = (0.5 * peak).round().max(heaviest);
    inst
}

/// Binary `x`, `min -p'x`, no linking rows. Block `k` holds the `B`
/// consecutive capacity rows `N_k` and the union of their active sets;
/// blocks overlap when an item spans a window boundary.
pub fn build_tkp_model(inst: &TkpInstance, b: usize) -> Result<BlockStructuredMip, InstanceError> {
    if b == 0 {
        return Err(InstanceError::Invalid("block size B must be at least 1".into()));
    }
    inst.validate()?;
    let n = inst.n();
    let mut m = BlockStructuredMip::new(n);
    m.upper = vec![1.0; n];
    m.integer = vec![true; n];
    m.c = inst.profits.iter().map(|p| -p).collect();
    for window in (0..n).collect::<Vec<_>>().chunks(b) {
        let mut support = Vec::new();
        let mut rows = Vec::new();
        for &j in window {
            let s = inst.active_set(j);
            rows.push(Row::le(s.iter().map(|&i| (i, inst.weights[i])).collect(), inst.capacity));
            support.extend(s);
        }
        support.sort_unstable();
        support.dedup();
        m.blocks.push(Block::new(support, rows));
    }
    Ok(m)
}

/// Shape of a random loosely coupled model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomModelConfig {
    pub blocks: usize,
    pub vars_per_block: usize,
    pub rows_per_block: usize,
    pub linking_rows: usize,
    /// Integer variables range over `0..=upper`.
    pub upper: u32,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        RandomModelConfig { blocks: 2, vars_per_block: 3, rows_per_block: 2, linking_rows: 2, upper: 3 }
    }
}

/// Random feasible model with disjoint integer blocks. A hidden integer
/// point `x0` is drawn first; block rows are `G x <= G x0 + slack` and linking
/// rows `a'x >= a'x0 - slack` with coefficients in `[-3, 3]`, so `x0` is
/// feasible and the bounded box keeps every problem bounded.
pub fn generate_random_model(cfg: &RandomModelConfig, seed: u64) -> BlockStructuredMip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.blocks * cfg.vars_per_block;
    let mut m = BlockStructuredMip::new(n);
    m.upper = vec![cfg.upper as f64; n];
    m.integer = vec![true; n];
    m.c = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=cfg.upper) as f64).collect();
    let random_row = |rng: &mut ChaCha8Rng, vars: &[usize]| -> Vec<(usize, f64)> {
        let mut coeffs: Vec<(usize, f64)> = vars.iter().map(|&i| (i, rng.gen_range(-3..=3) as f64)).filter(|c| c.1 != 0.0).collect();
        if coeffs.is_empty() {
            coeffs.push((vars[rng.gen_range(0..vars.len())], 1.0));
        }
        coeffs
    };
    for j in 0..cfg.blocks {
        let support: Vec<usize> = (j * cfg.vars_per_block..(j + 1) * cfg.vars_per_block).collect();
        let rows = (0..cfg.rows_per_block)
            .map(|_| {
                let coeffs = random_row(&mut rng, &support);
                let act: f64 = coeffs.iter().map(|&(i, a)| a * x0[i]).sum();
                Row::le(coeffs, act + rng.gen_range(0..=2) as f64)
            })
            .collect();
        m.blocks.push(Block::new(support, rows));
    }
    let all: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.linking_rows {
        let coeffs = random_row(&mut rng, &all);
        let act: f64 = coeffs.iter().map(|&(i, a)| a * x0[i]).sum();
        m.linking.push(Row::ge(coeffs, act - rng.gen_range(0..=2) as f64));
    }
    m
}

/// Any supported instance kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum Instance {
    Mkap(MkapInstance),
    Tkp(TkpInstance),
    Generic(BlockStructuredMip),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Mkap(_) => "mkap",
            Instance::Tkp(_) => "tkp",
            Instance::Generic(_) => "generic",
        }
    }

    /// Block-structured model; `tkp_block` is the TKP window size `B`.
    pub fn to_model(&self, tkp_block: usize) -> Result<BlockStructuredMip, InstanceError> {
        match self {
            Instance::Mkap(i) => {
                i.validate()?;
                Ok(build_mkap_model(i))
            }
            Instance::Tkp(i) => build_tkp_model(i, tkp_block),
            Instance::Generic(m) => Ok(m.clone()),
        }
    }
}
