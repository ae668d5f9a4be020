//! End-to-end drivers: augmented formulations, the hybrid restart rule,
//! instance labelling, corpus generation and the benchmark report.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{degeneracy_level, gap_report, DegeneracyReport, ZERO_TOL};
use crate::cuts::{Cut, CutError, CutFactory};
use crate::instances::{
    generate_mkap, generate_random_model, generate_tkp, read_instance, write_instance, Correlation, Instance, InstanceError,
    ManifestEntry, RandomModelConfig,
};
use crate::lagrangian::{evaluate_dual, solve_dual_level, DualOptions, DualPoint, LagrangianError};
use crate::lp::{solve_lp, LpError, LpStatus};
use crate::mip::{solve_mip, MipOptions, MipResult, MipStatus};
use crate::model::BlockStructuredMip;

/// Ratio `(z_D - z_LB) / |z_UB|` above which the hybrid switches formulations.
pub const SWITCH_THRESHOLD: f64 = 0.0005;
/// Default node budget per solve.
pub const DEFAULT_NODE_LIMIT: usize = 50_000;
/// Default time budget per solve.
pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("variant {0} needs dual multipliers")]
    MissingDual(FormulationVariant),
    #[error("tilting depth must be at least 1")]
    InvalidDepth,
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error(transparent)]
    Dual(#[from] LagrangianError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
}

/// Which cuts are appended to the original formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FormulationVariant {
    /// No cuts.
    Mip,
    /// `c'x >= z_D`.
    Obj,
    /// Last-iteration DWB cuts.
    Dwb,
    /// DWB cuts after coefficient strengthening.
    Str,
    /// Strengthened cuts tilted to the given depth.
    DkT(usize),
}

impl fmt::Display for FormulationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulationVariant::Mip => write!(f, "MIP"),
            FormulationVariant::Obj => write!(f, "OBJ"),
            FormulationVariant::Dwb => write!(f, "DWB"),
            FormulationVariant::Str => write!(f, "STR"),
            FormulationVariant::DkT(d) => write!(f, "D{d}T"),
        }
    }
}

impl FromStr for FormulationVariant {
    type Err = String;

    /// Accepts `MIP`, `OBJ`, `DWB`, `STR` and `D<d>T` (case-insensitive).
    fn from_str(s: &str) -> Result<Self, String> {
        let u = s.to_ascii_uppercase();
        match u.as_str() {
            "MIP" => Ok(FormulationVariant::Mip),
            "OBJ" => Ok(FormulationVariant::Obj),
            "DWB" => Ok(FormulationVariant::Dwb),
            "STR" => Ok(FormulationVariant::Str),
            _ => u
                .strip_prefix('D')
                .and_then(|r| r.strip_suffix('T'))
                .and_then(|d| d.parse().ok())
                .map(FormulationVariant::DkT)
                .ok_or_else(|| format!("unknown formulation variant {s:?}")),
        }
    }
}

impl From<FormulationVariant> for String {
    fn from(v: FormulationVariant) -> String {
        v.to_string()
    }
}

impl TryFrom<String> for FormulationVariant {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

/// The original model plus appended cuts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formulation {
    pub variant: FormulationVariant,
    pub model: BlockStructuredMip,
    pub cuts: Vec<Cut>,
    /// Trivial cuts dropped during generation.
    pub zero_cuts: usize,
    /// Blocks whose hull was not full-dimensional (tilting skipped).
    pub flat_blocks: Vec<usize>,
}

impl Formulation {
    /// The model with every cut appended as a linking row; block rows are kept.
    pub fn augmented(&self) -> BlockStructuredMip {
        let mut m = self.model.clone();
        m.linking.extend(self.cuts.iter().map(Cut::to_row));
        m
    }

    /// Optimal value of the LP relaxation of [`Formulation::augmented`].
    pub fn lp_bound(&self) -> Result<f64, PipelineError> {
        let sol = solve_lp(&self.augmented().lp_relaxation())?;
        Ok(match sol.status {
            LpStatus::Optimal => sol.objective,
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
        })
    }

    /// Degeneracy of the basic dual solution of the augmented LP.
    pub fn degeneracy(&self) -> Result<Option<DegeneracyReport>, PipelineError> {
        let lp = self.augmented().lp_relaxation();
        let sol = solve_lp(&lp)?;
        Ok((sol.status == LpStatus::Optimal).then(|| degeneracy_level(&sol.dual_vector(), lp.num_cols(), ZERO_TOL)))
    }
}

/// Builds a formulation variant. Every variant except `MIP` needs Wolfe-feasible
/// multipliers; `OBJ` uses their Lagrangian value as `z_D`.
pub fn build_formulation(model: &BlockStructuredMip, variant: FormulationVariant, dual: Option<&DualPoint>) -> Result<Formulation, PipelineError> {
    let mut out = Formulation { variant, model: model.clone(), cuts: Vec::new(), zero_cuts: 0, flat_blocks: Vec::new() };
    if variant == FormulationVariant::Mip {
        return Ok(out);
    }
    if variant == FormulationVariant::DkT(0) {
        return Err(PipelineError::InvalidDepth);
    }
    let dual = dual.ok_or(PipelineError::MissingDual(variant))?;
    let mut factory = CutFactory::new(model);
    match variant {
        FormulationVariant::Mip => unreachable!(),
        FormulationVariant::Obj => {
            let z = evaluate_dual(model, dual)?;
            out.cuts.push(factory.objective_cut(z));
        }
        FormulationVariant::Dwb => out.cuts = factory.last_iteration_cuts(dual)?,
        FormulationVariant::Str | FormulationVariant::DkT(_) => {
            for cut in factory.last_iteration_cuts(dual)? {
                let s = factory.strengthen(&cut, None)?;
                match variant {
                    FormulationVariant::DkT(d) => out.cuts.extend(factory.tilt(&s, d)?.cuts),
                    _ => out.cuts.push(s),
                }
            }
        }
    }
    out.zero_cuts = factory.zero_cuts;
    out.flat_blocks = factory.flat_blocks.clone();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HybridDecision {
    Stay,
    Switch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridState {
    pub z_d: f64,
    pub z_lb: f64,
    pub z_ub: f64,
    pub decision: HybridDecision,
}

/// Switch iff `(z_D - z_LB) / |z_UB| > 0.0005` (ties stay).
pub fn hybrid_decide(z_d: f64, z_lb: f64, z_ub: f64) -> Result<HybridState, PipelineError> {
    if !z_ub.is_finite() || z_ub == 0.0 {
        return Err(PipelineError::InvalidBounds(format!("z_UB = {z_ub}")));
    }
    if z_lb > z_ub + 1e-6 {
        return Err(PipelineError::InvalidBounds(format!("z_LB = {z_lb} exceeds z_UB = {z_ub}")));
    }
    let ratio = (z_d - z_lb) / z_ub.abs();
    let decision = if ratio > SWITCH_THRESHOLD { HybridDecision::Switch } else { HybridDecision::Stay };
    Ok(HybridState { z_d, z_lb, z_ub, decision })
}

#[derive(Debug, Clone)]
pub struct HybridOptions {
    pub node_limit: usize,
    pub time_limit: Duration,
    /// Phase-1 MIP time cap; the dual solve time `t_D` when `None`.
    pub phase1_limit: Option<Duration>,
    /// Overrides the decision rule.
    pub force: Option<HybridDecision>,
    pub dual: DualOptions,
}

impl Default for HybridOptions {
    fn default() -> Self {
        HybridOptions {
            node_limit: DEFAULT_NODE_LIMIT,
            time_limit: DEFAULT_TIME_LIMIT,
            phase1_limit: None,
            force: None,
            dual: DualOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridReport {
    pub z_d: f64,
    pub t_d: f64,
    pub phase1: MipResult,
    pub solved_in_phase1: bool,
    /// `None` when phase 1 solved the model or found no incumbent.
    pub state: Option<HybridState>,
    pub decision: Option<HybridDecision>,
    pub cuts: usize,
    pub result: MipResult,
    pub seconds: f64,
}

/// Two-phase hybrid: the Lagrangian dual runs first (time `t_D`), then the
/// original MIP gets `t_D` seconds; if unsolved, the rule decides whether the
/// rest of the budget goes to the strengthened formulation or the original
/// one, warm-started with the phase-1 incumbent.
pub fn run_hybrid(model: &BlockStructuredMip, opts: &HybridOptions) -> Result<HybridReport, PipelineError> {
    let start = Instant::now();
    let dual = solve_dual_level(model, &opts.dual)?;
    let t_d = start.elapsed();
    let phase1_opts = MipOptions { node_limit: opts.node_limit, time_limit: Some(opts.phase1_limit.unwrap_or(t_d)), ..MipOptions::default() };
    let phase1 = solve_mip(model, &phase1_opts)?;
    let mut report = HybridReport {
        z_d: dual.lb,
        t_d: t_d.as_secs_f64(),
        phase1: phase1.clone(),
        solved_in_phase1: phase1.solved(),
        state: None,
        decision: None,
        cuts: 0,
        result: phase1.clone(),
        seconds: 0.0,
    };
    if phase1.solved() {
        report.seconds = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    let state = if phase1.objective.is_finite() { Some(hybrid_decide(dual.lb, phase1.bound, phase1.objective)?) } else { None };
    let decision = opts.force.or(state.map(|s| s.decision)).unwrap_or(HybridDecision::Stay);
    report.state = state;
    report.decision = Some(decision);
    let target = match decision {
        HybridDecision::Switch => build_formulation(model, FormulationVariant::Str, Some(&dual.best_dual))?,
        HybridDecision::Stay => build_formulation(model, FormulationVariant::Mip, None)?,
    };
    report.cuts = target.cuts.len();
    let remaining = opts.time_limit.saturating_sub(start.elapsed());
    let phase2_opts = MipOptions {
        node_limit: opts.node_limit,
        time_limit: Some(remaining),
        incumbent: phase1.x.clone(),
        ..MipOptions::default()
    };
    let phase2 = solve_mip(&target.augmented(), &phase2_opts)?;
    report.result = if phase2.objective <= phase1.objective { phase2 } else { phase1 };
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Outcome of one budgeted solve, as used by the labelling rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub solved: bool,
    pub gap: f64,
    pub seconds: f64,
}

impl From<&MipResult> for RunStats {
    fn from(r: &MipResult) -> Self {
        RunStats { solved: r.solved(), gap: r.gap(), seconds: r.seconds }
    }
}

/// An instance is promising for the strengthened formulation if it solves only
/// with STR, or neither solves and STR's gap is smaller by at least 0.0001,
/// or both solve and STR needs at most 90% of the MIP time.
pub fn label_instance(mip: &RunStats, str_: &RunStats) -> bool {
    (str_.solved && !mip.solved)
        || (!str_.solved && !mip.solved && str_.gap <= mip.gap - 0.0001)
        || (str_.solved && mip.solved && str_.seconds <= 0.9 * mip.seconds)
}

/// Instance families written by [`generate_corpus`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CorpusItem {
    Mkap { k: usize, m: usize, n: usize, correlation: Correlation, count: usize },
    Tkp { n: usize, block_size: usize, count: usize },
    Random { config: RandomModelConfig, count: usize },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub items: Vec<CorpusItem>,
}

/// Writes every instance of the corpus into `dir`; instance `t` gets seed `seed + t`.
pub fn generate_corpus(cfg: &CorpusConfig, dir: &Path, seed: u64) -> Result<Vec<ManifestEntry>, PipelineError> {
    std::fs::create_dir_all(dir).map_err(InstanceError::from)?;
    let mut entries = Vec::new();
    let mut next = seed;
    for item in &cfg.items {
        let count = match item {
            CorpusItem::Mkap { count, .. } | CorpusItem::Tkp { count, .. } | CorpusItem::Random { count, .. } => *count,
        };
        for _ in 0..count {
            let s = next;
            next += 1;
            let (name, inst, block_size) = match item {
                CorpusItem::Mkap { k, m, n, correlation, .. } => {
                    (format!("mkap_{k}_{m}_{n}_{s}"), Instance::Mkap(generate_mkap(*k, *m, *n, *correlation, s)?), 0)
                }
                CorpusItem::Tkp { n, block_size, .. } => (format!("tkp_{n}_{block_size}_{s}"), Instance::Tkp(generate_tkp(*n, s)), *block_size),
                CorpusItem::Random { config, .. } => (format!("random_{}_{s}", config.blocks), Instance::Generic(generate_random_model(config, s)), 0),
            };
            let file = format!("{name}.json");
            write_instance(&dir.join(&file), &inst)?;
            entries.push(ManifestEntry { name, kind: inst.kind().into(), path: file, seed: s, block_size });
        }
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub variants: Vec<FormulationVariant>,
    pub node_limit: usize,
    pub time_limit_secs: f64,
    pub dual_max_iter: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            variants: vec![FormulationVariant::Mip, FormulationVariant::Obj, FormulationVariant::Dwb, FormulationVariant::Str],
            node_limit: DEFAULT_NODE_LIMIT,
            time_limit_secs: DEFAULT_TIME_LIMIT.as_secs_f64(),
            dual_max_iter: DualOptions::default().max_iter,
        }
    }
}

/// Per-variant measurements in a benchmark row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantStats {
    pub variant: FormulationVariant,
    pub cuts: usize,
    pub lp_bound: f64,
    pub degeneracy: Option<f64>,
    pub status: MipStatus,
    pub objective: f64,
    pub gap: f64,
    pub nodes: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub kind: String,
    pub n: usize,
    pub q: usize,
    pub z_l: f64,
    pub z_d: f64,
    pub r_l_pct: Option<f64>,
    pub t_d: f64,
    pub variants: Vec<VariantStats>,
    pub error: Option<String>,
}

/// Benchmarks one model.
pub fn bench_model(name: &str, kind: &str, model: &BlockStructuredMip, cfg: &BenchConfig) -> BenchRow {
    let mut row = BenchRow {
        name: name.into(),
        kind: kind.into(),
        n: model.n(),
        q: model.q(),
        z_l: f64::NAN,
        z_d: f64::NAN,
        r_l_pct: None,
        t_d: 0.0,
        variants: Vec::new(),
        error: None,
    };
    if let Err(e) = bench_into(&mut row, model, cfg) {
        log::warn!("{name}: {e}");
        row.error = Some(e.to_string());
    }
    row
}

fn bench_into(row: &mut BenchRow, model: &BlockStructuredMip, cfg: &BenchConfig) -> Result<(), PipelineError> {
    let base = build_formulation(model, FormulationVariant::Mip, None)?;
    row.z_l = base.lp_bound()?;
    let start = Instant::now();
    let dual = solve_dual_level(model, &DualOptions { max_iter: cfg.dual_max_iter, ..DualOptions::default() })?;
    row.t_d = start.elapsed().as_secs_f64();
    row.z_d = dual.lb;
    row.r_l_pct = gap_report(row.z_d, row.z_l, None).ok().map(|g| 100.0 * g.r_l);
    for &variant in &cfg.variants {
        let f = build_formulation(model, variant, Some(&dual.best_dual))?;
        let opts = MipOptions {
            node_limit: cfg.node_limit,
            time_limit: Some(Duration::from_secs_f64(cfg.time_limit_secs)),
            trace_every: 0,
            ..MipOptions::default()
        };
        let r = solve_mip(&f.augmented(), &opts)?;
        row.variants.push(VariantStats {
            variant,
            cuts: f.cuts.len(),
            lp_bound: f.lp_bound()?,
            degeneracy: f.degeneracy()?.map(|d| d.relative),
            status: r.status,
            objective: r.objective,
            gap: r.gap(),
            nodes: r.nodes,
            seconds: r.seconds,
        });
    }
    Ok(())
}

/// Columns whose values depend on wall-clock time.
pub fn timing_columns(cfg: &BenchConfig) -> Vec<String> {
    let mut cols = vec!["t_d".to_string()];
    cols.extend(cfg.variants.iter().map(|v| format!("{v}_seconds")));
    cols
}

pub fn bench_header(cfg: &BenchConfig) -> Vec<String> {
    let mut h: Vec<String> = ["instance", "kind", "n", "q", "z_l", "z_d", "r_l_pct", "t_d"].iter().map(|s| s.to_string()).collect();
    for v in &cfg.variants {
        for col in ["cuts", "lp_bound", "degeneracy", "status", "objective", "gap", "nodes", "seconds"] {
            h.push(format!("{v}_{col}"));
        }
    }
    h.push("error".into());
    h
}

fn bench_record(row: &BenchRow, cfg: &BenchConfig) -> Vec<String> {
    let num = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
    let mut rec = vec![row.name.clone(), row.kind.clone(), row.n.to_string(), row.q.to_string(), num(row.z_l), num(row.z_d)];
    rec.push(row.r_l_pct.map(num).unwrap_or_default());
    rec.push(format!("{:.6}", row.t_d));
    for v in &cfg.variants {
        match row.variants.iter().find(|s| s.variant == *v) {
            Some(s) => rec.extend([
                s.cuts.to_string(),
                num(s.lp_bound),
                s.degeneracy.map(num).unwrap_or_default(),
                format!("{:?}", s.status),
                num(s.objective),
                num(s.gap),
                s.nodes.to_string(),
                format!("{:.6}", s.seconds),
            ]),
            None => rec.extend(std::iter::repeat(String::new()).take(8)),
        }
    }
    rec.push(row.error.clone().unwrap_or_default());
    rec
}

/// CSV with one row per instance; an empty corpus yields the header only.
pub fn bench_csv(rows: &[BenchRow], cfg: &BenchConfig) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(bench_header(cfg)).expect("in-memory CSV");
    for r in rows {
        w.write_record(bench_record(r, cfg)).expect("in-memory CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
}

/// Benchmarks every manifest entry (paths relative to `root`); failures are
/// logged and recorded in the row's `error` column.
pub fn run_benchmark(entries: &[ManifestEntry], root: &Path, cfg: &BenchConfig) -> Vec<BenchRow> {
    entries
        .iter()
        .map(|e| {
            let model = read_instance(&root.join(&e.path)).and_then(|inst| inst.to_model(e.block_size.max(1)));
            match model {
                Ok(m) => bench_model(&e.name, &e.kind, &m, cfg),
                Err(err) => {
                    log::warn!("{}: {err}", e.name);
                    BenchRow {
                        name: e.name.clone(),
                        kind: e.kind.clone(),
                        n: 0,
                        q: 0,
                        z_l: f64::NAN,
                        z_d: f64::NAN,
                        r_l_pct: None,
                        t_d: 0.0,
                        variants: Vec::new(),
                        error: Some(err.to_string()),
                    }
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example1, example1_dual_2};

    #[test]
    fn variant_names() {
        for v in [FormulationVariant::Mip, FormulationVariant::Obj, FormulationVariant::Dwb, FormulationVariant::Str, FormulationVariant::DkT(3)] {
            assert_eq!(v.to_string().parse::<FormulationVariant>().unwrap(), v);
        }
        assert_eq!("d6t".parse::<FormulationVariant>().unwrap(), FormulationVariant::DkT(6));
        assert!("D-T".parse::<FormulationVariant>().is_err());
    }

    #[test]
    fn formulations_of_example1() {
        let m = example1();
        let mip = build_formulation(&m, FormulationVariant::Mip, None).unwrap();
        assert_eq!(mip.augmented(), m);
        assert!(matches!(build_formulation(&m, FormulationVariant::Dwb, None), Err(PipelineError::MissingDual(_))));
        let dual = solve_dual_level(&m, &DualOptions::default()).unwrap().best_dual;
        let obj = build_formulation(&m, FormulationVariant::Obj, Some(&dual)).unwrap();
        assert_eq!(obj.cuts.len(), 1);
        assert!((obj.cuts[0].rhs - 8.0).abs() < 1e-5);
        assert_eq!(obj.augmented().linking.len(), m.linking.len() + 1);
        for v in [FormulationVariant::Dwb, FormulationVariant::Str, FormulationVariant::DkT(3)] {
            let f = build_formulation(&m, v, Some(&dual)).unwrap();
            assert!(f.cuts.len() <= 2 * 8);
            assert!((f.lp_bound().unwrap() - 8.0).abs() < 1e-5, "{v}");
        }
        assert!(matches!(build_formulation(&m, FormulationVariant::DkT(0), Some(&dual)), Err(PipelineError::InvalidDepth)));
        // Known optimal multipliers also give the bound exactly.
        let f = build_formulation(&m, FormulationVariant::Dwb, Some(&example1_dual_2())).unwrap();
        assert!(f.lp_bound().unwrap() >= 149.0 / 19.0 - 1e-7);
    }

    #[test]
    fn decision_boundary() {
        assert_eq!(hybrid_decide(100.06, 100.0, 100.0).unwrap().decision, HybridDecision::Switch);
        assert_eq!(hybrid_decide(100.04, 100.0, 100.0).unwrap().decision, HybridDecision::Stay);
        assert_eq!(hybrid_decide(1.0, 2.0, 3.0).unwrap().decision, HybridDecision::Stay);
        assert_eq!(hybrid_decide(0.5, 0.0, 1000.0).unwrap().decision, HybridDecision::Stay);
        assert!(matches!(hybrid_decide(1.0, 0.0, 0.0), Err(PipelineError::InvalidBounds(_))));
        assert!(matches!(hybrid_decide(1.0, 5.0, 3.0), Err(PipelineError::InvalidBounds(_))));
        // Negative incumbents (maximisation written as minimisation) use |z_UB|.
        assert_eq!(hybrid_decide(-99.9, -100.0, -99.0).unwrap().decision, HybridDecision::Switch);
    }

    #[test]
    fn labels() {
        let s = |solved, gap, seconds| RunStats { solved, gap, seconds };
        assert!(label_instance(&s(false, 0.1, 60.0), &s(true, 0.0, 50.0)));
        assert!(!label_instance(&s(true, 0.0, 10.0), &s(true, 0.0, 9.5)));
        assert!(label_instance(&s(true, 0.0, 10.0), &s(true, 0.0, 9.0)));
        assert!(label_instance(&s(false, 0.0100, 60.0), &s(false, 0.0099, 60.0)));
        assert!(!label_instance(&s(false, 0.0100, 60.0), &s(false, 0.00995, 60.0)));
        assert!(!label_instance(&s(true, 0.0, 3.0), &s(true, 0.0, 3.0)));
    }

    #[test]
    fn hybrid_on_example1() {
        let m = example1();
        let solved = run_hybrid(&m, &HybridOptions::default()).unwrap();
        assert!(solved.solved_in_phase1);
        assert_eq!(solved.cuts, 0);
        assert_eq!(solved.result.objective, 8.0);
        let opts = HybridOptions { phase1_limit: Some(Duration::ZERO), force: Some(HybridDecision::Switch), ..HybridOptions::default() };
        let forced = run_hybrid(&m, &opts).unwrap();
        assert!(!forced.solved_in_phase1);
        assert_eq!(forced.decision, Some(HybridDecision::Switch));
        assert!(forced.cuts > 0);
        assert_eq!(forced.result.status, MipStatus::Optimal);
        assert!((forced.result.objective - 8.0).abs() < 1e-9);
    }

    #[test]
    fn bench_rows() {
        let cfg = BenchConfig::default();
        assert_eq!(bench_csv(&[], &cfg).lines().count(), 1);
        let row = bench_model("example1", "generic", &example1(), &cfg);
        assert_eq!(row.error, None);
        assert!((row.z_l - 7.0).abs() < 1e-9);
        assert!((row.z_d - 8.0).abs() < 1e-5);
        assert!((row.r_l_pct.unwrap() - 12.5).abs() < 1e-3);
        let csv = bench_csv(&[row], &cfg);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().next().unwrap().starts_with("instance,kind,n,q,z_l,z_d,r_l_pct,t_d,MIP_cuts"));
    }
}
