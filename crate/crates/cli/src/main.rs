use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use dwb_core::analysis::gap_report;
use dwb_core::cuts::CutFactory;
use dwb_core::dw::{run_dw, DwOptions};
use dwb_core::fixtures::example1;
use dwb_core::instances::{
    export_lp_file, read_instance, read_manifest, write_manifest, Correlation, RandomModelConfig,
};
use dwb_core::lagrangian::{solve_dual_kelley, solve_dual_level, DualOptions};
use dwb_core::mip::{solve_mip, MipOptions};
use dwb_core::pipeline::{
    bench_csv, build_formulation, generate_corpus, run_benchmark, run_hybrid, BenchConfig, CorpusConfig, CorpusItem,
    FormulationVariant, HybridDecision, HybridOptions, DEFAULT_NODE_LIMIT,
};
use dwb_core::BlockStructuredMip;

#[derive(Parser)]
#[command(name = "dwb", version, about = "Dantzig-Wolfe bounds and DWB cuts for block-structured MIPs")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON configuration file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance corpus and its manifest.
    Generate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Natural LP bound, DW bound and their relative gap.
    Bound {
        /// `example1` or a path to an instance file.
        instance: String,
        #[arg(long, value_enum, default_value_t = Method::Level)]
        method: Method,
    },
    /// Emit last-iteration DWB cuts as JSON, optionally strengthened and tilted.
    Cuts {
        /// `example1` or a path to an instance file.
        instance: String,
        #[arg(long)]
        strengthen: bool,
        /// Tilting depth (0 disables tilting).
        #[arg(long, default_value_t = 0)]
        tilt: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a formulation variant in LP format.
    Formulate {
        /// `example1` or a path to an instance file.
        instance: String,
        /// MIP, OBJ, DWB, STR or D<d>T.
        #[arg(long, default_value = "STR")]
        variant: FormulationVariant,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a formulation variant with the internal branch and bound.
    Solve {
        /// `example1` or a path to an instance file.
        instance: String,
        #[arg(long, default_value = "MIP")]
        variant: FormulationVariant,
        /// Branch-and-bound node budget.
        #[arg(long)]
        node_limit: Option<usize>,
        /// Time budget in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
    },
    /// Two-phase hybrid run.
    Hybrid {
        /// `example1` or a path to an instance file.
        instance: String,
        /// Time budget in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Branch-and-bound node budget.
        #[arg(long)]
        node_limit: Option<usize>,
        /// Override the switching rule.
        #[arg(long, value_enum)]
        force: Option<Force>,
    },
    /// Benchmark every instance of a manifest and write a CSV report.
    Bench {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Level,
    Kelley,
    Dw,
}

#[derive(Clone, Copy, ValueEnum)]
enum Force {
    Stay,
    Switch,
}

/// Contents of `--config`.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct Config {
    corpus: Option<CorpusConfig>,
    bench: Option<BenchConfig>,
    /// TKP window size used when an instance file does not fix it.
    block_size: Option<usize>,
    node_limit: Option<usize>,
    time_limit_secs: Option<f64>,
    dual_max_iter: Option<usize>,
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn default_corpus() -> CorpusConfig {
    CorpusConfig {
        items: vec![
            CorpusItem::Mkap { k: 2, m: 2, n: 6, correlation: Correlation::Weak, count: 3 },
            CorpusItem::Tkp { n: 8, block_size: 2, count: 3 },
            CorpusItem::Random { config: RandomModelConfig::default(), count: 3 },
        ],
    }
}

/// `example1` or a path to an instance file.
fn load_model(name: &str, cfg: &Config) -> Result<BlockStructuredMip> {
    if name == "example1" {
        return Ok(example1());
    }
    let inst = read_instance(Path::new(name)).with_context(|| format!("reading instance {name}"))?;
    Ok(inst.to_model(cfg.block_size.unwrap_or(2))?)
}

fn dual_options(cfg: &Config) -> DualOptions {
    let mut d = DualOptions::default();
    if let Some(it) = cfg.dual_max_iter {
        d.max_iter = it;
    }
    d
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            // A closed pipe (e.g. `dwb ... | head`) is not an error.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
            r => r.context("writing to stdout"),
        },
    }
}

fn main() -> Result<()> {
    env_logger::init();
    let cli = Cli::parse();
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Generate { out } => {
            let corpus = cfg.corpus.clone().unwrap_or_else(default_corpus);
            let entries = generate_corpus(&corpus, &out, cli.seed)?;
            write_manifest(&out.join("manifest.csv"), &entries)?;
            emit(None, &format!("wrote {} instances to {}", entries.len(), out.display()))?;
        }
        Command::Bound { instance, method } => {
            let model = load_model(&instance, &cfg)?;
            let z_l = build_formulation(&model, FormulationVariant::Mip, None)?.lp_bound()?;
            let (z_d, iterations) = match method {
                Method::Level => {
                    let r = solve_dual_level(&model, &dual_options(&cfg))?;
                    (r.lb, r.iterations)
                }
                Method::Kelley => {
                    let r = solve_dual_kelley(&model, &dual_options(&cfg))?;
                    (r.lb, r.iterations)
                }
                Method::Dw => {
                    let r = run_dw(&model, &DwOptions::default())?;
                    (r.z_d, r.iterations)
                }
            };
            let r_l = gap_report(z_d, z_l, None).ok().map(|g| g.r_l);
            let report = serde_json::json!({ "z_l": z_l, "z_d": z_d, "r_l": r_l, "iterations": iterations });
            emit(None, &serde_json::to_string_pretty(&report)?)?;
        }
        Command::Cuts { instance, strengthen, tilt, out } => {
            let model = load_model(&instance, &cfg)?;
            let dual = solve_dual_level(&model, &dual_options(&cfg))?;
            let mut factory = CutFactory::new(&model);
            let mut cuts = Vec::new();
            for cut in factory.last_iteration_cuts(&dual.best_dual)? {
                let cut = if strengthen { factory.strengthen(&cut, None)? } else { cut };
                if tilt > 0 {
                    cuts.extend(factory.tilt(&cut, tilt)?.cuts);
                } else {
                    cuts.push(cut);
                }
            }
            let report = serde_json::json!({
                "z_d": dual.lb,
                "zero_cuts": factory.zero_cuts,
                "flat_blocks": factory.flat_blocks,
                "cuts": cuts,
            });
            emit(out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
        }
        Command::Formulate { instance, variant, out } => {
            let model = load_model(&instance, &cfg)?;
            let dual = match variant {
                FormulationVariant::Mip => None,
                _ => Some(solve_dual_level(&model, &dual_options(&cfg))?.best_dual),
            };
            let f = build_formulation(&model, variant, dual.as_ref())?;
            let rows: Vec<_> = f.cuts.iter().map(|c| c.to_row()).collect();
            export_lp_file(&model, &rows, &out).with_context(|| format!("writing {}", out.display()))?;
            emit(None, &format!("wrote {variant} formulation with {} cuts to {}", rows.len(), out.display()))?;
        }
        Command::Solve { instance, variant, node_limit, time_limit } => {
            let model = load_model(&instance, &cfg)?;
            let dual = match variant {
                FormulationVariant::Mip => None,
                _ => Some(solve_dual_level(&model, &dual_options(&cfg))?.best_dual),
            };
            let f = build_formulation(&model, variant, dual.as_ref())?;
            let opts = MipOptions {
                node_limit: node_limit.or(cfg.node_limit).unwrap_or(DEFAULT_NODE_LIMIT),
                time_limit: time_limit.or(cfg.time_limit_secs).map(Duration::from_secs_f64),
                trace_every: 0,
                ..MipOptions::default()
            };
            let r = solve_mip(&f.augmented(), &opts)?;
            let report = serde_json::json!({
                "variant": variant.to_string(),
                "cuts": f.cuts.len(),
                "status": r.status,
                "objective": r.objective,
                "bound": r.bound,
                "nodes": r.nodes,
                "seconds": r.seconds,
                "x": r.x,
            });
            emit(None, &serde_json::to_string_pretty(&report)?)?;
        }
        Command::Hybrid { instance, time_limit, node_limit, force } => {
            let model = load_model(&instance, &cfg)?;
            let mut opts = HybridOptions { dual: dual_options(&cfg), ..HybridOptions::default() };
            if let Some(t) = time_limit.or(cfg.time_limit_secs) {
                opts.time_limit = Duration::from_secs_f64(t);
            }
            if let Some(n) = node_limit.or(cfg.node_limit) {
                opts.node_limit = n;
            }
            opts.force = force.map(|f| match f {
                Force::Stay => HybridDecision::Stay,
                Force::Switch => HybridDecision::Switch,
            });
            let r = run_hybrid(&model, &opts)?;
            emit(None, &serde_json::to_string_pretty(&r)?)?;
        }
        Command::Bench { manifest, out } => {
            let bench = cfg.bench.clone().unwrap_or_default();
            let entries = read_manifest(&manifest)?;
            let Some(root) = manifest.parent() else { bail!("manifest path has no parent directory") };
            let rows = run_benchmark(&entries, root, &bench);
            emit(out.as_deref(), bench_csv(&rows, &bench).trim_end())?;
        }
    }
    Ok(())
}
