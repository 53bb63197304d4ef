//! Command-line surface: `hec run`, `hec synth`, `hec bench`, `hec report`.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 computation error.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{Method, Pool, RunConfig};

use crate::baselines::{
    bayes_construct, random_construct, shapley_construct, stacking_construct, RandomParams, ShapleyParams,
};
use crate::aggregation::{best_single_construct, majority_construct, wmv_construct};
use crate::data::{emit_bundle, generate_synthetic, load_bundle, DatasetBundle, SyntheticSpec};
use crate::error::{Error, Result};
use crate::hec::{hec_search, write_trace_csv, HecConfig};
use crate::metrics::{emit_report, ComparisonReport, MethodResult, ReportFormat};
use crate::rng::{derive_seed, name_hash};

#[derive(Debug, Parser)]
#[command(name = "hec", version, about = "Classifier ensemble construction from prediction matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build ensembles with the selected methods and write a comparison report.
    Run(RunArgs),
    /// Write a synthetic bundle (validation.csv, test.csv, meta.csv).
    Synth(SynthArgs),
    /// Time the HEC search.
    Bench(BenchArgs),
    /// Merge report.json files from several runs into one report.
    Report(ReportArgs),
}

/// Flags shared by `run` and `bench`; each overrides the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file with any of the settings below (keys use `_` for `-`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Number of classes C.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Dataset id for the report; defaults to the validation file's directory name.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Comma-separated: hec,wmv,stacking,shapley,bayes,random,majority,best-single.
    #[arg(long)]
    pub method: Option<String>,
    /// all | transformers | ids:a,b,...
    #[arg(long)]
    pub pool: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub greedy: bool,
    #[arg(long)]
    pub s_max: Option<usize>,
    #[arg(long)]
    pub t_init: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub cooling_rate: Option<f64>,
    /// Normalize accuracy weights within each category.
    #[arg(long)]
    pub wmv_literal_eq3: bool,
    /// weighted | majority
    #[arg(long)]
    pub search_rule: Option<String>,
    /// exact | mc | multilinear | emc
    #[arg(long)]
    pub shapley_method: Option<String>,
    #[arg(long)]
    pub shapley_samples: Option<usize>,
    /// majority | weighted
    #[arg(long)]
    pub shapley_game: Option<String>,
    #[arg(long)]
    pub stack_lr: Option<f64>,
    #[arg(long)]
    pub stack_epochs: Option<usize>,
    #[arg(long)]
    pub stack_l2: Option<f64>,
    #[arg(long)]
    pub bayes_alpha: Option<f64>,
    #[arg(long)]
    pub random_trials: Option<usize>,
    #[arg(long)]
    pub random_p: Option<f64>,
    /// Write the HEC candidate trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Synthetic spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Generate the bundle from a synthetic spec instead of reading CSVs.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// report.json files to merge.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => RunConfig::resolve(&a).and_then(|c| cmd_run(&c)).map(|_| ()),
        Command::Synth(a) => cmd_synth(&a.spec, &a.out).map(|_| ()),
        Command::Bench(a) => cmd_bench(&a).map(|r| print!("{}", r.to_text())),
        Command::Report(a) => cmd_report(&a.inputs, &a.out).map(|_| ()),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Stream seed of one method under the run's master seed.
pub fn method_seed(master: u64, method: Method) -> u64 {
    derive_seed(master, name_hash(method.as_str()), 0)
}

fn load(config: &RunConfig) -> Result<DatasetBundle> {
    let need = |p: &Option<PathBuf>, flag: &str| {
        p.clone()
            .ok_or_else(|| Error::InvalidParameter(format!("missing --{flag}")))
    };
    let classes = config
        .classes
        .ok_or_else(|| Error::InvalidParameter("missing --classes".into()))?;
    let bundle = load_bundle(
        &need(&config.val, "val")?,
        &need(&config.test, "test")?,
        &need(&config.meta, "meta")?,
        classes,
    )?;
    let pool = config.pool.select(&bundle)?;
    Ok(bundle.restrict(&pool)?)
}

/// Builds every selected method on one bundle.
pub fn run_methods(bundle: &DatasetBundle, config: &RunConfig, dataset: &str) -> Result<(Vec<MethodResult>, Option<Vec<crate::hec::TraceRecord>>)> {
    let candidates = bundle.learner_ids().to_vec();
    let mut results = Vec::new();
    let mut trace = None;
    for &method in &config.methods {
        let seed = method_seed(config.seed, method);
        let solution = match method {
            Method::Hec => {
                let hec = HecConfig {
                    master_seed: seed,
                    record_trace: config.trace.is_some(),
                    ..config.hec.clone()
                };
                let mut s = hec_search(bundle, &hec)?.solution;
                trace = s.trace.take();
                s
            }
            Method::Wmv => wmv_construct(bundle, &candidates, config.hec.normalization)?,
            Method::Stacking => stacking_construct(bundle, &candidates, &config.stacking)?,
            Method::Shapley => shapley_construct(
                bundle,
                &candidates,
                &ShapleyParams {
                    seed,
                    ..config.shapley
                },
            )?,
            Method::Bayes => bayes_construct(bundle, &candidates, config.bayes_alpha)?,
            Method::Random => random_construct(
                bundle,
                &candidates,
                &RandomParams {
                    seed,
                    ..config.random
                },
            )?,
            Method::Majority => majority_construct(bundle, &candidates)?,
            Method::BestSingle => best_single_construct(bundle)?,
        };
        results.push(MethodResult {
            dataset: dataset.to_string(),
            method: method.as_str().to_string(),
            val_accuracy: solution.validation_score,
            test_accuracy: solution.score(bundle.test())?,
            ensemble_size: solution.members.len(),
            members: solution.members.clone(),
        });
    }
    Ok((results, trace))
}

fn write_report(report: &ComparisonReport, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        context: format!("creating {}", out.display()),
        source,
    })?;
    for f in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Markdown] {
        emit_report(report, f, &out.join(format!("report.{}", f.extension())))?;
    }
    Ok(())
}

pub fn cmd_run(config: &RunConfig) -> Result<ComparisonReport> {
    let bundle = load(config)?;
    let dataset = config.dataset_id();
    let (results, trace) = with_threads(config.threads, || run_methods(&bundle, config, &dataset))??;
    let report = ComparisonReport::new(results)?;
    if let Some(out) = &config.out {
        write_report(&report, out)?;
    }
    if let (Some(path), Some(trace)) = (&config.trace, trace) {
        write_trace_csv(&trace, path)?;
    }
    Ok(report)
}

pub fn cmd_synth(spec_path: &Path, out: &Path) -> Result<DatasetBundle> {
    let text = std::fs::read_to_string(spec_path).map_err(|source| Error::Io {
        context: format!("reading {}", spec_path.display()),
        source,
    })?;
    let spec: SyntheticSpec = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", spec_path.display())))?;
    let bundle = generate_synthetic(&spec)?;
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        context: format!("creating {}", out.display()),
        source,
    })?;
    emit_bundle(&bundle, out)?;
    Ok(bundle)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub threads: usize,
    pub learners: usize,
    pub rows: usize,
    pub seeds: u64,
    pub evaluations: u64,
    pub candidates_examined: u64,
    pub validation_score: f64,
    pub members: Vec<String>,
    pub wall_seconds: f64,
    pub evaluations_per_second: f64,
    pub evaluations_per_ms_per_worker: f64,
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        format!(
            "threads: {}\nlearners: {}\nrows: {}\nseeds: {}\nevaluations: {}\ncandidates_examined: {}\n\
             validation_score: {}\nmembers: {}\nwall_seconds: {:.3}\nevaluations_per_second: {:.1}\n\
             evaluations_per_ms_per_worker: {:.3}\n",
            self.threads,
            self.learners,
            self.rows,
            self.seeds,
            self.evaluations,
            self.candidates_examined,
            self.validation_score,
            self.members.join("|"),
            self.wall_seconds,
            self.evaluations_per_second,
            self.evaluations_per_ms_per_worker,
        )
    }
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchReport> {
    let config = RunConfig::resolve(&args.run)?;
    let bundle = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                context: format!("reading {}", p.display()),
                source,
            })?;
            let spec: SyntheticSpec =
                serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(format!("{}: {e}", p.display())))?;
            let b = generate_synthetic(&spec)?;
            let pool = config.pool.select(&b)?;
            b.restrict(&pool)?
        }
        None => load(&config)?,
    };
    let hec = HecConfig {
        master_seed: method_seed(config.seed, Method::Hec),
        record_trace: false,
        ..config.hec.clone()
    };
    let start = Instant::now();
    let (outcome, workers) = with_threads(config.threads, || (hec_search(&bundle, &hec), rayon::current_num_threads()))?;
    let wall = start.elapsed().as_secs_f64();
    let outcome = outcome?;
    let evals = outcome.stats.evaluations as f64;
    let report = BenchReport {
        threads: workers,
        learners: bundle.learner_count(),
        rows: bundle.validation().len(),
        seeds: outcome.stats.seeds,
        evaluations: outcome.stats.evaluations,
        candidates_examined: outcome.stats.candidates_examined,
        validation_score: outcome.solution.validation_score,
        members: outcome.solution.members,
        wall_seconds: wall,
        evaluations_per_second: evals / wall.max(1e-9),
        evaluations_per_ms_per_worker: evals / (wall.max(1e-9) * 1000.0) / workers as f64,
    };
    if let Some(out) = &config.out {
        std::fs::create_dir_all(out).map_err(|source| Error::Io {
            context: format!("creating {}", out.display()),
            source,
        })?;
        let path = out.join("bench.json");
        let text = serde_json::to_string_pretty(&report).expect("bench report serializes");
        std::fs::write(&path, text + "\n").map_err(|source| Error::Io {
            context: format!("writing {}", path.display()),
            source,
        })?;
    }
    Ok(report)
}

pub fn cmd_report(inputs: &[PathBuf], out: &Path) -> Result<ComparisonReport> {
    let reports = inputs
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                context: format!("reading {}", p.display()),
                source,
            })?;
            ComparisonReport::from_json(&text)
        })
        .collect::<Result<Vec<_>>>()?;
    let merged = ComparisonReport::merge(reports)?;
    write_report(&merged, out)?;
    Ok(merged)
}
