//! Command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use synergy_core::checkpoint;
use synergy_core::eval::{median, Metric, SiteMetrics};
use synergy_core::experiment::evaluate;
use synergy_core::norm::NormStats;
use synergy_core::synth::gen_world;

use crate::config::Config;
use crate::error::{exit, HarnessError, Result};
use crate::io;
use crate::report;
use crate::suite::{self, DataSource, RunManifest, SuitePlan};

#[derive(Debug, Parser)]
#[command(name = "synergy", version, about = "Regionalization vs. unification LSTM benchmark")]
pub struct Cli {
    /// Configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replaces every seed in the configuration.
    #[arg(long, global = true)]
    pub seed_override: Option<u64>,
    /// Worker threads for independent model runs.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic world and write its data files.
    GenWorld,
    /// Train one model of the configured family.
    Train {
        /// Dataset directory (overrides `io.data_dir`).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Model id, e.g. `global`, `local:A` or `1.1.1/far+sc`.
        #[arg(long)]
        model: Option<String>,
        /// Reproduce the run a manifest describes instead.
        #[arg(long, conflicts_with_all = ["data", "model"])]
        from_manifest: Option<PathBuf>,
    },
    /// Evaluate a trained run over its test window.
    Eval {
        /// Run directory holding manifest, checkpoint and normalization.
        #[arg(long)]
        run: PathBuf,
        /// Dataset directory; defaults to the manifest's data source.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train and compare every model of the configured family.
    RunSuite {
        /// Dataset directory (overrides `io.data_dir`).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Merge comparison files under a directory into significance tables.
    Report {
        /// Directory searched for run manifests and comparison files.
        runs: PathBuf,
    },
}

impl Cli {
    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed_override {
            cfg.override_seeds(seed);
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(HarnessError::Config("--workers must be >= 1".into()));
            }
            cfg.io.workers = Some(w);
        }
        Ok(cfg)
    }

    fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| HarnessError::Config("--out is required".into()))
    }
}

fn workers(cfg: &Config) -> usize {
    cfg.io
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Executes a parsed command, returning the exit status.
pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::GenWorld => gen_world_cmd(cli),
        Command::Train {
            data,
            model,
            from_manifest,
        } => match from_manifest {
            Some(m) => rerun_cmd(cli, m),
            None => train_cmd(cli, data.as_deref(), model.as_deref()),
        },
        Command::Eval { run, data } => eval_cmd(cli, run, data.as_deref()),
        Command::RunSuite { data } => run_suite_cmd(cli, data.as_deref()),
        Command::Report { runs } => {
            let r = report::report(runs, cli.out()?)?;
            print!("{}", r.text);
            if r.conflicts > 0 {
                eprintln!("warning: {} conflicting comparison rows ignored", r.conflicts);
            }
            Ok(exit::OK)
        }
    }
}

fn gen_world_cmd(cli: &Cli) -> Result<u8> {
    let world = gen_world(&cli.config()?.world()?)?;
    let out = cli.out()?;
    io::save_world(out, &world)?;
    println!(
        "wrote {} sites x {} days to {}",
        world.dataset.len(),
        world.dataset.n_time(),
        out.display()
    );
    Ok(exit::OK)
}

fn data_source(cfg: &mut Config, data: Option<&Path>) -> Result<DataSource> {
    if let Some(d) = data {
        cfg.io.data_dir = Some(d.to_path_buf());
    }
    DataSource::from_config(cfg)
}

fn train_cmd(cli: &Cli, data: Option<&Path>, model: Option<&str>) -> Result<u8> {
    let mut cfg = cli.config()?;
    let out = cli.out()?;
    let src = data_source(&mut cfg, data)?;
    let plan = SuitePlan::from_config(&cfg, &src)?;
    let jobs = plan.jobs(&src)?;
    let job = match model {
        Some(id) => jobs.iter().find(|j| j.spec.model_id() == id).ok_or_else(|| {
            let ids: Vec<String> = jobs.iter().map(|j| j.spec.model_id()).collect();
            HarnessError::Config(format!("no model `{id}`; available: {}", ids.join(", ")))
        })?,
        None => jobs.first().expect("planner yields at least one job"),
    };
    let result = suite::execute(job, &src);
    let dir = out.join("runs").join(job.run_id());
    let manifest = result.write(&dir, &src)?;
    finish_run(&manifest, &dir)
}

fn rerun_cmd(cli: &Cli, path: &Path) -> Result<u8> {
    let manifest = RunManifest::load(path)?;
    let out = cli.out()?;
    let again = suite::rerun(&manifest, out)?;
    finish_run(&again, out)
}

fn finish_run(m: &RunManifest, dir: &Path) -> Result<u8> {
    match &m.status {
        suite::RunStatus::Ok { iterations, .. } => {
            println!("{} trained ({iterations} iterations) -> {}", m.model_id, dir.display());
            Ok(exit::OK)
        }
        suite::RunStatus::Failed { error, numeric } => {
            eprintln!("error: {} failed: {error}", m.model_id);
            Ok(if *numeric { exit::NUMERIC } else { exit::CONFIG })
        }
    }
}

fn eval_cmd(cli: &Cli, run: &Path, data: Option<&Path>) -> Result<u8> {
    let manifest = RunManifest::load(&run.join(suite::MANIFEST))?;
    let files = manifest
        .files
        .as_ref()
        .ok_or_else(|| HarnessError::Config(format!("run {} has no trained model", manifest.run_id)))?;
    let bytes = std::fs::read(run.join(&files.checkpoint)).map_err(|e| HarnessError::io(run, e))?;
    let params = checkpoint::decode(&bytes)?;
    let stats_path = run.join(&files.norm_stats);
    let stats: NormStats = serde_json::from_str(&io::read_text(&stats_path)?)
        .map_err(|e| HarnessError::format(&stats_path, e.line() as u64, e.to_string()))?;
    let src = match data {
        Some(d) => DataSource::load(d, None)?,
        None => DataSource::from_origin(&manifest.data, &manifest.spec.data_fingerprint)?,
    };
    let eval_set = src.dataset.subset_by_ids(&manifest.eval_site_ids)?;
    let spec = &manifest.spec;
    let metrics = evaluate(&params, &stats, &eval_set, &spec.test_window, spec.eval_warmup)?;
    let rows: Vec<(String, SiteMetrics)> = metrics.iter().map(|m| (manifest.model_id.clone(), m.clone())).collect();
    let out = cli.out()?;
    io::write_text(&out.join(suite::METRICS), &io::metrics_csv(&rows))?;
    for metric in [Metric::Rmse, Metric::Corr, Metric::Nse] {
        let v: Vec<f64> = metrics.iter().filter_map(|m| metric.of(m)).collect();
        match median(&v) {
            Some(m) => println!("median {metric}: {m:.4} ({} sites)", v.len()),
            None => println!("median {metric}: undefined"),
        }
    }
    Ok(exit::OK)
}

fn run_suite_cmd(cli: &Cli, data: Option<&Path>) -> Result<u8> {
    let mut cfg = cli.config()?;
    let out = cli.out()?;
    let src = data_source(&mut cfg, data)?;
    let plan = SuitePlan::from_config(&cfg, &src)?;
    let result = suite::run_suite(&src, &plan, out, workers(&cfg))?;
    print!("{}", result.summary);
    for n in &result.record.notes {
        eprintln!("note: {n}");
    }
    Ok(result.exit_code())
}
