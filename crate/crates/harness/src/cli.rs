//! Command-line front end of the `cckm` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::artifacts::{render_table, write_outputs};
use crate::config::{parse_models, RunConfig};
use crate::error::HarnessError;
use crate::experiment::run_experiment;
use crate::scenario::{make_case, CaseName};
use crate::stages::{load_data, load_models, stage_evaluate, stage_fit, stage_simulate};

#[derive(Debug, Parser)]
#[command(name = "cckm", version, about = "Control-coherent Koopman surrogates vs DMDc on a two-phase reservoir")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate, fit, evaluate and write every artifact for one case.
    RunCase(CaseArgs),
    /// Simulate a case and write scenario.json, schedule.csv and trajectories.
    Simulate(CaseArgs),
    /// Fit models on the training window of a simulated directory.
    Fit(FitArgs),
    /// Evaluate saved models and write summary.json and table1.csv.
    Evaluate(EvalArgs),
}

fn parse_case(s: &str) -> Result<CaseName, String> {
    match s {
        "a" | "A" => Ok(CaseName::CaseA),
        "b" | "B" => Ok(CaseName::CaseB),
        _ => Err(format!("unknown case `{s}` (expected a or b)")),
    }
}

/// Flags shared by every stage; they override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file mirroring RunConfig.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated kinds (dmdc, cckm-level, cckm-delta, hybrid-b) or `all`.
    #[arg(long)]
    pub models: Option<String>,
    /// Relative singular-value cutoff of the least-squares fits.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CaseArgs {
    /// `a` (rate shut-in/restart) or `b` (BHP drawdown).
    #[arg(long, value_parser = parse_case)]
    pub case: CaseName,
    /// Cells per side (odd).
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub dt_days: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Directory written by `simulate`.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory written by `simulate`.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory holding `*.cckm` models (default: DATA/models).
    #[arg(long)]
    pub models_dir: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Config file (if any), then CLI overrides.
pub fn build_config(common: &CommonArgs, nx: Option<usize>, dt_days: Option<f64>) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = nx {
        cfg.nx = n;
    }
    if let Some(d) = dt_days {
        cfg.dt_days = d;
    }
    if let Some(m) = &common.models {
        cfg.models = parse_models(m)?;
    }
    if let Some(t) = common.rel_tol {
        cfg.rel_tol = t;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_or(cfg: &RunConfig, common: &CommonArgs, fallback: &Path) -> PathBuf {
    if common.out.is_some() || common.config.is_some() {
        cfg.out.clone()
    } else {
        fallback.to_path_buf()
    }
}

pub fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::RunCase(a) => {
            let cfg = build_config(&a.common, a.nx, a.dt_days)?;
            let spec = make_case(a.case, &cfg)?;
            let out = run_experiment(&spec, &cfg)?;
            let manifest = write_outputs(&out, &cfg, &cfg.out)?;
            print!("{}", render_table(&out));
            println!("{} artifacts in {} (config {})", manifest.artifacts.len() + 1, cfg.out.display(), manifest.config_hash);
        }
        Command::Simulate(a) => {
            let cfg = build_config(&a.common, a.nx, a.dt_days)?;
            let spec = stage_simulate(a.case, &cfg, &cfg.out)?;
            println!(
                "simulated case {}: {} steps, {} cells -> {}",
                spec.name.slug(),
                spec.full_schedule().len(),
                spec.model.grid.cell_count(),
                cfg.out.display()
            );
        }
        Command::Fit(a) => {
            let cfg = build_config(&a.common, None, None)?;
            let data = load_data(&a.data)?;
            let out = out_or(&cfg, &a.common, &a.data);
            let models = stage_fit(&data, &cfg, &out)?;
            for m in &models {
                println!("{} {}: rank {} of {}", m.variable, m.kind, m.fit.rank, m.fit.regressors);
            }
            println!("{} models -> {}", models.len(), out.join("models").display());
        }
        Command::Evaluate(a) => {
            let cfg = build_config(&a.common, None, None)?;
            let data = load_data(&a.data)?;
            let models_dir = a.models_dir.clone().unwrap_or_else(|| a.data.join("models"));
            let models = load_models(&models_dir)?;
            let out = out_or(&cfg, &a.common, &a.data);
            let summary = stage_evaluate(&data, &models, &cfg, &out)?;
            for r in &summary.table {
                let c = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
                println!("{:<12} {:>12} {:>12} {:>12} {:>12}", r.kind.slug(), c(r.p_mae_bar), c(r.p_fpce_pct), c(r.sw_mae), c(r.sw_fpce_pct));
            }
        }
    }
    Ok(())
}
