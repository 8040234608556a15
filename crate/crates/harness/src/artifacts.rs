//! Files written by a run: summary, comparison table, plot series, models,
//! ground-truth trajectories and a manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cckm_core::dataset::Variable;
use cckm_core::ident::{ModelKind, SurrogateModel};
use cckm_core::io::{save_model, sidecar_path, write_schedule_csv, write_series_csv, write_trajectory_csv};
use cckm_core::metrics::{EvalReport, Window};
use cckm_core::simulator::SimulationResult;

use crate::config::RunConfig;
use crate::error::HarnessError;
use crate::experiment::{trajectory, ExperimentOutput, TableRow, VARIABLES};
use crate::scenario::{CaseName, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub case: CaseName,
    pub config_hash: String,
    pub table: Vec<TableRow>,
    pub reports: Vec<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub case: CaseName,
    pub config_hash: String,
    pub config: RunConfig,
    pub artifacts: Vec<ArtifactEntry>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `model,p_mae_bar,p_fpce_pct,sw_mae,sw_fpce_pct,note`; empty cells are
/// undefined metrics, `note` names any divergence.
pub fn write_table_csv(path: &Path, table: &[TableRow], reports: &[EvalReport]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(core_csv)?;
    w.write_record(["model", "p_mae_bar", "p_fpce_pct", "sw_mae", "sw_fpce_pct", "note"])
        .map_err(core_csv)?;
    for row in table {
        let notes: Vec<String> = VARIABLES
            .iter()
            .filter_map(|&v| reports.iter().find(|r| r.variable == v && r.kind == row.kind && r.window == Window::Test))
            .filter_map(|r| r.blow_up.as_ref().map(|b| format!("{} diverged at step {} ({})", r.variable, b.step, b.block)))
            .collect();
        w.write_record([
            row.kind.slug().to_string(),
            fmt_opt(row.p_mae_bar),
            fmt_opt(row.p_fpce_pct),
            fmt_opt(row.sw_mae),
            fmt_opt(row.sw_fpce_pct),
            notes.join("; "),
        ])
        .map_err(core_csv)?;
    }
    w.flush()?;
    Ok(())
}

fn core_csv(e: csv::Error) -> HarnessError {
    HarnessError::Core(e.into())
}

/// One row per schedule step (`t_1 … t_K`): teacher-forced predictions
/// on the training window followed by the free-run test rollout. Steps
/// after a divergence are NaN.
pub fn joined_series(train: &EvalReport, test: &EvalReport, pick: impl Fn(&EvalReport) -> &Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut t = Vec::new();
    let mut v = Vec::new();
    for r in [train, test] {
        let vals = pick(r);
        for j in 1..r.t_days.len() {
            t.push(r.t_days[j]);
            v.push(vals.get(j).copied().unwrap_or(f64::NAN));
        }
    }
    (t, v)
}

fn series_file(path: &Path, t: &[f64], v: &[f64]) -> Result<(), HarnessError> {
    write_series_csv(BufWriter::new(File::create(path)?), t, v)?;
    Ok(())
}

fn hash_file(path: &Path) -> Result<(String, u64), HarnessError> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok((digest.iter().map(|b| format!("{b:02x}")).collect(), bytes.len() as u64))
}

pub fn model_file_name(variable: Variable, kind: ModelKind) -> String {
    format!("{}_{}.cckm", variable.name(), kind.slug())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Core(e.into()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// `scenario.json`, `schedule.csv` and the two ground-truth trajectory CSVs.
pub fn write_simulation(spec: &ScenarioSpec, sim: &SimulationResult, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let schedule = spec.full_schedule();
    let p = dir.join("schedule.csv");
    write_schedule_csv(BufWriter::new(File::create(&p)?), &schedule)?;
    written.push(p);

    let p = dir.join("scenario.json");
    write_json(&p, spec)?;
    written.push(p);

    let t_all: Vec<f64> = (0..=schedule.len()).map(|k| k as f64 * schedule.dt).collect();
    for variable in VARIABLES {
        let traj = trajectory(sim, variable);
        let p = dir.join(format!("trajectory_{}.csv", variable.name()));
        write_trajectory_csv(BufWriter::new(File::create(&p)?), variable, schedule.mode, &t_all, &traj.p, &traj.x)?;
        written.push(p);
    }
    Ok(written)
}

/// Save models under `dir/models`; returns model files and sidecars.
pub fn write_models(models: &[SurrogateModel], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mdir = dir.join("models");
    std::fs::create_dir_all(&mdir)?;
    let mut written = Vec::new();
    for model in models {
        let p = mdir.join(model_file_name(model.variable, model.kind));
        save_model(model, &p)?;
        written.push(sidecar_path(&p));
        written.push(p);
    }
    Ok(written)
}

/// `summary.json` and `table1.csv`.
pub fn write_summary(summary: &Summary, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join("summary.json");
    write_json(&p, summary)?;
    let t = dir.join("table1.csv");
    write_table_csv(&t, &summary.table, &summary.reports)?;
    Ok(vec![p, t])
}

/// Hash every written file into `manifest.json`.
pub fn write_manifest(case: CaseName, cfg: &RunConfig, dir: &Path, written: &[PathBuf]) -> Result<Manifest, HarnessError> {
    let mut artifacts = Vec::with_capacity(written.len());
    for p in written {
        let (sha256, bytes) = hash_file(p)?;
        let rel = p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/");
        artifacts.push(ArtifactEntry { path: rel, sha256, bytes });
    }
    artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    artifacts.dedup_by(|a, b| a.path == b.path);
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        case,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        artifacts,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    log::info!("wrote {} artifacts to {}", manifest.artifacts.len() + 1, dir.display());
    Ok(manifest)
}

/// Write every artifact of a full run into `dir` and return the manifest.
pub fn write_outputs(out: &ExperimentOutput, cfg: &RunConfig, dir: &Path) -> Result<Manifest, HarnessError> {
    let spec = &out.spec;
    let summary = Summary { case: spec.name, config_hash: cfg.hash(), table: out.table.clone(), reports: out.reports.clone() };
    let mut written = write_summary(&summary, dir)?;
    written.extend(write_simulation(spec, &out.sim, dir)?);

    for variable in VARIABLES {
        let mut reference_written = false;
        for &kind in &cfg.models {
            let (Some(train), Some(test)) = (out.report(variable, kind, Window::Train), out.report(variable, kind, Window::Test))
            else {
                continue;
            };
            if !reference_written {
                let (t, v) = joined_series(train, test, |r| &r.mean_ref);
                let p = dir.join(format!("mean_{}_reference.csv", variable.name()));
                series_file(&p, &t, &v)?;
                written.push(p);
                if variable == Variable::Pressure {
                    let (t, v) = joined_series(train, test, |r| &r.actuator_sched);
                    let p = dir.join("actuator_schedule.csv");
                    series_file(&p, &t, &v)?;
                    written.push(p);
                }
                reference_written = true;
            }
            let (t, v) = joined_series(train, test, |r| &r.mean_pred);
            let p = dir.join(format!("mean_{}_{}.csv", variable.name(), kind.slug()));
            series_file(&p, &t, &v)?;
            written.push(p);
            if variable == Variable::Saturation {
                let (t, v) = joined_series(train, test, |r| &r.mean_pred_clamped);
                let p = dir.join(format!("mean_{}_{}_clamped.csv", variable.name(), kind.slug()));
                series_file(&p, &t, &v)?;
                written.push(p);
            }
            if variable == Variable::Pressure {
                let (t, v) = joined_series(train, test, |r| &r.actuator_pred);
                let p = dir.join(format!("actuator_{}.csv", kind.slug()));
                series_file(&p, &t, &v)?;
                written.push(p);
            }
        }
    }

    written.extend(write_models(&out.models, dir)?);
    write_manifest(spec.name, cfg, dir, &written)
}

/// Human-readable comparison table for the terminal.
pub fn render_table(out: &ExperimentOutput) -> String {
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    let mut s = format!(
        "case {} test window: MAE [bar / -]  FPCE [%]\n{:<12} {:>12} {:>12} {:>12} {:>12}\n",
        out.spec.name.slug(),
        "model",
        "P MAE",
        "P FPCE",
        "Sw MAE",
        "Sw FPCE"
    );
    for r in &out.table {
        s.push_str(&format!(
            "{:<12} {:>12} {:>12} {:>12} {:>12}\n",
            r.kind.slug(),
            cell(r.p_mae_bar),
            cell(r.p_fpce_pct),
            cell(r.sw_mae),
            cell(r.sw_fpce_pct)
        ));
    }
    s
}
