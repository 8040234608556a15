//! Composable `simulate` / `fit` / `evaluate` stages that communicate
//! through the files in an output directory.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use cckm_core::dataset::{TrajectoryDataset, Variable};
use cckm_core::ident::{FieldForm, ModelKind, SurrogateModel};
use cckm_core::io::{load_model, read_schedule_csv, read_trajectory_csv};
use cckm_core::simulator::simulate;
use cckm_core::surrogate::same_step_gain;

use crate::artifacts::{write_manifest, write_models, write_simulation, write_summary, Summary};
use crate::config::RunConfig;
use crate::error::HarnessError;
use crate::experiment::{build_table, evaluate_variable, fit_variable, gain_for, kinematics, split, VARIABLES};
use crate::scenario::{make_case, CaseName, ScenarioSpec};

/// Scenario and full trajectories read back from a `simulate` directory.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub spec: ScenarioSpec,
    pub pressure: TrajectoryDataset,
    pub saturation: TrajectoryDataset,
}

impl LoadedData {
    pub fn trajectory(&self, variable: Variable) -> &TrajectoryDataset {
        match variable {
            Variable::Pressure => &self.pressure,
            Variable::Saturation => &self.saturation,
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, HarnessError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

/// Simulate the case and write scenario, schedule and trajectories.
pub fn stage_simulate(case: CaseName, cfg: &RunConfig, dir: &Path) -> Result<ScenarioSpec, HarnessError> {
    let spec = make_case(case, cfg)?;
    let sim = simulate(&spec.model, &spec.well, &spec.full_schedule()).map_err(HarnessError::Simulation)?;
    let written = write_simulation(&spec, &sim, dir)?;
    write_manifest(case, cfg, dir, &written)?;
    Ok(spec)
}

/// Read a directory written by [`stage_simulate`]. The exact schedule comes
/// from `scenario.json`; `schedule.csv` must agree with it.
pub fn load_data(dir: &Path) -> Result<LoadedData, HarnessError> {
    let spec: ScenarioSpec = serde_json::from_reader(open(&dir.join("scenario.json"))?)
        .map_err(|e| HarnessError::Config(format!("scenario.json: {e}")))?;
    spec.validate()?;
    let schedule = spec.full_schedule();
    let from_csv = read_schedule_csv(open(&dir.join("schedule.csv"))?, schedule.mode)?;
    let agrees = from_csv.len() == schedule.len()
        && from_csv
            .u
            .iter()
            .zip(&schedule.u)
            .all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1e-12));
    if !agrees {
        return Err(HarnessError::Config("schedule.csv does not match scenario.json".into()));
    }
    let u = DMatrix::from_row_slice(1, schedule.len(), &schedule.u);
    let read = |variable: Variable| -> Result<TrajectoryDataset, HarnessError> {
        let path = dir.join(format!("trajectory_{}.csv", variable.name()));
        let table = read_trajectory_csv(open(&path)?, variable, schedule.mode)?;
        if table.t.len() != schedule.len() + 1 {
            return Err(HarnessError::Config(format!(
                "{}: {} snapshots for a {}-step schedule",
                path.display(),
                table.t.len(),
                schedule.len()
            )));
        }
        Ok(TrajectoryDataset::new(variable, schedule.dt, table.p, table.x, u.clone())?)
    };
    Ok(LoadedData { pressure: read(Variable::Pressure)?, saturation: read(Variable::Saturation)?, spec })
}

/// Fit `cfg.models` on the training window of `data` and save them under
/// `out/models`.
pub fn stage_fit(data: &LoadedData, cfg: &RunConfig, out: &Path) -> Result<Vec<SurrogateModel>, HarnessError> {
    let kin = kinematics(&data.spec);
    let k_train = data.spec.train_schedule.len();
    let mut models = Vec::new();
    for variable in VARIABLES {
        let (train, _) = split(data.trajectory(variable), k_train)?;
        models.extend(fit_variable(&train, &kin, &cfg.models, data.spec.form(variable), cfg.rel_tol)?);
    }
    write_models(&models, out)?;
    Ok(models)
}

/// Every `*.cckm` file in `dir`, ordered by variable then kind.
pub fn load_models(dir: &Path) -> Result<Vec<SurrogateModel>, HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cckm"))
        .collect();
    paths.sort();
    let mut models = paths.iter().map(|p| load_model(p)).collect::<Result<Vec<_>, _>>()?;
    if models.is_empty() {
        return Err(HarnessError::Config(format!("no .cckm models in {}", dir.display())));
    }
    models.sort_by_key(|m| (m.variable, ModelKind::ALL.iter().position(|&k| k == m.kind)));
    Ok(models)
}

/// Evaluate saved models against the loaded trajectories and write
/// `summary.json` and `table1.csv` into `out`.
pub fn stage_evaluate(
    data: &LoadedData,
    models: &[SurrogateModel],
    cfg: &RunConfig,
    out: &Path,
) -> Result<Summary, HarnessError> {
    let kin = kinematics(&data.spec);
    let k_train = data.spec.train_schedule.len();
    let mode = data.spec.train_schedule.mode;
    let mut reports = Vec::new();
    for variable in VARIABLES {
        let mine: Vec<SurrogateModel> = models.iter().filter(|m| m.variable == variable).cloned().collect();
        if mine.is_empty() {
            continue;
        }
        let form = data.spec.form(variable);
        let coherent = match form {
            FieldForm::Level => ModelKind::CckmLevel,
            FieldForm::Delta => ModelKind::CckmDelta,
        };
        let find = |k| mine.iter().find(|m| m.kind == k);
        let gain = match (find(ModelKind::Dmdc), find(coherent)) {
            (Some(d), Some(c)) => same_step_gain(d, c).map_err(HarnessError::Fit)?,
            _ => {
                let (train, _) = split(data.trajectory(variable), k_train)?;
                gain_for(&train, &kin, form, cfg.rel_tol)?
            }
        };
        reports.extend(evaluate_variable(&mine, data.trajectory(variable), k_train, mode, &gain)?);
    }
    let mut kinds: Vec<ModelKind> = ModelKind::ALL.into_iter().filter(|k| models.iter().any(|m| m.kind == *k)).collect();
    kinds.dedup();
    let summary = Summary { case: data.spec.name, config_hash: cfg.hash(), table: build_table(&kinds, &reports), reports };
    write_summary(&summary, out)?;
    Ok(summary)
}
