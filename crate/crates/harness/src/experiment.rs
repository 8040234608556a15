//! simulate → split → fit on training → evaluate train and test windows.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use cckm_core::actuator::Kinematics;
use cckm_core::dataset::{TrajectoryDataset, Variable};
use cckm_core::ident::{fit_kinds, FieldForm, FitOptions, ModelKind, SurrogateModel, TrainingSet};
use cckm_core::metrics::{blow_up_report, build_report, EvalReport, ReportContext, Window};
use cckm_core::model::ControlMode;
use cckm_core::simulator::{simulate, SimulationResult};
use cckm_core::surrogate::{one_step_predictions, rollout, same_step_gain, GainDiagnostics};

use crate::config::RunConfig;
use crate::error::HarnessError;
use crate::scenario::ScenarioSpec;

pub const VARIABLES: [Variable; 2] = [Variable::Pressure, Variable::Saturation];

/// One row of the comparison table (test window, report units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub kind: ModelKind,
    pub p_mae_bar: Option<f64>,
    pub p_fpce_pct: Option<f64>,
    pub sw_mae: Option<f64>,
    pub sw_fpce_pct: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub spec: ScenarioSpec,
    pub sim: SimulationResult,
    pub models: Vec<SurrogateModel>,
    pub reports: Vec<EvalReport>,
    pub table: Vec<TableRow>,
}

impl ExperimentOutput {
    pub fn report(&self, variable: Variable, kind: ModelKind, window: Window) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.variable == variable && r.kind == kind && r.window == window)
    }

    pub fn model(&self, variable: Variable, kind: ModelKind) -> Option<&SurrogateModel> {
        self.models.iter().find(|m| m.variable == variable && m.kind == kind)
    }
}

pub fn kinematics(spec: &ScenarioSpec) -> Kinematics {
    let dt = spec.train_schedule.dt;
    match spec.train_schedule.mode {
        ControlMode::Rate => Kinematics::rate(dt),
        ControlMode::Bhp => Kinematics::bhp(dt, spec.well.lambda),
    }
}

/// Per-variable trajectory over the full schedule.
pub fn trajectory(sim: &SimulationResult, variable: Variable) -> &TrajectoryDataset {
    match variable {
        Variable::Pressure => &sim.pressure,
        Variable::Saturation => &sim.saturation,
    }
}

/// Fit the requested kinds for one variable on a training trajectory.
pub fn fit_variable(
    train: &TrajectoryDataset,
    kin: &Kinematics,
    kinds: &[ModelKind],
    form: FieldForm,
    rel_tol: f64,
) -> Result<Vec<SurrogateModel>, HarnessError> {
    let set = TrainingSet::from_trajectory(train).map_err(HarnessError::Fit)?;
    fit_kinds(&set, kin, kinds, form, &FitOptions { rel_tol }).map_err(HarnessError::Fit)
}

/// Same-step gain diagnostics from a DMDc / coherent pair fitted on `train`.
pub fn gain_for(
    train: &TrajectoryDataset,
    kin: &Kinematics,
    form: FieldForm,
    rel_tol: f64,
) -> Result<GainDiagnostics, HarnessError> {
    let coherent = match form {
        FieldForm::Level => ModelKind::CckmLevel,
        FieldForm::Delta => ModelKind::CckmDelta,
    };
    let pair = fit_variable(train, kin, &[ModelKind::Dmdc, coherent], form, rel_tol)?;
    same_step_gain(&pair[0], &pair[1]).map_err(HarnessError::Fit)
}

/// Teacher-forced train report and free-run test report for one model.
pub fn evaluate_model(
    model: &SurrogateModel,
    train: &TrajectoryDataset,
    test: &TrajectoryDataset,
    mode: ControlMode,
    t_boundary: f64,
    gain: &GainDiagnostics,
) -> Result<[EvalReport; 2], HarnessError> {
    let train_ctx = ReportContext {
        reference: train,
        window: Window::Train,
        mode,
        t0: 0.0,
        scaling: Some(model.scaling),
        gain: Some(gain.clone()),
    };
    let teacher = one_step_predictions(model, train).map_err(HarnessError::Evaluate)?;
    let train_report = build_report(&teacher, &train_ctx).map_err(HarnessError::Evaluate)?;

    let test_ctx = ReportContext {
        reference: test,
        window: Window::Test,
        mode,
        t0: t_boundary,
        scaling: Some(model.scaling),
        gain: Some(gain.clone()),
    };
    let p0: DVector<f64> = test.p.column(0).into_owned();
    let x0: DVector<f64> = test.x.column(0).into_owned();
    let test_report = match rollout(model, &p0, &x0, &test.u) {
        Ok(r) => build_report(&r, &test_ctx).map_err(HarnessError::Evaluate)?,
        Err(cckm_core::Error::NonFinite { step, block }) => {
            log::warn!("{} {} rollout diverged at test step {step} ({block})", model.variable, model.kind);
            blow_up_report(model.kind, &test_ctx, step, block)
        }
        Err(e) => return Err(HarnessError::Evaluate(e)),
    };
    Ok([train_report, test_report])
}

/// Train/test windows of one variable's full trajectory.
pub fn split(
    full: &TrajectoryDataset,
    k_train: usize,
) -> Result<(TrajectoryDataset, TrajectoryDataset), HarnessError> {
    let k_total = full.steps();
    if k_train == 0 || k_train >= k_total {
        return Err(HarnessError::Config(format!("train boundary {k_train} outside 1..{k_total}")));
    }
    Ok((full.window(0, k_train)?, full.window(k_train, k_total)?))
}

/// Evaluate already fitted models of one variable. `gain` is the same-step
/// diagnostic attached to every report.
pub fn evaluate_variable(
    models: &[SurrogateModel],
    full: &TrajectoryDataset,
    k_train: usize,
    mode: ControlMode,
    gain: &GainDiagnostics,
) -> Result<Vec<EvalReport>, HarnessError> {
    let (train, test) = split(full, k_train)?;
    let t_boundary = k_train as f64 * full.dt;
    let mut reports = Vec::with_capacity(2 * models.len());
    for model in models {
        let [tr, te] = evaluate_model(model, &train, &test, mode, t_boundary, gain)?;
        reports.push(tr);
        reports.push(te);
    }
    Ok(reports)
}

/// Comparison-table rows (test window) in the order of `kinds`.
pub fn build_table(kinds: &[ModelKind], reports: &[EvalReport]) -> Vec<TableRow> {
    kinds
        .iter()
        .map(|&kind| {
            let test_of = |v| reports.iter().find(|r: &&EvalReport| r.kind == kind && r.variable == v && r.window == Window::Test);
            let p = test_of(Variable::Pressure);
            let s = test_of(Variable::Saturation);
            TableRow {
                kind,
                p_mae_bar: p.and_then(|r| r.mae),
                p_fpce_pct: p.and_then(|r| r.fpce_pct),
                sw_mae: s.and_then(|r| r.mae),
                sw_fpce_pct: s.and_then(|r| r.fpce_pct),
            }
        })
        .collect()
}

pub fn run_experiment(spec: &ScenarioSpec, cfg: &RunConfig) -> Result<ExperimentOutput, HarnessError> {
    spec.validate()?;
    cfg.validate()?;
    let schedule = spec.full_schedule();
    let sim = simulate(&spec.model, &spec.well, &schedule).map_err(HarnessError::Simulation)?;
    let kin = kinematics(spec);
    let k_train = spec.train_schedule.len();
    let mode = spec.train_schedule.mode;

    let mut models = Vec::new();
    let mut reports = Vec::new();
    for variable in VARIABLES {
        let full = trajectory(&sim, variable);
        let (train, _) = split(full, k_train)?;
        let form = spec.form(variable);
        let fitted = fit_variable(&train, &kin, &cfg.models, form, cfg.rel_tol)?;
        let gain = gain_for(&train, &kin, form, cfg.rel_tol)?;
        reports.extend(evaluate_variable(&fitted, full, k_train, mode, &gain)?);
        models.extend(fitted);
    }
    let table = build_table(&cfg.models, &reports);
    Ok(ExperimentOutput { spec: spec.clone(), sim, models, reports, table })
}
