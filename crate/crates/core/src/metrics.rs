//! Prediction error metrics and evaluation reports.
//!
//! Both metrics act on a stacked window of snapshots (one column per step,
//! the shared initial condition excluded):
//!
//! * MAE: mean of `|pred - ref|` over all cells and steps.
//! * FPCE: `100 · ‖pred - ref‖_F / ‖ref‖_F`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{Scaling, TrajectoryDataset, Variable};
use crate::error::{Error, Result};
use crate::ident::ModelKind;
use crate::model::ControlMode;
use crate::surrogate::{GainDiagnostics, Rollout};
use crate::units;

fn same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension {
            context,
            expected: format!("{:?}", b.shape()),
            got: format!("{:?}", a.shape()),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidInput(format!("{context}: empty window")));
    }
    Ok(())
}

pub fn mae(pred: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<f64> {
    same_shape(pred, reference, "mae")?;
    let total: f64 = pred.iter().zip(reference.iter()).map(|(a, b)| (a - b).abs()).sum();
    Ok(total / pred.len() as f64)
}

/// Frobenius-norm percent change error. A zero reference is reported as
/// [`Error::UndefinedDenominator`].
pub fn fpce(pred: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<f64> {
    same_shape(pred, reference, "fpce")?;
    let denom = reference.norm();
    if denom == 0.0 {
        return Err(Error::UndefinedDenominator);
    }
    Ok(100.0 * (pred - reference).norm() / denom)
}

/// FPCE of the predicted actuator series against the scheduled one.
pub fn control_channel_error(p_pred: &DMatrix<f64>, p_sched: &DMatrix<f64>) -> Result<f64> {
    fpce(p_pred, p_sched)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Train,
    Test,
}

/// Rollout that went non-finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowUp {
    pub step: usize,
    pub block: String,
}

/// Metrics for one model, variable and window. Pressure errors are in bar,
/// saturation dimensionless, series times in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variable: Variable,
    pub kind: ModelKind,
    pub window: Window,
    pub mae: Option<f64>,
    /// MAE divided by the model's field scaling std.
    pub mae_standardized: Option<f64>,
    /// `None` when the rollout blew up or the reference norm is zero.
    pub fpce_pct: Option<f64>,
    pub control_fpce_pct: Option<f64>,
    /// Largest predicted field value in the window (output units).
    pub max_pred: Option<f64>,
    pub blow_up: Option<BlowUp>,
    pub gain: Option<GainDiagnostics>,
    pub t_days: Vec<f64>,
    pub mean_ref: Vec<f64>,
    pub mean_pred: Vec<f64>,
    /// Saturation only: mean of the prediction clamped to [0, 1] per cell
    /// (plotting aid; metrics use the unclamped values).
    pub mean_pred_clamped: Vec<f64>,
    pub actuator_sched: Vec<f64>,
    pub actuator_pred: Vec<f64>,
}

/// Field values in report units: bar for pressure, unchanged for saturation.
pub fn to_output_units(variable: Variable, x: &DMatrix<f64>) -> DMatrix<f64> {
    match variable {
        Variable::Pressure => x.map(units::pa_to_bar),
        Variable::Saturation => x.clone(),
    }
}

/// Actuator values in report units: bar for BHP, m³ for cumulative volume.
pub fn actuator_output_units(mode: ControlMode, p: &DMatrix<f64>) -> DMatrix<f64> {
    match mode {
        ControlMode::Bhp => p.map(units::pa_to_bar),
        ControlMode::Rate => p.clone(),
    }
}

fn column_means(x: &DMatrix<f64>) -> Vec<f64> {
    (0..x.ncols()).map(|c| x.column(c).mean()).collect()
}

/// Everything `build_report` needs besides the prediction itself.
pub struct ReportContext<'a> {
    /// Reference trajectory over the window, initial snapshot included.
    pub reference: &'a TrajectoryDataset,
    pub window: Window,
    pub mode: ControlMode,
    /// Time of the window's first snapshot (s).
    pub t0: f64,
    pub scaling: Option<Scaling>,
    pub gain: Option<GainDiagnostics>,
}

/// Build the report for a rollout aligned with `ctx.reference`.
pub fn build_report(rollout: &Rollout, ctx: &ReportContext<'_>) -> Result<EvalReport> {
    let reference = ctx.reference;
    if rollout.x_pred.shape() != reference.x.shape() || rollout.p_pred.shape() != reference.p.shape() {
        return Err(Error::Dimension {
            context: "report time axes",
            expected: format!("x {:?}, p {:?}", reference.x.shape(), reference.p.shape()),
            got: format!("x {:?}, p {:?}", rollout.x_pred.shape(), rollout.p_pred.shape()),
        });
    }
    if rollout.variable != reference.variable {
        return Err(Error::InvalidInput(format!(
            "rollout variable {} does not match reference {}",
            rollout.variable, reference.variable
        )));
    }
    let k = reference.steps();
    let var = reference.variable;
    let pred = to_output_units(var, &rollout.x_pred);
    let truth = to_output_units(var, &reference.x);
    let pred_w = pred.columns(1, k).into_owned();
    let truth_w = truth.columns(1, k).into_owned();
    let mae_v = mae(&pred_w, &truth_w)?;
    let fpce_v = match fpce(&pred_w, &truth_w) {
        Ok(v) => Some(v),
        Err(Error::UndefinedDenominator) => None,
        Err(e) => return Err(e),
    };
    let p_pred = rollout.p_pred.columns(1, k).into_owned();
    let p_sched = reference.p.columns(1, k).into_owned();
    let control = match control_channel_error(&p_pred, &p_sched) {
        Ok(v) => Some(v),
        Err(Error::UndefinedDenominator) => {
            // all-zero schedule: exact match is 0 %, anything else undefined
            if p_pred == p_sched { Some(0.0) } else { None }
        }
        Err(e) => return Err(e),
    };
    let mae_standardized = ctx.scaling.map(|s| {
        let raw = mae(&rollout.x_pred.columns(1, k).into_owned(), &reference.x.columns(1, k).into_owned())
            .expect("shapes checked above");
        raw / s.std
    });
    let t_days = (0..=k).map(|j| units::s_to_days(ctx.t0 + j as f64 * reference.dt)).collect();
    Ok(EvalReport {
        variable: var,
        kind: rollout.kind,
        window: ctx.window,
        mae: Some(mae_v),
        mae_standardized,
        fpce_pct: fpce_v,
        control_fpce_pct: control,
        max_pred: Some(pred_w.max()),
        blow_up: None,
        gain: ctx.gain.clone(),
        t_days,
        mean_ref: column_means(&truth),
        mean_pred: column_means(&pred),
        mean_pred_clamped: match var {
            Variable::Saturation => column_means(&rollout.clamped_field()),
            Variable::Pressure => Vec::new(),
        },
        actuator_sched: actuator_output_units(ctx.mode, &reference.p).iter().copied().collect(),
        actuator_pred: actuator_output_units(ctx.mode, &rollout.p_pred).iter().copied().collect(),
    })
}

/// Report for a rollout that diverged: metrics are absent, the divergence
/// step is recorded.
pub fn blow_up_report(kind: ModelKind, ctx: &ReportContext<'_>, step: usize, block: &str) -> EvalReport {
    let reference = ctx.reference;
    let k = reference.steps();
    let truth = to_output_units(reference.variable, &reference.x);
    EvalReport {
        variable: reference.variable,
        kind,
        window: ctx.window,
        mae: None,
        mae_standardized: None,
        fpce_pct: None,
        control_fpce_pct: None,
        max_pred: None,
        blow_up: Some(BlowUp { step, block: block.to_string() }),
        gain: ctx.gain.clone(),
        t_days: (0..=k).map(|j| units::s_to_days(ctx.t0 + j as f64 * reference.dt)).collect(),
        mean_ref: column_means(&truth),
        mean_pred: Vec::new(),
        mean_pred_clamped: Vec::new(),
        actuator_sched: actuator_output_units(ctx.mode, &reference.p).iter().copied().collect(),
        actuator_pred: Vec::new(),
    }
}
