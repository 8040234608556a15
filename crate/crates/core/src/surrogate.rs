//! One-step propagation, free-run rollout and same-step gain diagnostics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::actuator::{actuator_increment, propagate_actuator};
use crate::dataset::{TrajectoryDataset, Variable};
use crate::error::{Error, Result};
use crate::ident::{FieldForm, ModelKind, SurrogateModel};

fn check_finite(v: &DVector<f64>, step: usize, block: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { step, block })
    }
}

fn check_dims(model: &SurrogateModel, p: &DVector<f64>, x: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
    let (m, n) = (model.actuator_dim(), model.field_dim());
    if p.len() != m || u.len() != m || x.len() != n {
        return Err(Error::Dimension {
            context: "surrogate step",
            expected: format!("|p| = |u| = {m}, |x| = {n}"),
            got: format!("|p| = {}, |u| = {}, |x| = {}", p.len(), u.len(), x.len()),
        });
    }
    Ok(())
}

/// Sum the named terms, reporting the first non-finite one.
fn sum_terms(terms: &[(&'static str, DVector<f64>)], step: usize) -> Result<DVector<f64>> {
    for (name, t) in terms {
        check_finite(t, step, name)?;
    }
    let mut acc = terms[0].1.clone();
    for (_, t) in &terms[1..] {
        acc += t;
    }
    Ok(acc)
}

fn step_indexed(
    model: &SurrogateModel,
    p: &DVector<f64>,
    x: &DVector<f64>,
    u: &DVector<f64>,
    step: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let p_next = match model.kind {
        ModelKind::Dmdc => sum_terms(
            &[("A_pp", &model.a_pp * p), ("A_px", &model.a_px * x), ("B_p", &model.b_p * u)],
            step,
        )?,
        _ => propagate_actuator(&model.kin, p, u)?,
    };
    check_finite(&p_next, step, "p_next")?;

    let x_next = match (model.kind, model.form) {
        (ModelKind::Dmdc, _) => sum_terms(
            &[("A_xp", &model.a_xp * p), ("A_xx", &model.a_xx * x), ("B_x", &model.b_x * u)],
            step,
        )?,
        (ModelKind::CckmLevel, _) => {
            sum_terms(&[("A_xp", &model.a_xp * p), ("A_xx", &model.a_xx * x)], step)?
        }
        (ModelKind::CckmDelta, _) => {
            let dp = actuator_increment(&model.kin, p, u)?;
            sum_terms(
                &[
                    ("x", x.clone()),
                    ("A_xp", &model.a_xp * dp),
                    ("A_xx", &model.a_xx * x),
                    ("b_x", model.bias.clone()),
                ],
                step,
            )?
        }
        (ModelKind::HybridB, FieldForm::Level) => sum_terms(
            &[("A_xp", &model.a_xp * p), ("A_xx", &model.a_xx * x), ("B_x", &model.b_x * u)],
            step,
        )?,
        (ModelKind::HybridB, FieldForm::Delta) => {
            let eye = DMatrix::<f64>::identity(model.actuator_dim(), model.actuator_dim());
            sum_terms(
                &[
                    ("x", x.clone()),
                    ("A_xp", &model.a_xp * ((&model.a_pp - eye) * p)),
                    ("A_xx", &model.a_xx * x),
                    ("B_x", &model.b_x * u),
                    ("b_x", model.bias.clone()),
                ],
                step,
            )?
        }
    };
    check_finite(&x_next, step, "x_next")?;
    Ok((p_next, x_next))
}

/// Advance `(p_k, x_k)` one step in model space (standardized field).
pub fn step_surrogate(
    model: &SurrogateModel,
    p: &DVector<f64>,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_dims(model, p, x, u)?;
    step_indexed(model, p, x, u, 0)
}

/// Predicted trajectory in physical units, `K + 1` columns including the
/// initial condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub kind: ModelKind,
    pub variable: Variable,
    pub p_pred: DMatrix<f64>,
    pub x_pred: DMatrix<f64>,
}

impl Rollout {
    pub fn steps(&self) -> usize {
        self.x_pred.ncols() - 1
    }

    /// Field clamped to `[0, 1]`, for plotting saturation only.
    pub fn clamped_field(&self) -> DMatrix<f64> {
        match self.variable {
            Variable::Saturation => self.x_pred.map(|v| v.clamp(0.0, 1.0)),
            Variable::Pressure => self.x_pred.clone(),
        }
    }
}

/// Free-run rollout from `(p0, x0)` (physical units) under the columns of
/// `controls`. Never re-anchored to data.
pub fn rollout(model: &SurrogateModel, p0: &DVector<f64>, x0: &DVector<f64>, controls: &DMatrix<f64>) -> Result<Rollout> {
    let k = controls.ncols();
    let (m, n) = (model.actuator_dim(), model.field_dim());
    if controls.nrows() != m {
        return Err(Error::Dimension {
            context: "rollout controls",
            expected: format!("{m} rows"),
            got: format!("{} rows", controls.nrows()),
        });
    }
    let mut p = p0.clone();
    let mut x = x0.map(|v| model.scaling.forward_value(v));
    check_dims(model, &p, &x, &DVector::zeros(m))?;
    let mut p_pred = DMatrix::zeros(m, k + 1);
    let mut x_pred = DMatrix::zeros(n, k + 1);
    p_pred.set_column(0, &p);
    x_pred.set_column(0, x0);
    for j in 0..k {
        let u = controls.column(j).into_owned();
        let (pn, xn) = step_indexed(model, &p, &x, &u, j + 1)?;
        p = pn;
        x = xn;
        p_pred.set_column(j + 1, &p);
        let phys = x.map(|v| model.scaling.inverse_value(v));
        check_finite(&phys, j + 1, "x_next")?;
        x_pred.set_column(j + 1, &phys);
    }
    Ok(Rollout { kind: model.kind, variable: model.variable, p_pred, x_pred })
}

/// Teacher-forced one-step predictions on a recorded trajectory: column
/// `k + 1` is predicted from the true column `k`. Column 0 is the truth.
pub fn one_step_predictions(model: &SurrogateModel, traj: &TrajectoryDataset) -> Result<Rollout> {
    let k = traj.steps();
    let (m, n) = (model.actuator_dim(), model.field_dim());
    if traj.actuator_dim() != m || traj.field_dim() != n {
        return Err(Error::Dimension {
            context: "teacher-forced trajectory",
            expected: format!("m = {m}, N = {n}"),
            got: format!("m = {}, N = {}", traj.actuator_dim(), traj.field_dim()),
        });
    }
    let mut p_pred = DMatrix::zeros(m, k + 1);
    let mut x_pred = DMatrix::zeros(n, k + 1);
    p_pred.set_column(0, &traj.p.column(0));
    x_pred.set_column(0, &traj.x.column(0));
    for j in 0..k {
        let p = traj.p.column(j).into_owned();
        let x = traj.x.column(j).map(|v| model.scaling.forward_value(v));
        let u = traj.u.column(j).into_owned();
        let (pn, xn) = step_indexed(model, &p, &x, &u, j + 1)?;
        p_pred.set_column(j + 1, &pn);
        x_pred.set_column(j + 1, &xn.map(|v| model.scaling.inverse_value(v)));
    }
    Ok(Rollout { kind: model.kind, variable: model.variable, p_pred, x_pred })
}

/// Frobenius norms of the same-step input paths, in model space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainDiagnostics {
    /// `‖B_x^DMDc‖_F`
    pub norm_bottom_b: f64,
    /// `‖A_xp B_p‖_F` of the coherent model
    pub norm_coherent_path: f64,
    /// `‖B_x^DMDc − A_xp B_p‖_F`
    pub norm_g: f64,
    /// Units of the three norms.
    pub units: String,
}

/// Compare the DMDc bottom-B with the coherent actuator-mediated path.
pub fn same_step_gain(dmdc: &SurrogateModel, cckm: &SurrogateModel) -> Result<GainDiagnostics> {
    if dmdc.kind != ModelKind::Dmdc {
        return Err(Error::InvalidInput(format!("expected a DMDc model, got {}", dmdc.kind)));
    }
    if !matches!(cckm.kind, ModelKind::CckmDelta | ModelKind::CckmLevel) {
        return Err(Error::InvalidInput(format!("expected a CCKM model, got {}", cckm.kind)));
    }
    if dmdc.variable != cckm.variable || dmdc.provenance != cckm.provenance {
        return Err(Error::Provenance(format!(
            "{} / {} fitted on different data",
            dmdc.kind, cckm.kind
        )));
    }
    let coherent = &cckm.a_xp * &cckm.b_p;
    let g = &dmdc.b_x - &coherent;
    let control_unit = match cckm.kin.mode {
        crate::model::ControlMode::Rate => "m³/s",
        crate::model::ControlMode::Bhp => "Pa",
    };
    Ok(GainDiagnostics {
        norm_bottom_b: dmdc.b_x.norm(),
        norm_coherent_path: coherent.norm(),
        norm_g: g.norm(),
        units: format!("standardized {} per {control_unit} of control", cckm.variable),
    })
}
