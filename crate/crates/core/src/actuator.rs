//! Known actuator kinematics.
//!
//! Rate control integrates the prescribed rate into cumulative injected
//! volume; BHP control is a leaky integrator of the setpoint:
//!
//! ```text
//! rate: p' = p + Δt u            (A_pp = I,       B_p = Δt I)
//! BHP:  p' = p + λ (u - p)        (A_pp = (1-λ) I, B_p = λ I)
//! ```
//!
//! [`propagate_actuator`] is evaluated as `p + Δp` with `Δp` from
//! [`actuator_increment`], so the two agree bit for bit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::ControlMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub mode: ControlMode,
    /// Timestep (s).
    pub dt: f64,
    /// BHP response gain in `(0, 1]`; ignored in rate mode.
    pub lambda: f64,
    /// Actuator dimension.
    pub m: usize,
}

impl Kinematics {
    pub fn rate(dt: f64) -> Self {
        Kinematics { mode: ControlMode::Rate, dt, lambda: 1.0, m: 1 }
    }

    pub fn bhp(dt: f64, lambda: f64) -> Self {
        Kinematics { mode: ControlMode::Bhp, dt, lambda, m: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(invalid("actuator dimension must be at least 1"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("dt must be positive (got {})", self.dt)));
        }
        if self.mode == ControlMode::Bhp && !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(invalid(format!("BHP gain λ must lie in (0, 1] (got {})", self.lambda)));
        }
        Ok(())
    }

    fn check_dims(&self, p: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
        if p.len() != self.m || u.len() != self.m {
            return Err(Error::Dimension {
                context: "actuator state/control",
                expected: format!("m = {}", self.m),
                got: format!("|p| = {}, |u| = {}", p.len(), u.len()),
            });
        }
        Ok(())
    }
}

/// `(A_pp, B_p)` for the given kinematics.
pub fn actuator_matrices(kin: &Kinematics) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    kin.validate()?;
    let eye = DMatrix::<f64>::identity(kin.m, kin.m);
    Ok(match kin.mode {
        ControlMode::Rate => (eye.clone(), eye * kin.dt),
        ControlMode::Bhp => (&eye * (1.0 - kin.lambda), eye * kin.lambda),
    })
}

/// Scalar increment used by the vector routines.
#[inline]
pub fn increment_scalar(kin: &Kinematics, p: f64, u: f64) -> f64 {
    match kin.mode {
        ControlMode::Rate => kin.dt * u,
        ControlMode::Bhp => kin.lambda * (u - p),
    }
}

/// `Δp_k = p_{k+1} - p_k` implied by the kinematics.
pub fn actuator_increment(kin: &Kinematics, p: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    kin.validate()?;
    kin.check_dims(p, u)?;
    Ok(DVector::from_fn(kin.m, |i, _| increment_scalar(kin, p[i], u[i])))
}

/// `p_{k+1} = A_pp p_k + B_p u_k`.
pub fn propagate_actuator(kin: &Kinematics, p: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    let dp = actuator_increment(kin, p, u)?;
    Ok(p + dp)
}

/// Actuator series `p_0 .. p_K` produced by driving `p_0` with the columns of `u`.
pub fn actuator_series(kin: &Kinematics, p0: &DVector<f64>, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = u.ncols();
    let mut out = DMatrix::zeros(kin.m, k + 1);
    out.set_column(0, p0);
    let mut p = p0.clone();
    for j in 0..k {
        p = propagate_actuator(kin, &p, &u.column(j).into_owned())?;
        out.set_column(j + 1, &p);
    }
    Ok(out)
}
