//! Time-ordered trajectory records and the snapshot matrices built from them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Pressure,
    Saturation,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::Pressure => "pressure",
            Variable::Saturation => "saturation",
        }
    }
}

impl std::fmt::Display for Variable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Actuator states `p`, field snapshots `x` and controls `u`, one column
/// per time level. `p` and `x` have `K + 1` columns, `u` has `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDataset {
    pub variable: Variable,
    /// Timestep (s).
    pub dt: f64,
    pub p: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub u: DMatrix<f64>,
}

impl TrajectoryDataset {
    pub fn new(
        variable: Variable,
        dt: f64,
        p: DMatrix<f64>,
        x: DMatrix<f64>,
        u: DMatrix<f64>,
    ) -> Result<Self> {
        let t = TrajectoryDataset { variable, dt, p, x, u };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.u.ncols();
        if self.p.ncols() != k + 1 || self.x.ncols() != k + 1 {
            return Err(Error::Dimension {
                context: "trajectory lengths",
                expected: format!("|p| = |x| = |u| + 1 = {}", k + 1),
                got: format!("|p| = {}, |x| = {}", self.p.ncols(), self.x.ncols()),
            });
        }
        if self.p.nrows() != self.u.nrows() {
            return Err(Error::Dimension {
                context: "actuator dimension",
                expected: format!("{}", self.u.nrows()),
                got: format!("{}", self.p.nrows()),
            });
        }
        let all_finite = self.p.iter().chain(self.x.iter()).chain(self.u.iter()).all(|v| v.is_finite());
        if !all_finite {
            return Err(invalid("trajectory contains non-finite values"));
        }
        if self.variable == Variable::Saturation {
            if let Some(s) = self.x.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                return Err(invalid(format!("saturation snapshot outside [0, 1]: {s}")));
            }
        }
        Ok(())
    }

    /// Number of transitions `K`.
    pub fn steps(&self) -> usize {
        self.u.ncols()
    }

    pub fn actuator_dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn field_dim(&self) -> usize {
        self.x.nrows()
    }

    /// Sub-trajectory covering transitions `start..end` (snapshots `start..=end`).
    pub fn window(&self, start: usize, end: usize) -> Result<TrajectoryDataset> {
        if start >= end || end > self.steps() {
            return Err(invalid(format!(
                "window {start}..{end} invalid for a trajectory of {} steps",
                self.steps()
            )));
        }
        let len = end - start;
        Ok(TrajectoryDataset {
            variable: self.variable,
            dt: self.dt,
            p: self.p.columns(start, len + 1).into_owned(),
            x: self.x.columns(start, len + 1).into_owned(),
            u: self.u.columns(start, len).into_owned(),
        })
    }
}

/// Regression matrices: column `k` of `z` is `[p_k; x_k]`, of `zp` is
/// `[p_{k+1}; x_{k+1}]`, of `u` is `u_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrices {
    pub z: DMatrix<f64>,
    pub zp: DMatrix<f64>,
    pub u: DMatrix<f64>,
    /// Actuator dimension (leading rows of `z` and `zp`).
    pub m: usize,
}

impl SnapshotMatrices {
    pub fn steps(&self) -> usize {
        self.z.ncols()
    }

    pub fn field_dim(&self) -> usize {
        self.z.nrows() - self.m
    }

    /// Actuator rows of `z`.
    pub fn p(&self) -> DMatrix<f64> {
        self.z.rows(0, self.m).into_owned()
    }

    /// Field rows of `z`.
    pub fn x(&self) -> DMatrix<f64> {
        self.z.rows(self.m, self.field_dim()).into_owned()
    }

    /// Actuator rows of `zp`.
    pub fn p_next(&self) -> DMatrix<f64> {
        self.zp.rows(0, self.m).into_owned()
    }

    /// Field rows of `zp`.
    pub fn x_next(&self) -> DMatrix<f64> {
        self.zp.rows(self.m, self.field_dim()).into_owned()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.z.ncols();
        if k < 1 {
            return Err(invalid("snapshot matrices need at least one column"));
        }
        if self.zp.shape() != self.z.shape() || self.u.ncols() != k || self.u.nrows() != self.m {
            return Err(Error::Dimension {
                context: "snapshot matrices",
                expected: format!("Z, Z' {:?}, U ({}, {k})", self.z.shape(), self.m),
                got: format!("Z' {:?}, U {:?}", self.zp.shape(), self.u.shape()),
            });
        }
        if self.m >= self.z.nrows() {
            return Err(invalid("actuator dimension must be smaller than the state dimension"));
        }
        Ok(())
    }
}

/// Assemble `Z`, `Z'` and `U` from a trajectory.
///
/// A single transition is accepted here so hand-built fixtures work; the
/// fitting routines enforce their own minimum.
pub fn snapshot_matrices(traj: &TrajectoryDataset) -> Result<SnapshotMatrices> {
    traj.validate()?;
    let k = traj.steps();
    if k < 1 {
        return Err(invalid("trajectory has no transitions"));
    }
    let m = traj.actuator_dim();
    let n = traj.field_dim();
    let mut z = DMatrix::zeros(m + n, k);
    let mut zp = DMatrix::zeros(m + n, k);
    z.view_mut((0, 0), (m, k)).copy_from(&traj.p.columns(0, k));
    z.view_mut((m, 0), (n, k)).copy_from(&traj.x.columns(0, k));
    zp.view_mut((0, 0), (m, k)).copy_from(&traj.p.columns(1, k));
    zp.view_mut((m, 0), (n, k)).copy_from(&traj.x.columns(1, k));
    Ok(SnapshotMatrices { z, zp, u: traj.u.clone(), m })
}

/// Scalar affine standardization of a field: `(x - mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: f64,
    pub std: f64,
}

impl Default for Scaling {
    fn default() -> Self {
        Scaling::identity()
    }
}

impl Scaling {
    pub fn identity() -> Self {
        Scaling { mean: 0.0, std: 1.0 }
    }

    /// Mean and population standard deviation over every entry of `x`.
    /// A constant field keeps `std = 1` so the transform stays invertible.
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.len() as f64;
        if n == 0.0 {
            return Scaling::identity();
        }
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        let std = if std > 1e-300 * mean.abs().max(1.0) && std.is_finite() { std } else { 1.0 };
        Scaling { mean, std }
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x.map(|v| (v - self.mean) / self.std)
    }

    pub fn inverse(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x.map(|v| v * self.std + self.mean)
    }

    pub fn forward_value(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn inverse_value(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }
}
