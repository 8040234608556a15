//! Two-phase (water/oil), slightly compressible, immiscible IMPES
//! finite-volume simulator on the areal Cartesian grid.
//!
//! Pressure is implicit: the phase conservation laws summed over phases give
//!
//! ```text
//! φ V c_t (p' - p)/Δt - Σ_faces T λt,face (p'_nb - p') = q_t
//! ```
//!
//! with harmonic transmissibilities, mobilities upwinded on the previous
//! pressure and no-flow outer boundaries. Saturation is explicit with
//! upwind fractional flow on the frozen total fluxes, sub-stepped so the
//! CFL number stays below 0.9:
//!
//! ```text
//! φ V ΔSw/τ = Σ_faces fw,up F + q_w - Sw (Σ_faces F + q_t)
//! ```
//!
//! The last term is the storage share of water, which keeps `Sw ∈ [0, 1]`
//! when the pressure moves. Capillary pressure is zero and the grid is
//! horizontal, so there is a single pressure and no gravity term.

mod banded;
mod well;

pub use banded::{BandedCholesky, BandedSpd};
pub use well::{equivalent_radius, peaceman_well_index, WellCoupling};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::actuator::{propagate_actuator, Kinematics};
use crate::dataset::{TrajectoryDataset, Variable};
use crate::error::{invalid, Error, Result};
use crate::model::{ControlMode, ControlSchedule, ReservoirModel, WellSpec};

/// Maximum saturation CFL number per sub-step.
pub const CFL_TARGET: f64 = 0.9;
/// Tolerance on saturation overshoot before clamping; anything larger is a bug.
pub const SATURATION_EPS: f64 = 1e-9;

/// Volumes exchanged during one step (m³ at reservoir conditions).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MassBalance {
    pub injected: f64,
    pub produced: f64,
    /// `Σ φ V c_t (p' - p)`.
    pub accumulated: f64,
}

impl MassBalance {
    /// `|injected - accumulated - produced|` relative to the well volumes.
    /// `floor` guards steps without well flow.
    pub fn relative_residual(&self, floor: f64) -> f64 {
        let scale = self.injected.abs().max(self.produced.abs()).max(floor);
        (self.injected - self.accumulated - self.produced).abs() / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    /// Cell pressures (Pa).
    pub p: Vec<f64>,
    /// Cell water saturations.
    pub sw: Vec<f64>,
    /// Elapsed time (s).
    pub t: f64,
    /// Cumulative injected volume (m³).
    pub cum_injected: f64,
    /// Well bottomhole pressure (Pa): commanded in BHP mode, implied in rate mode.
    pub well_bhp: f64,
    /// Balance of the step that produced this state.
    pub balance: MassBalance,
    /// Saturation sub-steps used by that step.
    pub substeps: usize,
}

impl SimState {
    pub fn initial(model: &ReservoirModel, well: &WellSpec) -> Self {
        SimState {
            p: model.p_init.clone(),
            sw: model.sw_init.clone(),
            t: 0.0,
            cum_injected: 0.0,
            well_bhp: model.p_init[well.cell],
            balance: MassBalance::default(),
            substeps: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.p.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(invalid(format!("state pressure must be positive and finite (got {p})")));
        }
        if let Some(s) = self.sw.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(invalid(format!("state saturation outside [0, 1] (got {s})")));
        }
        Ok(())
    }

    pub fn mean_pressure(&self) -> f64 {
        self.p.iter().sum::<f64>() / self.p.len() as f64
    }
}

/// Connection between two neighbouring cells with `a < b`.
#[derive(Debug, Clone, Copy)]
struct Face {
    a: usize,
    b: usize,
    /// Geometric transmissibility `k A / d` (m³).
    trans: f64,
}

fn faces(model: &ReservoirModel) -> Vec<Face> {
    let g = &model.grid;
    let k = model.props.permeability;
    // half-cell transmissibilities, combined harmonically
    let half_x = k * g.dy() * g.h / (0.5 * g.dx());
    let half_y = k * g.dx() * g.h / (0.5 * g.dy());
    let tx = 1.0 / (1.0 / half_x + 1.0 / half_x);
    let ty = 1.0 / (1.0 / half_y + 1.0 / half_y);
    let mut out = Vec::with_capacity(2 * g.nx * (g.nx - 1));
    for j in 0..g.nx {
        for i in 0..g.nx {
            let c = g.index(i, j);
            if i + 1 < g.nx {
                out.push(Face { a: c, b: c + 1, trans: tx });
            }
            if j + 1 < g.nx {
                out.push(Face { a: c, b: c + g.nx, trans: ty });
            }
        }
    }
    out
}

fn check_inputs(model: &ReservoirModel, well: &WellSpec, state: &SimState, dt: f64) -> Result<()> {
    well.validate(model)?;
    let n = model.grid.cell_count();
    if state.p.len() != n || state.sw.len() != n {
        return Err(Error::Dimension {
            context: "simulation state",
            expected: format!("{n} cells"),
            got: format!("p {}, sw {}", state.p.len(), state.sw.len()),
        });
    }
    state.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("dt must be positive (got {dt})")));
    }
    Ok(())
}

fn kinematics_of(well: &WellSpec, dt: f64) -> Kinematics {
    Kinematics { mode: well.mode, dt, lambda: well.lambda, m: 1 }
}

/// Advance one step of length `dt` under control `u_k` (rate in m³/s or BHP in Pa).
pub fn step_impes(
    state: &SimState,
    model: &ReservoirModel,
    well: &WellSpec,
    u_k: f64,
    dt: f64,
) -> Result<SimState> {
    check_inputs(model, well, state, dt)?;
    if !u_k.is_finite() || (well.mode == ControlMode::Rate && u_k < 0.0) || (well.mode == ControlMode::Bhp && u_k <= 0.0) {
        return Err(invalid(format!("control {u_k} invalid for {:?} mode", well.mode)));
    }
    let props = &model.props;
    let grid = &model.grid;
    let n = grid.cell_count();
    let wc = well.cell;
    let pore = model.pore_volume();
    let acc = pore * props.c_t / dt;
    let faces = faces(model);
    let coupling = WellCoupling::new(model, well, state.sw[wc])?;
    let kin = kinematics_of(well, dt);

    // BHP seen by the well over this step follows the actuator kinematics.
    let bhp = match well.mode {
        ControlMode::Bhp => propagate_actuator(&kin, &DVector::from_element(1, state.well_bhp), &DVector::from_element(1, u_k))?[0],
        ControlMode::Rate => f64::NAN,
    };

    // Pressure system in increments δp = p' - p.
    let mut a = BandedSpd::zeros(n, grid.nx);
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        a.add(i, i, acc);
    }
    let mut face_mob = Vec::with_capacity(faces.len());
    for f in &faces {
        let (pa, pb) = (state.p[f.a], state.p[f.b]);
        let lam = if pa > pb {
            props.total_mobility(state.sw[f.a])
        } else if pb > pa {
            props.total_mobility(state.sw[f.b])
        } else {
            0.5 * (props.total_mobility(state.sw[f.a]) + props.total_mobility(state.sw[f.b]))
        };
        let t = f.trans * lam;
        face_mob.push(t);
        a.add(f.a, f.a, t);
        a.add(f.b, f.b, t);
        a.add(f.a, f.b, -t);
        rhs[f.a] += t * (pb - pa);
        rhs[f.b] += t * (pa - pb);
    }
    let productivity = coupling.productivity();
    match well.mode {
        ControlMode::Rate => rhs[wc] += u_k,
        ControlMode::Bhp => {
            a.add(wc, wc, productivity);
            rhs[wc] += productivity * (bhp - state.p[wc]);
        }
    }
    let dp = a.factor()?.solve(&rhs);
    let p_new: Vec<f64> = state.p.iter().zip(&dp).map(|(p, d)| p + d).collect();
    if let Some(i) = p_new.iter().position(|v| !v.is_finite()) {
        return Err(Error::LinearSolve { pivot: i, value: p_new[i], reason: "non-finite pressure" });
    }

    // Well total rate (positive = injection).
    let q_t = match well.mode {
        ControlMode::Rate => u_k,
        ControlMode::Bhp => productivity * (bhp - p_new[wc]),
    };
    let accumulated: f64 = dp.iter().map(|d| pore * props.c_t * d).sum();
    let balance = MassBalance {
        injected: q_t.max(0.0) * dt,
        produced: (-q_t).max(0.0) * dt,
        accumulated,
    };

    // Total fluxes from b into a on the new pressure.
    let flux: Vec<f64> = faces
        .iter()
        .zip(&face_mob)
        .map(|(f, t)| t * (p_new[f.b] - p_new[f.a]))
        .collect();

    // CFL of the full step, per cell.
    let fmax = props.max_fractional_flow_slope();
    let mut inflow = vec![0.0; n];
    let mut outflow = vec![0.0; n];
    for (f, &q) in faces.iter().zip(&flux) {
        if q > 0.0 {
            inflow[f.a] += q;
            outflow[f.b] += q;
        } else {
            outflow[f.a] -= q;
            inflow[f.b] -= q;
        }
    }
    if q_t > 0.0 {
        inflow[wc] += q_t;
    } else {
        outflow[wc] -= q_t;
    }
    let cfl = (0..n)
        .map(|i| dt / pore * (inflow[i] + fmax * outflow[i]))
        .fold(0.0, f64::max);
    let substeps = ((cfl / CFL_TARGET).ceil() as usize).max(1);
    let tau = dt / substeps as f64;

    let mut sw = state.sw.clone();
    let mut net_total = vec![0.0; n];
    for (f, &q) in faces.iter().zip(&flux) {
        net_total[f.a] += q;
        net_total[f.b] -= q;
    }
    net_total[wc] += q_t;
    let mut dsw = vec![0.0; n];
    for _ in 0..substeps {
        dsw.iter_mut().for_each(|v| *v = 0.0);
        for (f, &q) in faces.iter().zip(&flux) {
            let up = if q > 0.0 { f.b } else { f.a };
            let qw = props.fractional_flow(sw[up]) * q;
            dsw[f.a] += qw;
            dsw[f.b] -= qw;
        }
        let q_w = if q_t > 0.0 { q_t } else { props.fractional_flow(sw[wc]) * q_t };
        dsw[wc] += q_w;
        for i in 0..n {
            let s = sw[i] + tau / pore * (dsw[i] - sw[i] * net_total[i]);
            if !(-SATURATION_EPS..=1.0 + SATURATION_EPS).contains(&s) || !s.is_finite() {
                return Err(Error::SaturationBounds { cell: i, value: s });
            }
            sw[i] = s.clamp(0.0, 1.0);
        }
    }

    let cum_injected = match well.mode {
        ControlMode::Rate => propagate_actuator(&kin, &DVector::from_element(1, state.cum_injected), &DVector::from_element(1, u_k))?[0],
        ControlMode::Bhp => state.cum_injected + q_t * dt,
    };
    let well_bhp = match well.mode {
        ControlMode::Bhp => bhp,
        ControlMode::Rate => p_new[wc] + q_t / productivity,
    };

    Ok(SimState {
        p: p_new,
        sw,
        t: state.t + dt,
        cum_injected,
        well_bhp,
        balance,
        substeps,
    })
}

/// Ground-truth trajectories for one schedule.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub pressure: TrajectoryDataset,
    pub saturation: TrajectoryDataset,
    /// Per-step balances, `K` entries.
    pub balances: Vec<MassBalance>,
    pub substeps: Vec<usize>,
    pub final_state: SimState,
}

impl SimulationResult {
    /// Largest per-step relative mass-balance residual.
    pub fn max_balance_residual(&self, floor: f64) -> f64 {
        self.balances.iter().map(|b| b.relative_residual(floor)).fold(0.0, f64::max)
    }
}

/// Actuator state recorded for the well: cumulative volume (rate) or BHP.
pub fn actuator_state(state: &SimState, mode: ControlMode) -> f64 {
    match mode {
        ControlMode::Rate => state.cum_injected,
        ControlMode::Bhp => state.well_bhp,
    }
}

/// Run the whole schedule from the model's initial state.
pub fn simulate(model: &ReservoirModel, well: &WellSpec, schedule: &ControlSchedule) -> Result<SimulationResult> {
    model.validate()?;
    well.validate(model)?;
    schedule.validate()?;
    if schedule.mode != well.mode {
        return Err(invalid(format!(
            "schedule mode {:?} does not match well mode {:?}",
            schedule.mode, well.mode
        )));
    }
    let n = model.grid.cell_count();
    let k = schedule.len();
    let mut pmat = DMatrix::zeros(n, k + 1);
    let mut smat = DMatrix::zeros(n, k + 1);
    let mut act = DMatrix::zeros(1, k + 1);
    let mut balances = Vec::with_capacity(k);
    let mut substeps = Vec::with_capacity(k);

    let mut state = SimState::initial(model, well);
    let record = |state: &SimState, col: usize, pmat: &mut DMatrix<f64>, smat: &mut DMatrix<f64>, act: &mut DMatrix<f64>| {
        pmat.set_column(col, &DVector::from_column_slice(&state.p));
        smat.set_column(col, &DVector::from_column_slice(&state.sw));
        act[(0, col)] = actuator_state(state, well.mode);
    };
    record(&state, 0, &mut pmat, &mut smat, &mut act);
    for (j, &u) in schedule.u.iter().enumerate() {
        state = step_impes(&state, model, well, u, schedule.dt)?;
        balances.push(state.balance);
        substeps.push(state.substeps);
        record(&state, j + 1, &mut pmat, &mut smat, &mut act);
    }
    let u = DMatrix::from_row_slice(1, k, &schedule.u);
    Ok(SimulationResult {
        pressure: TrajectoryDataset::new(Variable::Pressure, schedule.dt, act.clone(), pmat, u.clone())?,
        saturation: TrajectoryDataset::new(Variable::Saturation, schedule.dt, act, smat, u)?,
        balances,
        substeps,
        final_state: state,
    })
}
