//! Reservoir description: grid geometry, rock and fluid properties,
//! the single well, and the control schedule that drives it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::units;

/// Square areal Cartesian grid, `nx × nx` cells, one layer.
///
/// Cells are stored row-major: cell `(i, j)` (column `i`, row `j`) has
/// flat index `j * nx + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub lx: f64,
    pub ly: f64,
    pub h: f64,
}

impl Grid {
    pub fn new(nx: usize, lx: f64, ly: f64, h: f64) -> Result<Self> {
        let grid = Grid { nx, lx, ly, h };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx.is_multiple_of(2) {
            return Err(invalid(format!(
                "nx must be odd so the well sits in the center cell (got {})",
                self.nx
            )));
        }
        if self.nx < 3 {
            return Err(invalid(format!("nx must be at least 3 (got {})", self.nx)));
        }
        for (name, v) in [("Lx", self.lx), ("Ly", self.ly), ("h", self.h)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite (got {v})")));
            }
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.nx
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.nx as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx() * self.dy() * self.h
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// `(i, j)` of a flat index.
    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    pub fn center_cell(&self) -> usize {
        (self.cell_count() - 1) / 2
    }
}

/// Uniform rock and fluid properties, SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidRock {
    /// Absolute permeability (m²).
    pub permeability: f64,
    pub porosity: f64,
    /// Water viscosity (Pa·s).
    pub mu_w: f64,
    /// Oil viscosity (Pa·s).
    pub mu_o: f64,
    /// Total compressibility (1/Pa).
    pub c_t: f64,
}

impl FluidRock {
    pub fn validate(&self) -> Result<()> {
        if !(self.porosity > 0.0 && self.porosity < 1.0) {
            return Err(invalid(format!("porosity must lie in (0, 1) (got {})", self.porosity)));
        }
        for (name, v) in [
            ("permeability", self.permeability),
            ("mu_w", self.mu_w),
            ("mu_o", self.mu_o),
            ("c_t", self.c_t),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite (got {v})")));
            }
        }
        Ok(())
    }

    /// Linear water relative permeability.
    pub fn krw(&self, sw: f64) -> f64 {
        sw
    }

    /// Linear oil relative permeability.
    pub fn kro(&self, sw: f64) -> f64 {
        1.0 - sw
    }

    pub fn water_mobility(&self, sw: f64) -> f64 {
        self.krw(sw) / self.mu_w
    }

    pub fn oil_mobility(&self, sw: f64) -> f64 {
        self.kro(sw) / self.mu_o
    }

    pub fn total_mobility(&self, sw: f64) -> f64 {
        self.water_mobility(sw) + self.oil_mobility(sw)
    }

    /// Water fractional flow `λw / λt`.
    pub fn fractional_flow(&self, sw: f64) -> f64 {
        self.water_mobility(sw) / self.total_mobility(sw)
    }

    /// Upper bound of `dfw/dSw` over `[0, 1]`.
    ///
    /// For linear curves `fw' = 1 / (μw μo λt²)`, largest where `λt` is
    /// smallest, which gives `max(μ) / min(μ)`.
    pub fn max_fractional_flow_slope(&self) -> f64 {
        self.mu_w.max(self.mu_o) / self.mu_w.min(self.mu_o)
    }
}

/// Complete reservoir description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirModel {
    pub grid: Grid,
    pub props: FluidRock,
    /// Initial pressure per cell (Pa).
    pub p_init: Vec<f64>,
    /// Initial water saturation per cell.
    pub sw_init: Vec<f64>,
}

impl ReservoirModel {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.props.validate()?;
        let n = self.grid.cell_count();
        if self.p_init.len() != n || self.sw_init.len() != n {
            return Err(invalid(format!(
                "initial fields must have {n} cells (pressure {}, saturation {})",
                self.p_init.len(),
                self.sw_init.len()
            )));
        }
        if let Some(p) = self.p_init.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(invalid(format!("initial pressure must be positive and finite (got {p})")));
        }
        if let Some(s) = self.sw_init.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(invalid(format!("initial saturation must lie in [0, 1] (got {s})")));
        }
        Ok(())
    }

    pub fn pore_volume(&self) -> f64 {
        self.props.porosity * self.grid.cell_volume()
    }
}

/// Optional property overrides for [`build_model`], in field units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub lx_m: Option<f64>,
    pub ly_m: Option<f64>,
    pub h_m: Option<f64>,
    pub permeability_md: Option<f64>,
    pub porosity: Option<f64>,
    pub mu_w_cp: Option<f64>,
    pub mu_o_cp: Option<f64>,
    pub c_t_per_bar: Option<f64>,
    pub p_init_bar: Option<f64>,
    pub sw_init: Option<f64>,
}

pub const DEFAULT_NX: usize = 21;
pub const DEFAULT_EXTENT_M: f64 = 2000.0;
pub const DEFAULT_THICKNESS_M: f64 = 20.0;
pub const DEFAULT_PERMEABILITY_MD: f64 = 100.0;
pub const DEFAULT_POROSITY: f64 = 0.25;
pub const DEFAULT_MU_W_CP: f64 = 1.0;
pub const DEFAULT_MU_O_CP: f64 = 5.0;
pub const DEFAULT_C_T_PER_BAR: f64 = 1.0e-4;
pub const DEFAULT_P_INIT_BAR: f64 = 200.0;
pub const DEFAULT_WELL_RADIUS_M: f64 = 0.1;

/// Build the uniform 2000 × 2000 × 20 m reservoir with `nx × nx` cells.
pub fn build_model(nx: usize, overrides: &ModelOverrides) -> Result<ReservoirModel> {
    let o = overrides;
    let grid = Grid {
        nx,
        lx: o.lx_m.unwrap_or(DEFAULT_EXTENT_M),
        ly: o.ly_m.unwrap_or(DEFAULT_EXTENT_M),
        h: o.h_m.unwrap_or(DEFAULT_THICKNESS_M),
    };
    grid.validate()?;
    let props = FluidRock {
        permeability: units::md_to_m2(o.permeability_md.unwrap_or(DEFAULT_PERMEABILITY_MD)),
        porosity: o.porosity.unwrap_or(DEFAULT_POROSITY),
        mu_w: units::cp_to_pa_s(o.mu_w_cp.unwrap_or(DEFAULT_MU_W_CP)),
        mu_o: units::cp_to_pa_s(o.mu_o_cp.unwrap_or(DEFAULT_MU_O_CP)),
        c_t: units::per_bar_to_per_pa(o.c_t_per_bar.unwrap_or(DEFAULT_C_T_PER_BAR)),
    };
    let n = grid.cell_count();
    let model = ReservoirModel {
        grid,
        props,
        p_init: vec![units::bar_to_pa(o.p_init_bar.unwrap_or(DEFAULT_P_INIT_BAR)); n],
        sw_init: vec![o.sw_init.unwrap_or(0.0); n],
    };
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    /// Water injection rate (m³/s); actuator state is cumulative volume.
    Rate,
    /// Bottomhole pressure setpoint (Pa); actuator state is the well BHP.
    Bhp,
}

/// Single well at a grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellSpec {
    pub cell: usize,
    pub mode: ControlMode,
    /// Wellbore radius (m).
    pub r_w: f64,
    /// First-order BHP response gain, used in BHP mode only.
    pub lambda: f64,
}

impl WellSpec {
    /// Well at the grid center with the default radius and `λ = 1`.
    pub fn centered(model: &ReservoirModel, mode: ControlMode) -> Self {
        WellSpec {
            cell: model.grid.center_cell(),
            mode,
            r_w: DEFAULT_WELL_RADIUS_M,
            lambda: 1.0,
        }
    }

    pub fn validate(&self, model: &ReservoirModel) -> Result<()> {
        let g = &model.grid;
        if self.cell >= g.cell_count() {
            return Err(invalid(format!("well cell {} outside grid", self.cell)));
        }
        if !(self.r_w > 0.0 && self.r_w < 0.5 * g.dx().min(g.dy())) {
            return Err(invalid(format!(
                "well radius {} must be positive and below half the cell size",
                self.r_w
            )));
        }
        if self.mode == ControlMode::Bhp && !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(invalid(format!("BHP gain λ must lie in (0, 1] (got {})", self.lambda)));
        }
        Ok(())
    }
}

/// Per-step controls for one well. `u[k]` acts over `[t_k, t_k + dt]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub mode: ControlMode,
    /// Timestep (s).
    pub dt: f64,
    /// Rate (m³/s) or BHP (Pa) per step.
    pub u: Vec<f64>,
}

impl ControlSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.u.len() < 2 {
            return Err(invalid(format!("schedule needs at least 2 steps (got {})", self.u.len())));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("dt must be positive (got {})", self.dt)));
        }
        match self.mode {
            ControlMode::Rate => {
                if let Some(q) = self.u.iter().find(|q| !(q.is_finite() && **q >= 0.0)) {
                    return Err(invalid(format!("injection rates must be non-negative (got {q})")));
                }
            }
            ControlMode::Bhp => {
                if let Some(p) = self.u.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
                    return Err(invalid(format!("BHP setpoints must be positive (got {p})")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Concatenate two schedules with the same mode and timestep.
    pub fn concat(&self, other: &ControlSchedule) -> Result<ControlSchedule> {
        if self.mode != other.mode || self.dt != other.dt {
            return Err(invalid("schedules must share mode and dt"));
        }
        let mut u = self.u.clone();
        u.extend_from_slice(&other.u);
        Ok(ControlSchedule { mode: self.mode, dt: self.dt, u })
    }
}
