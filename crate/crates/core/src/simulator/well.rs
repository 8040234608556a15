use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{ControlMode, ReservoirModel, WellSpec};

/// Peaceman equivalent radius for an isotropic Cartesian cell.
pub fn equivalent_radius(dx: f64, dy: f64) -> f64 {
    0.14 * (dx * dx + dy * dy).sqrt()
}

/// Peaceman well index `2π k h / ln(r_eq / r_w)` in m³.
///
/// Phase rates follow `q_α = WI · (k_rα / μ_α) · (p_bhp - p_cell)`.
pub fn peaceman_well_index(model: &ReservoirModel, well: &WellSpec) -> Result<f64> {
    let g = &model.grid;
    let r_eq = equivalent_radius(g.dx(), g.dy());
    if !(well.r_w > 0.0 && well.r_w < r_eq) {
        return Err(invalid(format!(
            "well radius {} must be below the Peaceman radius {r_eq}",
            well.r_w
        )));
    }
    Ok(2.0 * std::f64::consts::PI * model.props.permeability * g.h / (r_eq / well.r_w).ln())
}

/// Well/reservoir coupling at the start of a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellCoupling {
    pub wi: f64,
    pub mode: ControlMode,
    pub water_mobility: f64,
    pub oil_mobility: f64,
}

impl WellCoupling {
    pub fn new(model: &ReservoirModel, well: &WellSpec, sw_cell: f64) -> Result<Self> {
        Ok(WellCoupling {
            wi: peaceman_well_index(model, well)?,
            mode: well.mode,
            water_mobility: model.props.water_mobility(sw_cell),
            oil_mobility: model.props.oil_mobility(sw_cell),
        })
    }

    pub fn total_mobility(&self) -> f64 {
        self.water_mobility + self.oil_mobility
    }

    /// Coefficient `WI λt` multiplying `p_bhp - p_cell` in the total rate.
    pub fn productivity(&self) -> f64 {
        self.wi * self.total_mobility()
    }
}
