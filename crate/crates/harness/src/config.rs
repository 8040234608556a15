use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cckm_core::ident::{ModelKind, DEFAULT_REL_TOL};
use cckm_core::model::{ModelOverrides, DEFAULT_NX};

use crate::error::HarnessError;

/// Run configuration in field units (days, bar, m³/day).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nx: usize,
    pub dt_days: f64,
    pub train_steps: usize,
    /// Case A: zero-rate steps at the start of the test window.
    pub shutin_steps: usize,
    /// Case A: high-rate steps after the shut-in.
    pub highrate_steps: usize,
    /// Case B: steps in the test window.
    pub test_steps: usize,
    /// Case A training injection rate (m³/day).
    pub q_train: f64,
    /// Case A test rate as a multiple of `q_train`.
    pub rate_multiplier: f64,
    /// Case B training BHP (bar).
    pub train_bhp_bar: f64,
    /// Case B test BHP (bar).
    pub test_bhp_bar: f64,
    /// BHP response gain λ.
    pub lambda: f64,
    pub rel_tol: f64,
    pub out: PathBuf,
    pub models: Vec<ModelKind>,
    pub overrides: ModelOverrides,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nx: DEFAULT_NX,
            dt_days: 1.0,
            train_steps: 60,
            shutin_steps: 30,
            highrate_steps: 30,
            test_steps: 60,
            q_train: 50.0,
            rate_multiplier: 100.0,
            train_bhp_bar: 110.0,
            test_bhp_bar: 20.0,
            lambda: 1.0,
            rel_tol: DEFAULT_REL_TOL,
            out: PathBuf::from("out"),
            models: ModelKind::ALL.to_vec(),
            overrides: ModelOverrides::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.nx.is_multiple_of(2) || self.nx < 3 {
            return bad(format!("nx must be odd and at least 3 (got {})", self.nx));
        }
        if !(self.dt_days.is_finite() && self.dt_days > 0.0) {
            return bad(format!("dt_days must be positive (got {})", self.dt_days));
        }
        if self.train_steps < 1 || self.test_steps < 1 || self.highrate_steps < 1 {
            return bad("train_steps, test_steps and highrate_steps must be at least 1".into());
        }
        if !(self.q_train.is_finite() && self.q_train > 0.0) {
            return bad(format!("q_train must be positive (got {})", self.q_train));
        }
        if !(self.rate_multiplier.is_finite() && self.rate_multiplier >= 0.0) {
            return bad(format!("rate_multiplier must be non-negative (got {})", self.rate_multiplier));
        }
        if !(self.train_bhp_bar > 0.0 && self.test_bhp_bar > 0.0) {
            return bad("BHP setpoints must be positive".into());
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad(format!("lambda must lie in (0, 1] (got {})", self.lambda));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return bad(format!("rel_tol must lie in (0, 1) (got {})", self.rel_tol));
        }
        if self.models.is_empty() {
            return bad("at least one model kind is required".into());
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// Short SHA-256 of the canonical JSON form, excluding the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&json).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Parse `dmdc,cckm-level,...` or `all`.
pub fn parse_models(s: &str) -> Result<Vec<ModelKind>, HarnessError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part == "all" {
            return Ok(ModelKind::ALL.to_vec());
        }
        let kind = ModelKind::from_slug(part)
            .ok_or_else(|| HarnessError::Config(format!("unknown model kind `{part}`")))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(HarnessError::Config("empty model list".into()));
    }
    Ok(out)
}
