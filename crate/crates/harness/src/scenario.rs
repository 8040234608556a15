//! The two counterexample scenarios.
//!
//! * Case A: rate-controlled central injector. Training is steady low-rate
//!   injection; the test window shuts the well in, then restarts it at a
//!   multiple of the training rate.
//! * Case B: BHP-controlled central producer from 200 bar. Training holds
//!   the BHP at 110 bar; the test window drops it by another 90 bar.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use cckm_core::dataset::Variable;
use cckm_core::ident::FieldForm;
use cckm_core::model::{build_model, ControlMode, ControlSchedule, ModelOverrides, ReservoirModel, WellSpec};
use cckm_core::units;

use crate::config::RunConfig;
use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseName {
    CaseA,
    CaseB,
}

impl CaseName {
    pub fn slug(self) -> &'static str {
        match self {
            CaseName::CaseA => "a",
            CaseName::CaseB => "b",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: CaseName,
    pub model: ReservoirModel,
    pub well: WellSpec,
    pub train_schedule: ControlSchedule,
    pub test_schedule: ControlSchedule,
    /// CCKM field form used per variable (also the Hybrid base).
    pub formulations: BTreeMap<Variable, FieldForm>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let t = &self.train_schedule;
        let s = &self.test_schedule;
        if t.mode != s.mode || t.dt != s.dt {
            return Err(HarnessError::Config("train and test schedules must share mode and dt".into()));
        }
        if t.mode != self.well.mode {
            return Err(HarnessError::Config("schedule mode differs from the well mode".into()));
        }
        if t.is_empty() || s.is_empty() {
            return Err(HarnessError::Config("train and test windows need at least one step".into()));
        }
        self.model.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.well.validate(&self.model).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// Train schedule followed by the test schedule.
    pub fn full_schedule(&self) -> ControlSchedule {
        let mut u = self.train_schedule.u.clone();
        u.extend_from_slice(&self.test_schedule.u);
        ControlSchedule { mode: self.train_schedule.mode, dt: self.train_schedule.dt, u }
    }

    pub fn form(&self, variable: Variable) -> FieldForm {
        self.formulations.get(&variable).copied().unwrap_or(FieldForm::Delta)
    }
}

fn model_for(cfg: &RunConfig, sw_init: f64, p_init_bar: Option<f64>) -> Result<ReservoirModel, HarnessError> {
    let overrides = ModelOverrides {
        sw_init: cfg.overrides.sw_init.or(Some(sw_init)),
        p_init_bar: cfg.overrides.p_init_bar.or(p_init_bar),
        ..cfg.overrides.clone()
    };
    build_model(cfg.nx, &overrides).map_err(|e| HarnessError::Config(e.to_string()))
}

/// Case A: shut-in and high-rate restart of a water injector.
pub fn make_case_a(cfg: &RunConfig) -> Result<ScenarioSpec, HarnessError> {
    cfg.validate()?;
    let model = model_for(cfg, 0.0, None)?;
    let well = WellSpec::centered(&model, ControlMode::Rate);
    let dt = units::days_to_s(cfg.dt_days);
    let q = units::rate_per_day_to_si(cfg.q_train);
    let q_high = units::rate_per_day_to_si(cfg.rate_multiplier * cfg.q_train);
    let train = ControlSchedule { mode: ControlMode::Rate, dt, u: vec![q; cfg.train_steps] };
    let mut test_u = vec![0.0; cfg.shutin_steps];
    test_u.extend(std::iter::repeat_n(q_high, cfg.highrate_steps));
    let test = ControlSchedule { mode: ControlMode::Rate, dt, u: test_u };
    let spec = ScenarioSpec {
        name: CaseName::CaseA,
        model,
        well,
        train_schedule: train,
        test_schedule: test,
        formulations: BTreeMap::from([
            (Variable::Pressure, FieldForm::Delta),
            (Variable::Saturation, FieldForm::Delta),
        ]),
    };
    spec.validate()?;
    Ok(spec)
}

/// Case B: BHP drawdown of a producer.
pub fn make_case_b(cfg: &RunConfig) -> Result<ScenarioSpec, HarnessError> {
    cfg.validate()?;
    let model = model_for(cfg, 0.5, Some(cckm_core::model::DEFAULT_P_INIT_BAR))?;
    let mut well = WellSpec::centered(&model, ControlMode::Bhp);
    well.lambda = cfg.lambda;
    let dt = units::days_to_s(cfg.dt_days);
    let train = ControlSchedule {
        mode: ControlMode::Bhp,
        dt,
        u: vec![units::bar_to_pa(cfg.train_bhp_bar); cfg.train_steps],
    };
    let test = ControlSchedule {
        mode: ControlMode::Bhp,
        dt,
        u: vec![units::bar_to_pa(cfg.test_bhp_bar); cfg.test_steps],
    };
    let spec = ScenarioSpec {
        name: CaseName::CaseB,
        model,
        well,
        train_schedule: train,
        test_schedule: test,
        formulations: BTreeMap::from([
            (Variable::Pressure, FieldForm::Level),
            (Variable::Saturation, FieldForm::Delta),
        ]),
    };
    spec.validate()?;
    Ok(spec)
}

pub fn make_case(name: CaseName, cfg: &RunConfig) -> Result<ScenarioSpec, HarnessError> {
    match name {
        CaseName::CaseA => make_case_a(cfg),
        CaseName::CaseB => make_case_b(cfg),
    }
}
