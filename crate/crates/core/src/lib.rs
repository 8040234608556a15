//! Ground-truth two-phase reservoir simulation, actuator-coherent linear
//! surrogate identification (DMDc, CCKM level, CCKM Δ, Hybrid B-only),
//! free-run rollout and error metrics.

pub mod actuator;
pub mod dataset;
pub mod error;
pub mod ident;
pub mod io;
pub mod metrics;
pub mod model;
pub mod simulator;
pub mod surrogate;
pub mod units;

pub use error::{Error, Result};
