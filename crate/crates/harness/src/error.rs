use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("simulation failed: {0}")]
    Simulation(#[source] cckm_core::Error),

    #[error("fit failed: {0}")]
    Fit(#[source] cckm_core::Error),

    #[error("evaluation failed: {0}")]
    Evaluate(#[source] cckm_core::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] cckm_core::Error),
}

impl HarnessError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Simulation(_) => 3,
            HarnessError::Fit(_) => 4,
            HarnessError::Evaluate(_) | HarnessError::Io(_) | HarnessError::Core(_) => 1,
        }
    }
}
