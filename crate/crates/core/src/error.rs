use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The θ subproblem has no usable interior (the direct link alone
    /// exceeds an interference cap, or no feasible phase vector exists).
    #[error("reflection step infeasible: {0}")]
    ThetaStepInfeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid configuration:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<crate::scenario::ConfigViolation>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
