use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("steady-state cubic has no nonnegative real root")]
    NoPhysicalRoot,

    #[error("analytic stability margin requires positive detuning, got {delta:e} rad/s")]
    NonpositiveDetuning { delta: f64 },

    #[error("drift matrix is not Hurwitz (max real eigenvalue part {max_real:e})")]
    UnstableDrift { max_real: f64 },

    #[error("Lyapunov system is numerically singular (condition estimate {condition:e})")]
    SolverSingular { condition: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenNotConverged,

    #[error("covariance matrix violates the uncertainty principle (symplectic eigenvalue {nu_min:e} < 1/2)")]
    UnphysicalState { nu_min: f64 },

    #[error("negative discriminant {value:e} in symplectic eigenvalue formula")]
    NegativeDiscriminant { value: f64 },

    #[error("effective mechanical frequency is imaginary (radicand {radicand:e} rad²/s²)")]
    ImaginaryFrequency { radicand: f64 },

    #[error("quadrature did not converge: error estimate {error_estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureNotConverged { error_estimate: f64, tolerance: f64 },

    #[error("time step {dt:e} s violates guard dt·max|λ| < 0.1 (limit {limit:e} s)")]
    UnstableTimestep { dt: f64, limit: f64 },

    #[error("invalid trajectory configuration: {0}")]
    InvalidTrajectory(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
