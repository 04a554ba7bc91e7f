use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("theta-mean has imaginary part {imag:e}; the series is not real-symmetric")]
    RealityViolation { imag: f64 },

    #[error("implicit solve did not contract within {iterations} iterations (last step {last_step:e})")]
    NoContraction { iterations: usize, last_step: f64 },

    #[error("iterate left the declared domain at theta={theta}, r={r}")]
    OutOfDomain { theta: f64, r: f64 },

    #[error("adaptive integrator could not reach tolerance near t={t}")]
    StepFailure { t: f64 },

    #[error("frequency {omega} is within 1e-15 of the rational {p}/{q}")]
    RationalInput { omega: f64, p: i64, q: i64 },

    #[error("frequency is resonant at Fourier mode k={k}")]
    ResonantFrequency { k: i64 },

    #[error("small divisor below the floor for modes {offending:?} (mode, modulus)")]
    SmallDivisorBreach { offending: Vec<(i64, f64)> },

    #[error("the frequency map is not monotone (second derivative changes sign) on the interval")]
    NoTwist,

    #[error("smallness condition violated: {quantity:e} exceeds {limit:e}")]
    SmallnessViolation { quantity: f64, limit: f64 },

    #[error("iteration diverged at step {step}")]
    DivergedIteration { step: usize },

    #[error("square-root branch undefined: |z|={z_abs:e} does not exceed |a|^(1/2)={a_root:e}")]
    BranchViolation { z_abs: f64, a_root: f64 },

    #[error("Newton iteration diverged (residual {residual:e})")]
    NewtonDiverged { residual: f64 },

    #[error("geometry precondition failed: {0}")]
    GeometryViolation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag used in JSON error reports.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::RealityViolation { .. } => "reality_violation",
            Error::NoContraction { .. } => "no_contraction",
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::StepFailure { .. } => "step_failure",
            Error::RationalInput { .. } => "rational_input",
            Error::ResonantFrequency { .. } => "resonant_frequency",
            Error::SmallDivisorBreach { .. } => "small_divisor_breach",
            Error::NoTwist => "no_twist",
            Error::SmallnessViolation { .. } => "smallness_violation",
            Error::DivergedIteration { .. } => "diverged_iteration",
            Error::BranchViolation { .. } => "branch_violation",
            Error::NewtonDiverged { .. } => "newton_diverged",
            Error::GeometryViolation(_) => "geometry_violation",
            Error::InvalidInput(_) => "invalid_input",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
