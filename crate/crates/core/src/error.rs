//! Crate-wide error type.

/// Everything that can go wrong across the simulation / solver / estimator
/// pipeline. Configuration problems and numerical failures are kept in one
/// enum so the CLI can map them to exit codes in a single place.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point must lie in the upper half-plane, got im = {im}")]
    NotUpperHalfPlane { im: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("query point outside the fixed-point domain: im(z) = {im_z} but im(z) > {min_im} is required")]
    OutsideFixedPointDomain { im_z: f64, min_im: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last step {residual:.3e}); the query point likely violates the domain condition")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("denominator too close to zero (|g| = {magnitude:.3e}); input is not a genuine transform value")]
    ZeroDenominator { magnitude: f64 },

    #[error("transform evaluator left the upper half-plane at an interior point (im = {im}); not a Cauchy transform")]
    NotATransform { im: f64 },

    #[error("sde step too coarse: dt = {dt:.3e} must be below (min initial gap)^2/4 = {limit:.3e}; increase steps")]
    StepTooCoarse { dt: f64, limit: f64 },

    #[error("sde particles collided near t = {time:.6}: gap {gap:.3e} after {halvings} local step halvings; increase steps")]
    ParticleCollision { time: f64, gap: f64, halvings: u32 },

    #[error("eigensolver failed on {n}x{n} Hermitian matrix: {detail}")]
    Eigensolver { n: usize, detail: String },

    #[error("interlacing violated at index {index}: lambda_t = {lambda_t}, lambda_0 = {lambda_0}, eta = {eta}")]
    InterlacingViolation {
        index: usize,
        lambda_t: f64,
        lambda_0: f64,
        eta: f64,
    },

    #[error("frequency grid too narrow: xi_max = {xi_max} but 1/h = {needed} is required")]
    FrequencyCutoff { xi_max: f64, needed: f64 },

    #[error("non-finite value produced in {context}")]
    NonFinite { context: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{failed} of {total} replicates failed (cap is 10%); first failure: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code the CLI maps this error to: 1 for configuration problems,
    /// 2 for numerical failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
