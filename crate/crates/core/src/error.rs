use thiserror::Error;

/// Every failure mode of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{0}` must be positive")]
    NonPositiveParameter(&'static str),

    #[error("parameter `{0}` must be nonnegative")]
    NegativeParameter(&'static str),

    #[error("D_w = {d_w} must be strictly below chi = {chi} for the closed-form wave")]
    DiffusionExceedsChi { d_w: f64, chi: f64 },

    #[error("D_w = 0 has no smooth closed-form wave; use the limit profile instead")]
    DiffusionZero,

    #[error("state is singular: u = {u} (the model is undefined at u = 0)")]
    SingularState { u: f64 },

    #[error("u_tilde = {0} must be nonnegative")]
    NegativeUTilde(f64),

    #[error("u_tilde = 0 is the non-hyperbolic intersection of both branches")]
    OnIntersection,

    #[error("fibre integration constant beta = {0} must be positive")]
    NonPositiveBeta(f64),

    #[error("trajectory did not land on the attracting branch before t = {t_max}")]
    NoLanding { t_max: f64 },

    #[error("perturbed manifold denominator `{0}` is not positive")]
    DegenerateDenominator(&'static str),

    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("maximum number of steps ({0}) exceeded")]
    MaxStepsExceeded(usize),

    #[error("event localization failed between t = {t0} and t = {t1}")]
    EventNotBracketed { t0: f64, t1: f64 },

    #[error("trajectory blew up: w = {w} exceeded the cap {cap}")]
    BlowUp { w: f64, cap: f64 },

    #[error("convergence fit is ill-conditioned: {0}")]
    FitIllConditioned(String),

    #[error("non-finite value after time step at t = {t}")]
    UnstableStep { t: f64 },

    #[error("time step {dt} exceeds the explicit stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("level {level} is not crossed in snapshot at t = {t}")]
    LevelNotCrossed { level: f64, t: f64 },

    #[error("front at x = {x} is within the boundary margin at t = {t}")]
    FrontLeftDomain { x: f64, t: f64 },

    #[error("snapshot and reference profile do not overlap")]
    NoOverlap,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
