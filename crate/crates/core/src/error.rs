use thiserror::Error;

/// Errors raised across the simulator and the verification harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("radial function is non-positive at node {node} (rho = {value:e})")]
    NonPositiveRadius { node: usize, value: f64 },

    #[error("curve is under-resolved: top-mode ratio {ratio:e} exceeds {threshold:e}")]
    Unresolved { ratio: f64, threshold: f64 },

    #[error("curve does not fit in the torus cell: max extent {extent} >= L = {half_edge}")]
    OutsideCell { extent: f64, half_edge: f64 },

    #[error("annulus center search diverged")]
    OptimFail,

    #[error("negative-order norm requires zero mean, got mean coefficient {mean:e}")]
    NonZeroMean { mean: f64 },

    #[error("interpolation orders must satisfy alpha < sigma < beta (got {alpha}, {sigma}, {beta})")]
    OrderViolation { alpha: f64, sigma: f64, beta: f64 },

    #[error("unsupported Sobolev order {0} for curve norms")]
    UnsupportedOrder(f64),

    #[error("arc-length resampling failed: {0}")]
    ResampleFail(String),

    #[error("evaluation point {z:?} is too close to a lattice point")]
    NearPole { z: (f64, f64) },

    #[error("|z| = {modulus} exceeds the series radius {radius}")]
    OutOfRadius { modulus: f64, radius: f64 },

    #[error("boundary integral system is singular (condition estimate {condition:e})")]
    SolverSingular { condition: f64 },

    #[error("negative dissipation {value:e} beyond tolerance")]
    NegativeDissipation { value: f64 },

    #[error("step rejected: {0}")]
    StepRejected(String),

    #[error("recentering failed: {0}")]
    RecenterFail(String),

    #[error("isoperimetric hypothesis not met: {0}")]
    HypothesisFail(String),

    #[error("E^2 D increased at row {row}: {before:e} -> {after:e}")]
    MonotoneViolation { row: usize, before: f64, after: f64 },

    #[error("energy balance violated at row {row}: dE/dt = {de_dt:e}, -D = {minus_d:e}")]
    EnergyBalanceFail { row: usize, de_dt: f64, minus_d: f64 },

    #[error("no algebraic decay window found")]
    NoAlgebraicWindow,

    #[error("no exponential decay window found")]
    NoExponentialWindow,

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
