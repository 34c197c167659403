use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the geometry and simulation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite field value at stencil point {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error("matrix is singular (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("metric is not positive definite: pivot {pivot} has value {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("Faddeev-Popov matrix is singular at {point:?}: gauge surface is not transverse to the orbit")]
    GaugeNotTransverse { point: Vec<f64> },

    #[error("orbit metric is degenerate at {point:?}: group action is not free there")]
    DegenerateOrbit { point: Vec<f64> },

    #[error("point {point:?} lies outside the coordinate chart")]
    OutsideChart { point: Vec<f64> },

    #[error("{0} requires a group chart")]
    MissingGroupChart(&'static str),

    #[error("projection onto the gauge surface failed at step {step}: residual {residual:e} after {iterations} iterations")]
    ProjectionFailed { step: usize, iterations: usize, residual: f64 },

    #[error("unknown scenario `{name}`; valid names: {valid}")]
    UnknownScenario { name: String, valid: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("path record carries no Wiener increments")]
    MissingIncrements,

    #[error("invalid bundle: {0}")]
    InvalidBundle(String),

    #[error("{killed} of {n_paths} paths left the chart (more than {max_fraction} of the ensemble)")]
    TooManyTruncated { killed: usize, n_paths: usize, max_fraction: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
