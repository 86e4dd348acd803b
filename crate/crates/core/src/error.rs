use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown covariance family `{0}`")]
    UnknownFamily(String),

    #[error("family `{family}`: parameter `{name}` is missing")]
    MissingParameter { family: String, name: String },

    #[error("family `{family}`: parameter `{name}` = {value} is out of range ({reason})")]
    InvalidParameter {
        family: String,
        name: String,
        value: f64,
        reason: &'static str,
    },

    #[error("{path}:{line}: {message}")]
    CoefficientFile {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("t = {t} is outside the domain of convergence (t_G = {t_g})")]
    OutsideDomain { t: f64, t_g: f64 },

    #[error("tilted window at t = {t} needs more than {limit} indices")]
    WindowTooLarge { t: f64, limit: usize },

    #[error("the coefficient sequence has no non-zero term")]
    EmptyModel,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("B(t) is bounded on the probed range (max {max_b:.6e}); cannot reach B = {target:.6e}")]
    BoundedVariance { target: f64, max_b: f64 },

    #[error("B(t) is not non-decreasing: B({t0}) = {b0:.6e} > B({t1}) = {b1:.6e}")]
    NotIncreasing { t0: f64, b0: f64, t1: f64, b1: f64 },

    #[error("restriction block ell = {ell} keeps no index (p = {p}, range [{lo}, {hi}))")]
    EmptyBlock { ell: u64, p: u64, lo: u64, hi: u64 },

    #[error("{failed} of {samples} zero counts failed to stabilize (limit {limit:.1e})")]
    TooManyFailures {
        failed: usize,
        samples: usize,
        limit: f64,
    },
}
