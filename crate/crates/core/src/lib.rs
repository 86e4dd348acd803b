//! Zero-count statistics for Gaussian analytic functions `Σ ξₙ aₙ zⁿ`:
//! exact variance integrals, Monte Carlo counts, admissibility audits and
//! lattice restrictions of the coefficient sequence.

pub mod admissibility;
pub mod covariance;
pub mod error;
pub mod mc;
pub mod numeric;
pub mod quadrature;
pub mod restriction;
pub mod rng;
pub mod roots;
pub mod variance;

pub use covariance::{CoefficientModel, TiltedWindow, WindowOptions, WindowStats};
pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tilted-window.md")]
    mod tilted_window {}
    #[doc = include_str!("../../../book/src/variance-integral.md")]
    mod variance_integral {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/restriction.md")]
    mod restriction {}
    #[doc = include_str!("../../../book/src/admissibility.md")]
    mod admissibility {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
