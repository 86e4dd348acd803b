use super::window::{scan, WindowOptions};
use super::CoefficientModel;
use crate::error::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 0.25;

/// Maximal term `μ(r)` and central index `N(r)` of the series at radius `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CentralIndexInfo {
    pub n: u64,
    pub log_mu: f64,
    /// `N^{(1+γ)/2}`.
    pub k: f64,
    pub gamma: f64,
}

/// Largest maximizer of `log aₙ² + n log r²`.
///
/// Terms within a relative `1e-12` of the maximum count as ties, so that
/// exact ties (e.g. `eᵗ` an integer for `G = e^z`) resolve upward despite
/// rounding in `log Γ`.
pub fn central_index(model: &CoefficientModel, r: f64, gamma: f64) -> Result<CentralIndexInfo> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("radius r = {r} must be positive")));
    }
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "gamma = {gamma} must lie in (0, 1/2)"
        )));
    }
    let t = 2.0 * r.ln();
    let scan = scan(model, t, &WindowOptions::default())?;
    let log_mu = scan.w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * log_mu.abs().max(1.0);
    let n = scan
        .w
        .iter()
        .rposition(|&v| v >= log_mu - tol)
        .expect("scan has a finite term") as u64;
    Ok(CentralIndexInfo {
        n,
        log_mu,
        k: (n as f64).powf((1.0 + gamma) / 2.0),
        gamma,
    })
}
