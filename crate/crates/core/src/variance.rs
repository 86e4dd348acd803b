//! Exact variance of the zero count in `|z| ≤ r`, its classical bounds and
//! the split of the variance integral into a main part and a remainder.
//!
//! With `eᵗ = r²` the variance equals `(1/2π) ∫_{−π}^{π} V(θ) dθ`, where
//! `V = |m|² / (1 − |φ|²)`, `φ(θ) = E[e^{iθX}]` and
//! `m(θ) = E[(X − A) e^{iθX}]` for the tilted law `X` at `t`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::covariance::{CoefficientModel, TiltedWindow};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions, QuadratureResult};

/// `ζ(3/2)`.
pub const ZETA_3_2: f64 = 2.612_375_348_685_488;
/// `ζ(3/2) / (4√π)`, the limit of `Var / √B` for admissible entire functions.
pub const TYPE_I_CONSTANT: f64 = 0.368_468_740_011_322_57;

pub const DEFAULT_C_G: f64 = 2.5;
pub const DEFAULT_EPSILON: f64 = 0.25;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Below this value of `θ² max (n − A)²` over the support the integrand is
/// taken from its Taylor series. Bounding by the widest atom rather than by
/// `B` keeps the series valid for laws with rare distant atoms.
pub const SERIES_CROSSOVER: f64 = 1e-4;

/// `t = log r²`, checked against the domain of `G`.
pub fn t_of_r(model: &CoefficientModel, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("radius r = {r} must be positive")));
    }
    let t = 2.0 * r.ln();
    if t >= model.t_g() {
        return Err(Error::OutsideDomain { t, t_g: model.t_g() });
    }
    Ok(t)
}

/// `δ(t) = √(C_G log B / B)`, defined for `B > 1`.
pub fn delta(b: f64, c_g: f64) -> Option<f64> {
    (b > 1.0).then(|| (c_g * b.ln() / b).sqrt())
}

/// The variance integrand of one tilted window, with the quantities it
/// needs precomputed.
pub struct Integrand<'a> {
    window: &'a TiltedWindow,
    b: f64,
    c1: f64,
    c2: f64,
    max_d2: f64,
    period: f64,
}

impl<'a> Integrand<'a> {
    pub fn new(window: &'a TiltedWindow) -> Self {
        let mm = window.moments();
        let (m2, m3, m4, m5, m6) = (mm.m2, mm.m3, mm.m4, mm.m5, mm.m6);
        let (c1, c2) = if m2 > 0.0 {
            (
                (m2 * m2 * m2 - m2 * m4 + m3 * m3) / (4.0 * m2 * m2),
                (m2 * m2 * (9.0 * m2 * m2 * m2 - 12.0 * m2 * m4 + 13.0 * m3 * m3 + 2.0 * m6)
                    + m2 * (m4 * m4 - 6.0 * m3 * m5)
                    + 3.0 * m3 * m3 * m4)
                    / (144.0 * m2 * m2 * m2),
            )
        } else {
            (0.0, 0.0)
        };
        let max_d2 = window.support().1.iter().fold(0.0f64, |m, d| m.max(d * d));
        Self {
            window,
            b: m2,
            c1,
            c2,
            max_d2,
            period: 2.0 * PI / window.stride() as f64,
        }
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `2π / stride`: the integrand's period.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// `θ` reduced to `[0, period/2]` using periodicity and evenness.
    fn reduce(&self, theta: f64) -> f64 {
        let r = theta.rem_euclid(self.period);
        r.min(self.period - r)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        if self.b == 0.0 {
            return 0.0;
        }
        let th = self.reduce(theta);
        if th * th * self.max_d2 < SERIES_CROSSOVER {
            self.series(th)
        } else {
            self.direct(th)
        }
    }

    /// Taylor branch `B(1 + c₁θ² + c₂θ⁴)`.
    pub fn series(&self, theta: f64) -> f64 {
        let s = theta * theta;
        self.b * (1.0 + s * (self.c1 + s * self.c2))
    }

    /// `|m|² / (2u − u² − v²)` with `u = E[2 sin²(θD/2)]`, `v = E[sin θD]`,
    /// `D = X − A`, which is `1 − |φ|²` without cancellation for small `θ`.
    pub fn direct(&self, theta: f64) -> f64 {
        let (_, d, p) = self.window.support();
        let mut u = 0.0;
        let mut v = 0.0;
        let mut m = Complex64::new(0.0, 0.0);
        for (&d, &p) in d.iter().zip(p) {
            let (s, c) = (theta * d).sin_cos();
            let h = (0.5 * theta * d).sin();
            u += p * 2.0 * h * h;
            v += p * s;
            m += Complex64::new(p * d * c, p * d * s);
        }
        let den = 2.0 * u - u * u - v * v;
        if den <= 0.0 {
            return 0.0;
        }
        m.norm_sqr() / den
    }

    /// Subdivision points for `[lo, hi] ⊂ [0, ∞)`: scales `2ʲ/√B` around
    /// every multiple of the period, `δ`, and the centres of the
    /// near-periodic peaks produced by sparse blocks of the support.
    fn breakpoints(&self, lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
        let half = 0.5 * self.period;
        let mut offsets = vec![0.0];
        if self.b > 0.0 {
            let mut s = self.b.sqrt().recip();
            while s < half {
                offsets.push(s);
                s *= 2.0;
            }
        }
        offsets.extend(extra.iter().copied().filter(|&x| x > 0.0 && x < half));
        let stride = self.window.stride();
        let (n, _, _) = self.window.support();
        let mut gaps: Vec<u64> = n.windows(2).map(|w| (w[1] - w[0]) as u64).collect();
        gaps.sort_unstable();
        gaps.dedup();
        let mut budget = 4096usize;
        for q in gaps.into_iter().filter(|&q| q > stride && q <= 4096) {
            let peaks = (q / stride / 2) as usize;
            if peaks > budget {
                break;
            }
            budget -= peaks;
            for k in 1..=peaks {
                offsets.push(2.0 * PI * k as f64 / q as f64);
            }
        }
        let mut pts = vec![lo, hi];
        let first = (lo / self.period).floor() as i64;
        let last = (hi / self.period).ceil() as i64;
        for k in first..=last {
            let base = k as f64 * self.period;
            for &o in &offsets {
                for x in [base - o, base + o] {
                    if x > lo && x < hi {
                        pts.push(x);
                    }
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1.0));
        pts
    }

    /// `(1/2π) ∫_{lo}^{hi} V` for `0 ≤ lo < hi`.
    fn integrate_nonneg(&self, lo: f64, hi: f64, tol: f64, extra: &[f64]) -> QuadratureResult {
        if self.b == 0.0 || hi <= lo {
            return QuadratureResult {
                value: 0.0,
                abs_error_estimate: 0.0,
                evaluations: 0,
                converged: true,
            };
        }
        let opts = QuadOptions {
            rel_tol: tol,
            abs_tol: 1e-3 * tol * self.b.sqrt().min(self.b),
            ..QuadOptions::default()
        };
        let pts = self.breakpoints(lo, hi, extra);
        let mut r = integrate(|x| self.eval(x), &pts, &opts);
        r.value /= 2.0 * PI;
        r.abs_error_estimate /= 2.0 * PI;
        r
    }
}

/// `V(θ)`; the integrand of the variance formula.
pub fn integrand(window: &TiltedWindow, theta: f64) -> f64 {
    Integrand::new(window).eval(theta)
}

fn combine(a: QuadratureResult, b: QuadratureResult) -> QuadratureResult {
    QuadratureResult {
        value: a.value + b.value,
        abs_error_estimate: a.abs_error_estimate + b.abs_error_estimate,
        evaluations: a.evaluations + b.evaluations,
        converged: a.converged && b.converged,
    }
}

fn scaled(r: QuadratureResult, k: f64) -> QuadratureResult {
    QuadratureResult {
        value: r.value * k,
        abs_error_estimate: r.abs_error_estimate * k,
        ..r
    }
}

/// `(1/2π) ∫_{θ_lo}^{θ_hi} V(θ) dθ` with relative tolerance `tol`.
pub fn integral_over(
    window: &TiltedWindow,
    theta_lo: f64,
    theta_hi: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    if !(-PI <= theta_lo && theta_lo < theta_hi && theta_hi <= PI) {
        return Err(Error::InvalidArgument(format!(
            "need -π ≤ θ_lo < θ_hi ≤ π, got [{theta_lo}, {theta_hi}]"
        )));
    }
    let f = Integrand::new(window);
    let extra = delta(f.b, DEFAULT_C_G).map(|d| vec![d]).unwrap_or_default();
    Ok(if theta_lo >= 0.0 {
        f.integrate_nonneg(theta_lo, theta_hi, tol, &extra)
    } else if theta_hi <= 0.0 {
        f.integrate_nonneg(-theta_hi, -theta_lo, tol, &extra)
    } else {
        combine(
            f.integrate_nonneg(0.0, -theta_lo, tol, &extra),
            f.integrate_nonneg(0.0, theta_hi, tol, &extra),
        )
    })
}

/// The full integral for a window, using evenness and the period.
pub fn variance_of_window(window: &TiltedWindow, tol: f64) -> QuadratureResult {
    let f = Integrand::new(window);
    let half = 0.5 * f.period();
    let extra = delta(f.b, DEFAULT_C_G).map(|d| vec![d]).unwrap_or_default();
    // (1/2π)∫_{−π}^{π} = 2·stride·(1/2π)∫_0^{π/stride}
    scaled(
        f.integrate_nonneg(0.0, half, tol, &extra),
        2.0 * window.stride() as f64,
    )
}

/// `Var n_f(r)` for the Gaussian analytic function with covariance `G`.
pub fn variance_exact(model: &CoefficientModel, r: f64, tol: f64) -> Result<QuadratureResult> {
    let t = t_of_r(model, r)?;
    variance_at(model, t, tol)
}

/// [`variance_exact`] parameterized by `t = log r²`.
pub fn variance_at(model: &CoefficientModel, t: f64, tol: f64) -> Result<QuadratureResult> {
    let window = model.window(t)?;
    Ok(variance_of_window(&window, tol))
}

/// `E n_f(r) = A(log r²)`.
pub fn mean_exact(model: &CoefficientModel, r: f64) -> Result<f64> {
    let t = t_of_r(model, r)?;
    Ok(model.window(t)?.stats().a)
}

/// Upper, lower and asymptotic reference values for `Var n_f(r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub mean: f64,
    /// `B`, which bounds the variance from above.
    pub upper: f64,
    /// `B² / A^{3/2+ε}`.
    pub lower_general: f64,
    /// `√B`.
    pub lower_monotone: f64,
    /// `min(δB, √B)`; zero where `δ` is undefined (`B ≤ 1`).
    pub local_lower: f64,
    /// `ζ(3/2)/(4√π) · √B`.
    pub asymptotic_type_i: f64,
    pub epsilon: f64,
    pub c_g: f64,
    pub delta: Option<f64>,
}

fn check_c_g(c_g: f64) -> Result<()> {
    if c_g > 2.0 && c_g.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("C_G = {c_g} must exceed 2")))
    }
}

pub fn bounds(model: &CoefficientModel, r: f64, epsilon: f64, c_g: f64) -> Result<BoundsReport> {
    let t = t_of_r(model, r)?;
    bounds_at(model, t, epsilon, c_g)
}

pub fn bounds_at(model: &CoefficientModel, t: f64, epsilon: f64, c_g: f64) -> Result<BoundsReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be positive")));
    }
    check_c_g(c_g)?;
    let s = model.window(t)?.stats();
    Ok(bounds_from_stats(s.a, s.b, epsilon, c_g))
}

pub fn bounds_from_stats(a: f64, b: f64, epsilon: f64, c_g: f64) -> BoundsReport {
    let d = delta(b, c_g);
    let root = b.sqrt();
    BoundsReport {
        mean: a,
        upper: b,
        lower_general: if b > 0.0 { b * b / a.powf(1.5 + epsilon) } else { 0.0 },
        lower_monotone: root,
        local_lower: d.map_or(0.0, |d| (d * b).min(root)),
        asymptotic_type_i: TYPE_I_CONSTANT * root,
        epsilon,
        c_g,
        delta: d,
    }
}

/// The variance integral split at `|θ| = δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JSplitResult {
    /// `(1/2π)∫_{|θ|≤δ} V`.
    pub j1: f64,
    /// `(1/2π)∫_{δ≤|θ|≤π} V`.
    pub j2: f64,
    pub j1_error: f64,
    pub j2_error: f64,
    pub delta: f64,
    /// Set when `B ≤ 1` or `δ ≥ π`; the whole integral is then in `j1`.
    pub degenerate: bool,
    pub converged: bool,
}

pub fn j_split(model: &CoefficientModel, r: f64, c_g: f64, tol: f64) -> Result<JSplitResult> {
    let t = t_of_r(model, r)?;
    j_split_at(model, t, c_g, tol)
}

pub fn j_split_at(model: &CoefficientModel, t: f64, c_g: f64, tol: f64) -> Result<JSplitResult> {
    check_c_g(c_g)?;
    let window = model.window(t)?;
    Ok(j_split_window(&window, c_g, tol))
}

pub fn j_split_window(window: &TiltedWindow, c_g: f64, tol: f64) -> JSplitResult {
    let f = Integrand::new(window);
    match delta(f.b, c_g) {
        Some(d) if d < PI => {
            let extra = [d];
            let j1 = scaled(f.integrate_nonneg(0.0, d, tol, &extra), 2.0);
            let j2 = scaled(f.integrate_nonneg(d, PI, tol, &extra), 2.0);
            JSplitResult {
                j1: j1.value,
                j2: j2.value,
                j1_error: j1.abs_error_estimate,
                j2_error: j2.abs_error_estimate,
                delta: d,
                degenerate: false,
                converged: j1.converged && j2.converged,
            }
        }
        d => {
            let full = variance_of_window(window, tol);
            JSplitResult {
                j1: full.value,
                j2: 0.0,
                j1_error: full.abs_error_estimate,
                j2_error: 0.0,
                delta: d.unwrap_or(f64::NAN),
                degenerate: true,
                converged: full.converged,
            }
        }
    }
}
