//! Numerical audits of the regularity conditions on `H(t) = G(eᵗ)` used by
//! the variance asymptotics, plus the algebraic identities and Gaussian sum
//! estimates behind them.
//!
//! Asymptotic conditions (`O(·)`, `o(1)`, "`→ ∞`") cannot be decided at a
//! single `t`; every condition is reported as a margin that is `< 1` when
//! the condition holds with the configured constant at this `t`.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::covariance::{CoefficientModel, TiltedWindow};
use crate::error::Result;
use crate::variance::{delta, DEFAULT_C_G, DEFAULT_EPSILON};

const GRID: usize = 256;
/// Smallest `θ/δ` on the logarithmic grid.
const GRID_FLOOR: f64 = 1e-4;
/// Smallest `|ψ(θ)|` trusted inside `log ψ`.
const PSI_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Local,
    Type1,
    Type2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdmissibilityParams {
    pub c_g: f64,
    pub epsilon: f64,
    pub eta: f64,
    /// Relative accuracy demanded of the quadratic expansion (type I, condition 3).
    pub tol: f64,
    /// Constant in `A ≤ const · B²`.
    pub growth_const: f64,
    /// Constant in the decay conditions on `[δ, π]`.
    pub decay_const: f64,
}

impl Default for AdmissibilityParams {
    fn default() -> Self {
        Self {
            c_g: DEFAULT_C_G,
            epsilon: DEFAULT_EPSILON,
            eta: 0.1,
            tol: 0.5,
            growth_const: 10.0,
            decay_const: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionResult {
    pub condition: String,
    pub margin: f64,
    pub passed: bool,
}

impl ConditionResult {
    fn new(condition: &str, margin: f64) -> Self {
        Self {
            condition: condition.into(),
            margin,
            passed: margin < 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub kind: Kind,
    pub t: f64,
    /// `δ(t)`; `NaN` when `B ≤ 1`.
    pub delta: f64,
    pub conditions: Vec<ConditionResult>,
    pub params: AdmissibilityParams,
}

#[derive(Serialize)]
struct ConditionRecord<'a> {
    condition: &'a str,
    margin: f64,
    passed: bool,
    params: ParamsRecord,
}

#[derive(Clone, Copy, Serialize)]
struct ParamsRecord {
    kind: Kind,
    t: f64,
    delta: f64,
    #[serde(rename = "C_G")]
    c_g: f64,
    eps: f64,
    eta: f64,
    tol: f64,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn margins(&self) -> Vec<f64> {
        self.conditions.iter().map(|c| c.margin).collect()
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.condition == name)
    }

    /// One JSON object per condition: `{condition, margin, passed, params}`.
    /// Non-finite margins are written as `null`.
    pub fn to_json(&self) -> serde_json::Value {
        let params = ParamsRecord {
            kind: self.kind,
            t: self.t,
            delta: self.delta,
            c_g: self.params.c_g,
            eps: self.params.epsilon,
            eta: self.params.eta,
            tol: self.params.tol,
        };
        let records: Vec<_> = self
            .conditions
            .iter()
            .map(|c| ConditionRecord {
                condition: &c.condition,
                margin: c.margin,
                passed: c.passed,
                params,
            })
            .collect();
        serde_json::to_value(records).expect("report serializes")
    }
}

/// `expm1` for a complex argument.
fn cexpm1(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    let (s, c) = z.im.sin_cos();
    let em1 = z.re.exp_m1();
    Complex64::new(em1 * c - 2.0 * half * half, (em1 + 1.0) * s)
}

/// `log(1 + w)` accurate for small `w`.
fn clog1p(w: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * w.re + w.norm_sqr()).ln_1p();
    Complex64::new(re, w.im.atan2(1.0 + w.re))
}

/// `log E[e^{τ(X−A)}]` through `Σ p (e^{τd} − 1)`, for small `|τ|`.
fn log_centered_small(window: &TiltedWindow, tau: Complex64) -> Complex64 {
    let (_, d, p) = window.support();
    let mut acc = Complex64::new(0.0, 0.0);
    for (&d, &p) in d.iter().zip(p) {
        acc += cexpm1(tau * d) * p;
    }
    clog1p(acc)
}

/// Centered characteristic function `ψ(θ) = E[e^{iθ(X−A)}]` in the form
/// `(1 − u) + iv`, returned as `(log|ψ|, arg ψ)`.
fn log_psi(window: &TiltedWindow, theta: f64) -> (f64, f64) {
    let (_, d, p) = window.support();
    let (mut u, mut v) = (0.0, 0.0);
    for (&d, &p) in d.iter().zip(p) {
        let h = (0.5 * theta * d).sin();
        u += p * 2.0 * h * h;
        v += p * (theta * d).sin();
    }
    let den = 2.0 * u - u * u - v * v;
    let log_mod = if den < 0.5 {
        0.5 * (-den).ln_1p()
    } else {
        0.5 * ((1.0 - u).powi(2) + v * v).ln()
    };
    (log_mod, v.atan2(1.0 - u))
}

/// `log ψ` on an increasing grid starting near `0`, with the argument
/// continued so that consecutive values differ by less than `π/2`
/// (intermediate points are inserted where needed).
///
/// Stops at the first grid point where `|ψ| < PSI_FLOOR`: below that the
/// sum is dominated by rounding and its logarithm carries no information.
fn unwrapped_log_psi(window: &TiltedWindow, grid: &[f64]) -> Vec<Complex64> {
    let floor = PSI_FLOOR.ln();
    let mut out = Vec::with_capacity(grid.len());
    let (mut theta, mut arg) = (0.0, 0.0);
    let mut h = grid.first().copied().unwrap_or(0.0);
    for &target in grid {
        let mut log_mod = 0.0;
        while theta < target {
            let step = h.min(target - theta);
            let (lm, a) = log_psi(window, theta + step);
            if lm < floor {
                return out;
            }
            let a = a + 2.0 * PI * ((arg - a) / (2.0 * PI)).round();
            let jump = (a - arg).abs();
            if jump >= PI / 2.0 && step > 1e-12 * target {
                h = 0.5 * step;
                continue;
            }
            theta += step;
            arg = a;
            log_mod = lm;
            if jump < PI / 8.0 {
                h = 2.0 * step;
            }
        }
        out.push(Complex64::new(log_mod, arg));
    }
    out
}

fn log_grid(delta: f64) -> Vec<f64> {
    (0..GRID)
        .map(|k| delta * GRID_FLOOR.powf(1.0 - k as f64 / (GRID - 1) as f64))
        .collect()
}

fn uniform_grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..GRID)
        .map(|k| lo + (hi - lo) * k as f64 / (GRID - 1) as f64)
        .collect()
}

/// `B` at a smaller reference point: `t − 1` for entire `G`, `2t` in the disk.
fn growth_margin(model: &CoefficientModel, t: f64, b: f64) -> Result<f64> {
    if b == 0.0 {
        return Ok(f64::INFINITY);
    }
    let t_ref = if model.is_entire() { t - 1.0 } else { 2.0 * t };
    Ok(model.stats(t_ref)?.b / b)
}

struct Common {
    window: TiltedWindow,
    a: f64,
    b: f64,
    delta: Option<f64>,
    growth: f64,
    a_by_b2: f64,
}

fn common(model: &CoefficientModel, t: f64, p: &AdmissibilityParams) -> Result<Common> {
    let window = model.window(t)?;
    let s = window.stats();
    Ok(Common {
        growth: growth_margin(model, t, s.b)?,
        a_by_b2: if s.b > 0.0 {
            s.a / (p.growth_const * s.b * s.b)
        } else {
            f64::INFINITY
        },
        delta: delta(s.b, p.c_g).filter(|&d| d < PI),
        a: s.a,
        b: s.b,
        window,
    })
}

/// `max |ψ(θ)|` and `max |E[X e^{iθ(X−A)}]| / A` over `[δ, π]`.
fn decay_maxima(c: &Common, delta: f64) -> (f64, f64) {
    let mut h = 0.0f64;
    let mut dh = 0.0f64;
    for theta in uniform_grid(delta, PI) {
        let (psi, _) = c.window.centered_char_moments(theta);
        h = h.max(psi.norm());
        if c.a > 0.0 {
            dh = dh.max(c.window.centered_first_moment(theta).norm() / c.a);
        }
    }
    (h, dh)
}

/// Audits the four type I conditions at `t`:
/// growth of `B` (ratio `B(t_ref)/B(t)`), `A = O(B²)`, the quadratic
/// expansion of `log H(t+iθ)/H(t)` on `|θ| ≤ δ`, and the decay of
/// `|H(t+iθ)|`, `|H'(t+iθ)|` on `[δ, π]` relative to `1/B²`.
pub fn check_type1(model: &CoefficientModel, t: f64, p: &AdmissibilityParams) -> Result<AdmissibilityReport> {
    let c = common(model, t, p)?;
    let mut conditions = vec![
        ConditionResult::new("growth", c.growth),
        ConditionResult::new("mean_control", c.a_by_b2),
    ];
    match c.delta {
        Some(d) => {
            let grid = log_grid(d);
            let logs = unwrapped_log_psi(&c.window, &grid);
            let expansion = grid
                .iter()
                .zip(&logs)
                .map(|(&th, &l)| {
                    let q = 0.5 * th * th * c.b;
                    (l + q).norm() / (q * p.tol)
                })
                .fold(0.0, f64::max);
            let (h, dh) = decay_maxima(&c, d);
            let b2 = c.b * c.b / p.decay_const;
            conditions.push(ConditionResult::new("expansion", expansion));
            conditions.push(ConditionResult::new("decay", (h * b2).max(dh * b2)));
        }
        None => {
            conditions.push(ConditionResult::new("expansion", f64::INFINITY));
            conditions.push(ConditionResult::new("decay", f64::INFINITY));
        }
    }
    Ok(AdmissibilityReport {
        kind: Kind::Type1,
        t,
        delta: c.delta.unwrap_or(f64::NAN),
        conditions,
        params: *p,
    })
}

/// Audits the four type II conditions at `t`. The expansion condition is
/// the quantified remainder `|Δ(t,θ)| ≤ B^{3/2−ε}|θ|³` and the decay
/// condition is relative to `1/B`.
pub fn check_type2(model: &CoefficientModel, t: f64, p: &AdmissibilityParams) -> Result<AdmissibilityReport> {
    let c = common(model, t, p)?;
    let mut conditions = vec![
        ConditionResult::new("growth", c.growth),
        ConditionResult::new("mean_control", c.a_by_b2),
    ];
    match c.delta {
        Some(d) => {
            let grid = log_grid(d);
            let logs = unwrapped_log_psi(&c.window, &grid);
            let scale = c.b.powf(1.5 - p.epsilon);
            let remainder = grid
                .iter()
                .zip(&logs)
                .map(|(&th, &l)| (l + 0.5 * th * th * c.b).norm() / (scale * th.powi(3)))
                .fold(0.0, f64::max);
            let (h, _) = decay_maxima(&c, d);
            conditions.push(ConditionResult::new("remainder", remainder));
            conditions.push(ConditionResult::new("decay", h * c.b / p.decay_const));
        }
        None => {
            conditions.push(ConditionResult::new("remainder", f64::INFINITY));
            conditions.push(ConditionResult::new("decay", f64::INFINITY));
        }
    }
    Ok(AdmissibilityReport {
        kind: Kind::Type2,
        t,
        delta: c.delta.unwrap_or(f64::NAN),
        conditions,
        params: *p,
    })
}

/// `Δ(t, θ) = log ψ(θ) + ½θ²B` at a single `θ`.
pub fn expansion_remainder(window: &TiltedWindow, theta: f64) -> Complex64 {
    if theta == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let b = window.stats().b;
    let (lm, a) = log_psi(window, theta);
    Complex64::new(lm, a) + 0.5 * theta * theta * b
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalCheck {
    pub passed: bool,
    /// `max |h_t(τ)| / (|τ|² B)` over the probed `τ`.
    pub worst: f64,
    pub points: usize,
}

/// `h_t(τ) = log H(t+τ)/H(t) − τA − ½τ²B`.
pub fn local_remainder(window: &TiltedWindow, tau: Complex64) -> Complex64 {
    if tau == Complex64::new(0.0, 0.0) {
        return tau;
    }
    let b = window.stats().b;
    log_centered_small(window, tau) - 0.5 * tau * tau * b
}

/// Probes `|h_t(τ)| ≤ ε|τ|²B` for `|τ| ∈ {ηδk/8 : k = 1..8}` and 16
/// directions in the complex plane (real `τ` of both signs included).
pub fn check_local(
    model: &CoefficientModel,
    t: f64,
    delta: f64,
    eta: f64,
    eps: f64,
) -> Result<LocalCheck> {
    let radius = eta * delta;
    if !(radius > 0.0) || t + radius >= model.t_g() {
        return Err(crate::Error::InvalidArgument(format!(
            "need 0 < η·δ and t + η·δ < t_G (η·δ = {radius})"
        )));
    }
    let window = model.window(t)?;
    let b = window.stats().b;
    if b == 0.0 {
        return Ok(LocalCheck {
            passed: false,
            worst: f64::INFINITY,
            points: 0,
        });
    }
    let mut worst = 0.0f64;
    let mut points = 0;
    for k in 1..=8 {
        let r = radius * k as f64 / 8.0;
        for j in 0..16 {
            let tau = Complex64::from_polar(r, 2.0 * PI * j as f64 / 16.0);
            let h = local_remainder(&window, tau);
            worst = worst.max(h.norm() / (r * r * b));
            points += 1;
        }
    }
    Ok(LocalCheck {
        passed: worst <= eps,
        worst,
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianApproxError {
    /// `max |pₙ√(2πB) − exp(−(n−A)²/2B)|` over `|n − A| ≤ span`.
    pub max_error: f64,
    /// The same quantity at `n = round(A)`.
    pub center_error: f64,
    /// `false` when the law has no Gaussian regime (finite support or
    /// `B < 1`); the errors are then reported as `1`.
    pub applicable: bool,
}

/// Distance between the normalized coefficients and the Gaussian profile.
pub fn coeff_gaussian_error(model: &CoefficientModel, t: f64, span: f64) -> Result<GaussianApproxError> {
    let window = model.window(t)?;
    let s = window.stats();
    if model.max_index().is_some() || s.b < 1.0 {
        return Ok(GaussianApproxError {
            max_error: 1.0,
            center_error: 1.0,
            applicable: false,
        });
    }
    let scale = (2.0 * PI * s.b).sqrt();
    let err = |n: u64| {
        let d = n as f64 - s.a;
        (window.prob(n) * scale - (-d * d / (2.0 * s.b)).exp()).abs()
    };
    let lo = (s.a - span).ceil().max(0.0) as u64;
    let hi = (s.a + span).floor().max(0.0) as u64;
    let max_error = (lo..=hi).map(err).fold(0.0, f64::max);
    Ok(GaussianApproxError {
        max_error,
        center_error: err(s.a.round() as u64),
        applicable: true,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GramResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `(max entry modulus)⁴`, the natural size of either side.
    pub scale: f64,
}

/// Residual of `|a₁b₃ − b̄₁b₂|² = (a₁a₃ − |b₂|²)(a₁a₂ − |b₁|²) − a₁·det M`
/// with `M = [[a₁, b̄₁, b̄₂], [b₁, a₂, b̄₃], [b₂, b₃, a₃]]`.
pub fn gram_identity_residual(
    a1: f64,
    a2: f64,
    a3: f64,
    b1: Complex64,
    b2: Complex64,
    b3: Complex64,
) -> GramResidual {
    let m = [
        [Complex64::from(a1), b1.conj(), b2.conj()],
        [b1, Complex64::from(a2), b3.conj()],
        [b2, b3, Complex64::from(a3)],
    ];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let lhs = (b3 * a1 - b1.conj() * b2).norm_sqr();
    let rhs = (a1 * a3 - b2.norm_sqr()) * (a1 * a2 - b1.norm_sqr()) - a1 * det.re;
    let size = [a1.abs(), a2.abs(), a3.abs(), b1.norm(), b2.norm(), b3.norm()]
        .into_iter()
        .fold(0.0, f64::max);
    GramResidual {
        lhs,
        rhs,
        residual: (lhs - rhs).abs() + a1.abs() * det.im.abs(),
        scale: size.powi(4),
    }
}

/// Both sides of `|g(0)g₁(θ) − g₁(0)g(θ)|² ≤ (g(0)g₂(0) − g₁(0)²)(g(0)² − |g(θ)|²)`
/// for `g_j(θ) = Σ nʲ cₙ² e^{inθ}` over the given `(n, cₙ)` pairs.
pub fn covariance_inequality_sides(terms: &[(i64, f64)], theta: f64) -> (f64, f64) {
    let g = |j: i32, th: f64| -> Complex64 {
        terms
            .iter()
            .map(|&(n, c)| Complex64::cis(n as f64 * th) * ((n as f64).powi(j) * c * c))
            .sum()
    };
    let (g0, g10, g20) = (g(0, 0.0).re, g(1, 0.0).re, g(2, 0.0).re);
    let (gt, g1t) = (g(0, theta), g(1, theta));
    let lhs = (g1t * g0 - gt * g10).norm_sqr();
    let rhs = (g0 * g20 - g10 * g10) * (g0 * g0 - gt.norm_sqr());
    (lhs, rhs)
}

/// `Σ_{|kp−A| ≤ s√B} (kp)ʲ exp(−(kp−A)²/2B)` over integers `k`.
pub fn gaussian_lattice_sum(a: f64, b: f64, s: f64, p: u64, j: i32) -> f64 {
    let (lo, hi) = lattice_range(a, b, s, p);
    (lo..=hi)
        .map(|k| {
            let x = k as f64 * p as f64;
            x.powi(j) * (-(x - a).powi(2) / (2.0 * b)).exp()
        })
        .sum()
}

fn lattice_range(a: f64, b: f64, s: f64, p: u64) -> (i64, i64) {
    let w = s * b.sqrt();
    let p = p as f64;
    (((a - w) / p).ceil() as i64, ((a + w) / p).floor() as i64)
}

/// Lower and upper bounds for [`gaussian_lattice_sum`] valid for `s ≥ 1`,
/// `p ≤ √B`: `e^{−1/2}(A − s√B)ʲ` and `e²[√(2πB)/p · (Aʲ + B·1{j=2}) + 1]`.
pub fn gaussian_lattice_bounds(a: f64, b: f64, s: f64, p: u64, j: i32) -> (f64, f64) {
    let lower = (-0.5f64).exp() * (a - s * b.sqrt()).powi(j);
    let extra = if j == 2 { b } else { 0.0 };
    let upper = E * E * ((2.0 * PI * b).sqrt() / p as f64 * (a.powi(j) + extra) + 1.0);
    (lower, upper)
}

/// `Σ_{k₁,k₂} (k₁p − k₂p)² exp(−(k₁p−A)²/2B − (k₂p−A)²/2B)` over the same window.
pub fn gaussian_pair_sum(a: f64, b: f64, s: f64, p: u64) -> f64 {
    let (lo, hi) = lattice_range(a, b, s, p);
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .map(|k| {
            let x = k as f64 * p as f64;
            (x, (-(x - a).powi(2) / (2.0 * b)).exp())
        })
        .collect();
    let mut total = 0.0;
    for &(x1, w1) in &pts {
        for &(x2, w2) in &pts {
            total += (x1 - x2).powi(2) * w1 * w2;
        }
    }
    total
}

/// `(p²/e, 24e⁴πB²/p²)`.
pub fn gaussian_pair_bounds(b: f64, p: u64) -> (f64, f64) {
    let p = p as f64;
    (p * p / E, 24.0 * E.powi(4) * PI * b * b / (p * p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_identity_examples() {
        let z = Complex64::new(0.0, 0.0);
        let r = gram_identity_residual(1.0, 1.0, 1.0, z, z, z);
        assert_eq!((r.lhs, r.rhs, r.residual), (0.0, 0.0, 0.0));
        let r = gram_identity_residual(2.0, 1.0, 1.0, z, z, Complex64::new(1.0, 0.0));
        assert_eq!((r.lhs, r.rhs, r.residual), (4.0, 4.0, 0.0));
    }

    #[test]
    fn complex_helpers_are_accurate_near_zero() {
        let z = Complex64::new(1e-9, -2e-9);
        let e = cexpm1(z);
        assert!((e - z - z * z / 2.0).norm() < 1e-22);
        let l = clog1p(z);
        assert!((l - z + z * z / 2.0).norm() < 1e-22);
    }

    #[test]
    fn remainders_vanish_at_zero() {
        let w = CoefficientModel::exp().window(3.0).unwrap();
        assert_eq!(expansion_remainder(&w, 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(local_remainder(&w, Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn exp_expansion_matches_closed_form() {
        // log ψ(θ) = B(e^{iθ} − 1 − iθ) for the Poisson law.
        let t = 4.0;
        let w = CoefficientModel::exp().window(t).unwrap();
        let b = t.exp();
        for th in [1e-4, 1e-2, 0.2] {
            // Σ_{k≥3} (iθ)ᵏ/k!
            let z = Complex64::new(0.0, th);
            let (mut term, mut series) = (z * z / 2.0, Complex64::new(0.0, 0.0));
            for k in 3..40 {
                term = term * z / k as f64;
                series += term;
            }
            let exact = series * b;
            let got = expansion_remainder(&w, th);
            let err = (got - exact).norm();
            assert!(err < 1e-10 * th * th * b + 1e-9 * exact.norm(), "θ = {th}: {err:e}");
        }
    }

    #[test]
    fn report_json_shape() {
        let rep = check_type1(&CoefficientModel::exp(), 6.0, &AdmissibilityParams::default()).unwrap();
        let v = rep.to_json();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 4);
        for (obj, c) in arr.iter().zip(&rep.conditions) {
            assert_eq!(obj["condition"], c.condition.as_str());
            assert_eq!(obj["passed"], c.passed);
            assert_eq!(obj["params"]["C_G"], 2.5);
        }
    }
}
