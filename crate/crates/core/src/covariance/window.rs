use num_complex::Complex64;

use super::CoefficientModel;
use crate::error::{Error, Result};
use crate::numeric::{gcd, KahanSum, LogSumExp};

pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Knobs for [`tilted_window`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowOptions {
    /// Total probability mass allowed outside the window.
    pub tail_eps: f64,
    /// Resource guard: largest index the scan may reach.
    pub max_index: u64,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self {
            tail_eps: DEFAULT_TAIL_EPS,
            max_index: 5_000_000,
        }
    }
}

impl WindowOptions {
    pub fn with_tail_eps(tail_eps: f64) -> Self {
        Self {
            tail_eps,
            ..Self::default()
        }
    }
}

/// `A(t)` and `B(t)`: mean and variance of the tilted law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowStats {
    pub a: f64,
    pub b: f64,
}

/// Mean and central moments `μ₂ … μ₆` of the tilted law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CentralMoments {
    pub mean: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub m6: f64,
}

/// The law `pₙ = aₙ² eⁿᵗ / H(t)` restricted to a finite index window.
#[derive(Clone, Debug)]
pub struct TiltedWindow {
    t: f64,
    start: u64,
    p: Vec<f64>,
    log_h: f64,
    tail_mass_bound: f64,
    moments: CentralMoments,
    stride: u64,
    // Non-zero atoms only: index, offset from the mean, probability.
    support_n: Vec<f64>,
    support_d: Vec<f64>,
    support_p: Vec<f64>,
}

pub(super) struct Scan {
    pub w: Vec<f64>,
    pub log_total: f64,
    pub log_upper_tail: f64,
}

/// Scans `wₙ = log aₙ² + n t` from `n = 0` until the remaining upper tail is
/// certified below `tail_eps / 4` of the scanned mass.
///
/// The certificate uses the chord slope `ρ` through the last two non-zero
/// terms (clamped below by `t` when `t_G = 0`) and bounds the tail by the
/// geometric series with ratio `e^ρ`.
pub(super) fn scan(model: &CoefficientModel, t: f64, opts: &WindowOptions) -> Result<Scan> {
    if !(opts.tail_eps > 0.0 && opts.tail_eps < 1e-6) {
        return Err(Error::InvalidArgument(format!(
            "tail_eps = {} must lie in (0, 1e-6)",
            opts.tail_eps
        )));
    }
    if t.is_nan() || t >= model.t_g() || t == f64::INFINITY {
        return Err(Error::OutsideDomain { t, t_g: model.t_g() });
    }
    let hard_end = model
        .max_index()
        .map_or(opts.max_index, |m| m.min(opts.max_index));
    let log_target = (opts.tail_eps / 4.0).ln();
    let mut w: Vec<f64> = Vec::new();
    let mut total = LogSumExp::default();
    let mut last_two: [Option<usize>; 2] = [None, None];
    let mut chunk = 256u64;
    loop {
        let lo = w.len() as u64;
        if lo > hard_end {
            if model.max_index().is_some_and(|m| m <= opts.max_index) {
                return finish(w, total, f64::NEG_INFINITY);
            }
            return Err(Error::WindowTooLarge {
                t,
                limit: opts.max_index as usize,
            });
        }
        let hi = (lo + chunk).min(hard_end + 1);
        for (i, lc) in model.log_coeffs(lo, hi).into_iter().enumerate() {
            let n = lo + i as u64;
            let v = if lc == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                lc + n as f64 * t
            };
            if v.is_finite() {
                last_two = [last_two[1], Some(n as usize)];
            }
            total.push(v);
            w.push(v);
        }
        chunk = (chunk * 2).min(1 << 16);
        if let [Some(i), Some(j)] = last_two {
            let mut rho = (w[j] - w[i]) / (j - i) as f64;
            if model.t_g() == 0.0 {
                rho = rho.max(t);
            }
            if rho < 0.0 {
                let end = (w.len() - 1) as f64;
                let log_tail = w[j] + rho * (end + 1.0 - j as f64) - (-rho.exp_m1()).ln();
                if log_tail - total.value() <= log_target {
                    return finish(w, total, log_tail);
                }
            }
        }
    }
}

fn finish(w: Vec<f64>, total: LogSumExp, log_upper_tail: f64) -> Result<Scan> {
    let log_total = total.value();
    if log_total == f64::NEG_INFINITY {
        return Err(Error::EmptyModel);
    }
    Ok(Scan {
        w,
        log_total,
        log_upper_tail,
    })
}

/// Builds the tilted window at `t`.
///
/// The window keeps every index except an initial and a final run whose
/// masses are each at most `tail_eps / 4`; together with the certified
/// tail beyond the scan, at most `tail_eps` of the mass is excluded.
/// `log_h` is the log-sum-exp over the window, so `Σ p = 1` up to rounding.
pub fn tilted_window(
    model: &CoefficientModel,
    t: f64,
    opts: &WindowOptions,
) -> Result<TiltedWindow> {
    let scan = scan(model, t, opts)?;
    let quarter = opts.tail_eps / 4.0;
    let mass: Vec<f64> = scan.w.iter().map(|v| (v - scan.log_total).exp()).collect();

    let mut lo = 0usize;
    let mut below = 0.0;
    while lo < mass.len() && below + mass[lo] <= quarter {
        below += mass[lo];
        lo += 1;
    }
    let mut hi = mass.len() - 1;
    let mut above = 0.0;
    while hi > lo && above + mass[hi] <= quarter {
        above += mass[hi];
        hi -= 1;
    }
    while mass[lo] == 0.0 && lo < hi {
        lo += 1;
    }

    let mut lse = LogSumExp::default();
    for &v in &scan.w[lo..=hi] {
        lse.push(v);
    }
    let log_h = lse.value();
    let p: Vec<f64> = scan.w[lo..=hi].iter().map(|v| (v - log_h).exp()).collect();
    let tail_mass_bound = below + above + (scan.log_upper_tail - scan.log_total).exp();
    Ok(TiltedWindow::from_parts(t, lo as u64, p, log_h, tail_mass_bound))
}

impl TiltedWindow {
    fn from_parts(t: f64, start: u64, p: Vec<f64>, log_h: f64, tail_mass_bound: f64) -> Self {
        let first = p.iter().position(|&x| x > 0.0).unwrap_or(0);
        let mut stride = 0u64;
        for (k, &x) in p.iter().enumerate().skip(first) {
            if x > 0.0 {
                stride = gcd(stride, (k - first) as u64);
            }
        }
        // Offsets are taken from the mode so that `n − A` keeps full relative
        // accuracy when the mode carries almost all of the mass.
        let mode = p
            .iter()
            .enumerate()
            .fold(0, |best, (k, &x)| if x > p[best] { k } else { best });
        let offset: KahanSum = p
            .iter()
            .enumerate()
            .map(|(k, &x)| (k as f64 - mode as f64) * x)
            .collect();
        let offset = offset.value();
        let mean = (start + mode as u64) as f64 + offset;

        let mut support_n = Vec::new();
        let mut support_d = Vec::new();
        let mut support_p = Vec::new();
        for (k, &x) in p.iter().enumerate() {
            if x > 0.0 {
                let n = start + k as u64;
                support_n.push(n as f64);
                support_d.push((k as f64 - mode as f64) - offset);
                support_p.push(x);
            }
        }
        let mut sums = [KahanSum::default(); 5];
        for (&d, &x) in support_d.iter().zip(&support_p) {
            let d2 = d * d;
            sums[0].add(x * d2);
            sums[1].add(x * d2 * d);
            sums[2].add(x * d2 * d2);
            sums[3].add(x * d2 * d2 * d);
            sums[4].add(x * d2 * d2 * d2);
        }
        let moments = CentralMoments {
            mean,
            m2: sums[0].value().max(0.0),
            m3: sums[1].value(),
            m4: sums[2].value(),
            m5: sums[3].value(),
            m6: sums[4].value(),
        };
        Self {
            t,
            start,
            p,
            log_h,
            tail_mass_bound,
            moments,
            stride: stride.max(1),
            support_n,
            support_d,
            support_p,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// First index of the window.
    pub fn start(&self) -> u64 {
        self.start
    }

    /// Last index of the window (inclusive).
    pub fn end(&self) -> u64 {
        self.start + self.p.len() as u64 - 1
    }

    /// `pₙ` for `n = start() ..= end()`.
    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn prob(&self, n: u64) -> f64 {
        n.checked_sub(self.start)
            .and_then(|k| self.p.get(k as usize))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn log_h(&self) -> f64 {
        self.log_h
    }

    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    /// Greatest common divisor of the gaps between non-zero atoms;
    /// the characteristic function has period `2π / stride`.
    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn moments(&self) -> CentralMoments {
        self.moments
    }

    pub fn stats(&self) -> WindowStats {
        WindowStats {
            a: self.moments.mean,
            b: self.moments.m2,
        }
    }

    /// Non-zero atoms as `(n, n − A, pₙ)` columns.
    pub fn support(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.support_n, &self.support_d, &self.support_p)
    }

    /// `φ(θ) = E[e^{iθX}]` and `m(θ) = E[(X − A) e^{iθX}]`.
    pub fn char_moments(&self, theta: f64) -> (Complex64, Complex64) {
        let (phi_c, m_c) = self.centered_char_moments(theta);
        let rot = Complex64::cis(theta * self.moments.mean);
        (phi_c * rot, m_c * rot)
    }

    /// `φ` and `m` multiplied by `e^{−iθA}`; same moduli, no large phases.
    pub fn centered_char_moments(&self, theta: f64) -> (Complex64, Complex64) {
        let mut phi = Complex64::new(0.0, 0.0);
        let mut m = Complex64::new(0.0, 0.0);
        for (&d, &x) in self.support_d.iter().zip(&self.support_p) {
            let (s, c) = (theta * d).sin_cos();
            phi += Complex64::new(x * c, x * s);
            m += Complex64::new(x * d * c, x * d * s);
        }
        (phi, m)
    }

    /// `E[X e^{iθ(X − A)}]`, so that `|H'(t+iθ)| / H'(t)` is its modulus over `A`.
    pub fn centered_first_moment(&self, theta: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((&n, &d), &x) in self.support_n.iter().zip(&self.support_d).zip(&self.support_p) {
            acc += Complex64::cis(theta * d) * (n * x);
        }
        acc
    }

    /// Principal `log E[e^{τ(X − A)}]` for complex `τ`, evaluated with a
    /// shift so that large real parts do not overflow.
    pub fn log_centered_mgf(&self, tau: Complex64) -> Complex64 {
        let shift = self
            .support_d
            .iter()
            .map(|&d| tau.re * d)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut acc = Complex64::new(0.0, 0.0);
        for (&d, &x) in self.support_d.iter().zip(&self.support_p) {
            acc += Complex64::new(0.0, tau.im * d).exp() * (x * (tau.re * d - shift).exp());
        }
        acc.ln() + shift
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_window_is_a_point_mass() {
        let w = CoefficientModel::monomial(3).window(5.0).unwrap();
        assert_eq!(w.start(), 3);
        assert_eq!(w.p(), &[1.0]);
        assert_eq!(w.log_h(), 15.0);
        assert_eq!(w.stats(), WindowStats { a: 3.0, b: 0.0 });
    }

    #[test]
    fn two_term_window() {
        let w = CoefficientModel::two_term(0, 1, 1.0, 1.0)
            .unwrap()
            .window(0.0)
            .unwrap();
        assert_eq!(w.p(), &[0.5, 0.5]);
        assert!((w.log_h() - 2f64.ln()).abs() < 1e-15);
        let s = w.stats();
        assert!((s.a - 0.5).abs() < 1e-15 && (s.b - 0.25).abs() < 1e-15);
    }

    #[test]
    fn stride_of_sparse_support() {
        let w = CoefficientModel::two_term(2, 8, 1.0, 3.0)
            .unwrap()
            .window(0.0)
            .unwrap();
        assert_eq!(w.stride(), 6);
    }

    #[test]
    fn rejects_points_outside_domain() {
        let g = CoefficientModel::hyperbolic(1.0).unwrap();
        assert!(matches!(g.window(0.0), Err(Error::OutsideDomain { .. })));
        assert!(matches!(
            tilted_window(&CoefficientModel::exp(), 0.0, &WindowOptions::with_tail_eps(0.1)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn resource_guard() {
        let opts = WindowOptions {
            tail_eps: 1e-12,
            max_index: 1000,
        };
        assert!(matches!(
            tilted_window(&CoefficientModel::exp(), 9.0, &opts),
            Err(Error::WindowTooLarge { .. })
        ));
    }
}
