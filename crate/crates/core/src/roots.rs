//! Counting zeros of a complex polynomial inside the unit disk.
//!
//! The primary route is the argument principle: the polynomial is sampled
//! at `M` roots of unity with one FFT and the phase increments are summed.
//! The eigenvalues of the balanced companion matrix give an independent
//! count for moderate degrees.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::numeric::gcd;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountOptions {
    /// Smallest number of contour points.
    pub min_points: usize,
    /// Give up when stabilization needs more points than this.
    pub max_points: usize,
    /// Accepted distance of `total phase / 2π` from an integer.
    pub integer_tol: f64,
    /// Largest degree for which the eigenvalue count is computed.
    pub oracle_cap: usize,
    /// Cross-check every count against the eigenvalue count (when the
    /// degree is within `oracle_cap`).
    pub verify_with_oracle: bool,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            min_points: 64,
            max_points: 1 << 20,
            integer_tol: 1e-6,
            oracle_cap: 512,
            verify_with_oracle: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CountFailure {
    /// All coefficients vanish.
    ZeroPolynomial,
    /// The phase did not stabilize with `points` contour points; a zero
    /// sits too close to the unit circle.
    Unstable { points: usize },
    /// The argument principle and the eigenvalue count disagree.
    OracleMismatch { winding: u64, oracle: u64 },
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// The polynomial `Σ cₖ wᵏ` written as `w^low · R(w^stride)`.
struct Reduced {
    low: u64,
    stride: u64,
    coeffs: Vec<Complex64>,
}

fn reduce(coeffs: &[Complex64]) -> Option<Reduced> {
    let nonzero: Vec<usize> = (0..coeffs.len())
        .filter(|&k| coeffs[k] != Complex64::new(0.0, 0.0))
        .collect();
    let low = *nonzero.first()?;
    let stride = nonzero
        .iter()
        .fold(0u64, |g, &k| gcd(g, (k - low) as u64))
        .max(1);
    let high = *nonzero.last()?;
    let coeffs = (low..=high)
        .step_by(stride as usize)
        .map(|k| coeffs[k])
        .collect();
    Some(Reduced {
        low: low as u64,
        stride,
        coeffs,
    })
}

/// Number of zeros of `Σ cₖ wᵏ` in `|w| < 1` by the argument principle.
///
/// Returns the count and the number of contour points that were needed.
pub fn winding_number(
    coeffs: &[Complex64],
    opts: &CountOptions,
) -> Result<(u64, usize), CountFailure> {
    let r = reduce(coeffs).ok_or(CountFailure::ZeroPolynomial)?;
    let (w, points) = winding_reduced(&r.coeffs, opts)?;
    Ok((r.low + r.stride * w, points))
}

fn winding_reduced(q: &[Complex64], opts: &CountOptions) -> Result<(u64, usize), CountFailure> {
    let degree = q.len() - 1;
    if degree == 0 {
        return Ok((0, 0));
    }
    let mut m = opts.min_points.max(4 * (degree + 1)).next_power_of_two();
    while m <= opts.max_points {
        if let Some(w) = winding_at(q, m, opts.integer_tol) {
            return Ok((w, m));
        }
        m *= 2;
    }
    Err(CountFailure::Unstable {
        points: opts.max_points,
    })
}

fn winding_at(q: &[Complex64], m: usize, integer_tol: f64) -> Option<u64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (k, c) in q.iter().enumerate() {
        buf[k % m] += c;
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(m).process(&mut buf));
    if buf.iter().any(|v| v.norm_sqr() == 0.0 || !v.is_finite()) {
        return None;
    }
    let mut total = 0.0;
    for j in 0..m {
        let next = buf[(j + 1) % m];
        let step = (next * buf[j].conj()).arg();
        if step.abs() >= FRAC_PI_2 {
            return None;
        }
        total += step;
    }
    let turns = total / TAU;
    let rounded = turns.round();
    ((turns - rounded).abs() <= integer_tol && rounded >= 0.0).then_some(rounded as u64)
}

/// Number of eigenvalues of the companion matrix with modulus `≤ 1`, or
/// `None` if the eigenvalue iteration fails.
pub fn companion_root_count(coeffs: &[Complex64]) -> Option<u64> {
    let r = reduce(coeffs)?;
    let count = companion_reduced(&r.coeffs)?;
    Some(r.low + r.stride * count)
}

fn companion_reduced(q: &[Complex64]) -> Option<u64> {
    let d = q.len() - 1;
    if d == 0 {
        return Some(0);
    }
    let lead = q[d];
    let mut c = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        c[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..d {
        c[(i, d - 1)] = -q[i] / lead;
    }
    balance(&mut c);
    let schur = Schur::try_new(c, f64::EPSILON, 100 * d.max(10))?;
    let eig = schur.eigenvalues()?;
    Some(eig.iter().filter(|z| z.norm() <= 1.0).count() as u64)
}

/// Parlett–Reinsch diagonal similarity scaling with radix 2.
fn balance(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += a[(j, i)].l1_norm();
                    row += a[(i, j)].l1_norm();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut c = col;
            while c < row / 2.0 {
                f *= 2.0;
                c *= 4.0;
            }
            while c >= row * 2.0 {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + row) / f < 0.95 * total {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Zero count in `|w| < 1`, optionally cross-checked against the
/// eigenvalue count.
pub fn count_zeros_unit_disk(coeffs: &[Complex64], opts: &CountOptions) -> Result<u64, CountFailure> {
    let r = reduce(coeffs).ok_or(CountFailure::ZeroPolynomial)?;
    let (w, _) = winding_reduced(&r.coeffs, opts)?;
    if opts.verify_with_oracle && r.coeffs.len() - 1 <= opts.oracle_cap {
        if let Some(o) = companion_reduced(&r.coeffs) {
            if o != w {
                return Err(CountFailure::OracleMismatch {
                    winding: r.low + r.stride * w,
                    oracle: r.low + r.stride * o,
                });
            }
        }
    }
    Ok(r.low + r.stride * w)
}
