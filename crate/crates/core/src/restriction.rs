//! Partition of the `t`-axis by `B(t_ℓ) = ℓ⁶` and the lacunary restriction
//! that keeps, inside each block of indices `[A(t_ℓ), A(t_{ℓ+1}))`, only the
//! multiples of `ℓ³`.

use std::sync::Arc;

use serde::Serialize;

use crate::covariance::{write_coefficients, CoefficientModel, KeptMask, MaskSegment};
use crate::error::{Error, Result};

const BISECTION_STEPS: usize = 200;
const PROBES_PER_INTERVAL: usize = 8;

pub const DEFAULT_ELL_MIN: u64 = 2;
pub const DEFAULT_C1: f64 = 20.0;

/// `t_ℓ` for `ℓ = 1 ..= ell_max + 1` together with the long/short split of
/// `T_ℓ = [t_ℓ, t_{ℓ+1})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalPartition {
    pub ell_max: u64,
    /// `t[ℓ − 1] = t_ℓ`.
    pub t: Vec<f64>,
}

impl IntervalPartition {
    pub fn t_ell(&self, ell: u64) -> f64 {
        self.t[ell as usize - 1]
    }

    /// `|T_ℓ| = t_{ℓ+1} − t_ℓ`.
    pub fn length(&self, ell: u64) -> f64 {
        self.t_ell(ell + 1) - self.t_ell(ell)
    }

    /// `|T_ℓ| ≥ 8/ℓ²`.
    pub fn is_long(&self, ell: u64) -> bool {
        self.length(ell) >= 8.0 / (ell * ell) as f64
    }

    /// `[t_ℓ + 2/ℓ², t_{ℓ+1} − 2/ℓ²]` for long intervals.
    pub fn interior(&self, ell: u64) -> Option<(f64, f64)> {
        let pad = 2.0 / (ell * ell) as f64;
        self.is_long(ell)
            .then(|| (self.t_ell(ell) + pad, self.t_ell(ell + 1) - pad))
    }

    /// Measure of `T_ℓ` outside its interior.
    pub fn excluded_measure(&self, ell: u64) -> f64 {
        match self.interior(ell) {
            Some((a, b)) => self.length(ell) - (b - a),
            None => self.length(ell),
        }
    }

    /// The `ℓ` whose interior contains `t`.
    pub fn interior_containing(&self, t: f64) -> Option<u64> {
        (1..=self.ell_max).find(|&ell| self.interior(ell).is_some_and(|(a, b)| a <= t && t <= b))
    }
}

fn b_at(model: &CoefficientModel, t: f64) -> Result<f64> {
    Ok(model.stats(t)?.b)
}

/// Largest possible `B` for a finitely supported model.
fn support_spread(model: &CoefficientModel) -> Option<f64> {
    let max = model.max_index()?;
    let coeffs = model.log_coeffs(0, max + 1);
    let lo = coeffs.iter().position(|v| v.is_finite())?;
    let hi = coeffs.iter().rposition(|v| v.is_finite())?;
    let w = (hi - lo) as f64;
    Some(w * w / 4.0)
}

/// Solves `B(t) = target` by bracketing and bisection.
pub fn solve_b(model: &CoefficientModel, target: f64) -> Result<f64> {
    if let Some(max_b) = support_spread(model) {
        if target > max_b {
            return Err(Error::BoundedVariance { target, max_b });
        }
    }
    let (mut lo, mut hi);
    if model.is_entire() {
        lo = 0.0;
        let mut step = 1.0;
        while b_at(model, lo)? >= target {
            lo -= step;
            step *= 2.0;
            if lo < -1e4 {
                return Err(Error::InvalidArgument(format!(
                    "B(t) stays above {target} as t decreases"
                )));
            }
        }
        hi = lo.max(0.0) + 1.0;
        let mut step = 1.0;
        let mut best = 0.0f64;
        loop {
            let b = b_at(model, hi)?;
            best = best.max(b);
            if b >= target {
                break;
            }
            lo = hi;
            step *= 2.0;
            hi += step;
            if hi > 1e6 {
                return Err(Error::BoundedVariance { target, max_b: best });
            }
        }
    } else {
        lo = -1.0;
        while b_at(model, lo)? >= target {
            lo *= 2.0;
            if lo < -1e4 {
                return Err(Error::InvalidArgument(format!(
                    "B(t) stays above {target} as t decreases"
                )));
            }
        }
        hi = -0.5;
        let mut best = 0.0f64;
        loop {
            let b = b_at(model, hi)?;
            best = best.max(b);
            if b >= target {
                break;
            }
            lo = hi;
            hi *= 0.5;
            if hi > -1e-12 {
                return Err(Error::BoundedVariance { target, max_b: best });
            }
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if b_at(model, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Computes `t_1 < … < t_{ell_max+1}` with `B(t_ℓ) = ℓ⁶`, after checking
/// that `B` does not decrease on a probe grid over that range.
pub fn interval_partition(model: &CoefficientModel, ell_max: u64) -> Result<IntervalPartition> {
    if ell_max < 2 {
        return Err(Error::InvalidArgument(format!("ell_max = {ell_max} must be at least 2")));
    }
    let t = (1..=ell_max + 1)
        .map(|ell| solve_b(model, (ell as f64).powi(6)))
        .collect::<Result<Vec<f64>>>()?;
    for pair in t.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mut prev = (a, b_at(model, a)?);
        for k in 1..=PROBES_PER_INTERVAL {
            let s = a + (b - a) * k as f64 / PROBES_PER_INTERVAL as f64;
            let bs = b_at(model, s)?;
            if bs < prev.1 * (1.0 - 1e-9) {
                return Err(Error::NotIncreasing {
                    t0: prev.0,
                    b0: prev.1,
                    t1: s,
                    b1: bs,
                });
            }
            prev = (s, bs);
        }
    }
    Ok(IntervalPartition { ell_max, t })
}

/// One block of the restriction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RestrictionBlock {
    pub ell: u64,
    /// Spacing `p_ℓ = ℓ³`.
    pub p: u64,
    /// `s_ℓ = c₁ √(log ℓ)`.
    pub s: f64,
    /// `[round A(t_ℓ), round A(t_{ℓ+1}))`.
    pub lo: u64,
    pub hi: u64,
    pub kept: u64,
}

/// Blocks `ℓ_min ..= ℓ_max` and the resulting kept-index mask.
///
/// Indices below the first block are all kept; indices at or beyond the
/// end of the last block are dropped, so the restricted series is a
/// polynomial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictionPlan {
    pub ell_min: u64,
    pub c1: f64,
    pub blocks: Vec<RestrictionBlock>,
    #[serde(skip)]
    pub mask: Arc<KeptMask>,
}

impl RestrictionPlan {
    /// `δₙ`.
    pub fn keeps(&self, n: u64) -> bool {
        self.mask.contains(n)
    }

    pub fn block(&self, ell: u64) -> Option<&RestrictionBlock> {
        self.blocks.iter().find(|b| b.ell == ell)
    }

    /// Last index that can be kept.
    pub fn max_index(&self) -> u64 {
        self.mask.max_index().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestrictionOptions {
    pub ell_min: u64,
    pub c1: f64,
}

impl Default for RestrictionOptions {
    fn default() -> Self {
        Self {
            ell_min: DEFAULT_ELL_MIN,
            c1: DEFAULT_C1,
        }
    }
}

pub fn plan(
    model: &CoefficientModel,
    partition: &IntervalPartition,
    opts: &RestrictionOptions,
) -> Result<RestrictionPlan> {
    if opts.ell_min < 1 || opts.ell_min > partition.ell_max {
        return Err(Error::InvalidArgument(format!(
            "ell_min = {} must lie in [1, {}]",
            opts.ell_min, partition.ell_max
        )));
    }
    let mut blocks = Vec::new();
    let mut segments = Vec::new();
    for ell in opts.ell_min..=partition.ell_max {
        let lo = model.stats(partition.t_ell(ell))?.a.round() as u64;
        let hi = model.stats(partition.t_ell(ell + 1))?.a.round() as u64;
        let p = ell * ell * ell;
        let seg = MaskSegment { lo, hi, step: p };
        let kept = KeptMask::new(vec![seg])?.count_in(lo, hi);
        if kept == 0 {
            return Err(Error::EmptyBlock { ell, p, lo, hi });
        }
        if ell == opts.ell_min && lo > 0 {
            segments.push(MaskSegment { lo: 0, hi: lo, step: 1 });
        }
        segments.push(seg);
        blocks.push(RestrictionBlock {
            ell,
            p,
            s: opts.c1 * (ell as f64).ln().sqrt(),
            lo,
            hi,
            kept,
        });
    }
    Ok(RestrictionPlan {
        ell_min: opts.ell_min,
        c1: opts.c1,
        blocks,
        mask: Arc::new(KeptMask::new(segments)?),
    })
}

/// The restricted model `G̃ = Σ δₙ aₙ² zⁿ` and its plan.
pub fn restrict(
    model: &CoefficientModel,
    partition: &IntervalPartition,
    opts: &RestrictionOptions,
) -> Result<(CoefficientModel, RestrictionPlan)> {
    let plan = plan(model, partition, opts)?;
    Ok((restrict_with_plan(model, &plan), plan))
}

pub fn restrict_with_plan(model: &CoefficientModel, plan: &RestrictionPlan) -> CoefficientModel {
    model.restricted(plan.mask.clone())
}

/// Writes the restricted model as a coefficient file.
pub fn export(
    restricted: &CoefficientModel,
    plan: &RestrictionPlan,
    out: impl std::io::Write,
) -> std::io::Result<()> {
    write_coefficients(restricted, plan.max_index(), out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimilarityRow {
    pub t: f64,
    pub a_ratio: f64,
    pub b_ratio: f64,
    /// `ℓ` with `t ∈ T̊_ℓ`; `None` flags a point outside every interior.
    pub ell: Option<u64>,
}

/// `A` and `B` of the restricted model relative to the original.
pub fn similarity_report(
    model: &CoefficientModel,
    restricted: &CoefficientModel,
    partition: &IntervalPartition,
    t_values: &[f64],
) -> Result<Vec<SimilarityRow>> {
    t_values
        .iter()
        .map(|&t| {
            let s0 = model.stats(t)?;
            let s1 = restricted.stats(t)?;
            Ok(SimilarityRow {
                t,
                a_ratio: s1.a / s0.a,
                b_ratio: s1.b / s0.b,
                ell: partition.interior_containing(t),
            })
        })
        .collect()
}
