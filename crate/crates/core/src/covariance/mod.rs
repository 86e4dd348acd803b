//! Covariance functions `G(z) = Σ aₙ² zⁿ`, stored through their
//! log-coefficients `log aₙ²`.
//!
//! Everything downstream works with the exponential parameterization
//! `H(t) = G(eᵗ)` and with the tilted law `pₙ(t) = aₙ² eⁿᵗ / H(t)`, so the
//! model only ever has to answer "what is `log aₙ²`?" for a run of indices.
//! Families whose coefficients are defined by a recurrence keep a shared,
//! lazily grown table; a model is otherwise immutable and cheap to clone.

mod central;
mod family;
mod file;
mod window;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use central::{central_index, CentralIndexInfo, DEFAULT_GAMMA};
pub use family::ReferenceForms;
pub use file::{read_coefficient_file, write_coefficients};
pub use window::{
    tilted_window, CentralMoments, TiltedWindow, WindowOptions, WindowStats, DEFAULT_TAIL_EPS,
};

use crate::error::{Error, Result};
use family::Source;

/// A set of kept Taylor indices, the `δₙ ∈ {0, 1}` of a series restriction.
///
/// `n` is kept iff it lies in one of the segments `[lo, hi)` and is divisible
/// by that segment's step. Segments are disjoint and sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeptMask {
    segments: Vec<MaskSegment>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaskSegment {
    pub lo: u64,
    pub hi: u64,
    pub step: u64,
}

impl KeptMask {
    pub fn new(mut segments: Vec<MaskSegment>) -> Result<Self> {
        segments.retain(|s| s.hi > s.lo);
        segments.sort_by_key(|s| s.lo);
        for s in &segments {
            if s.step == 0 {
                return Err(Error::InvalidArgument("mask step must be positive".into()));
            }
        }
        for pair in segments.windows(2) {
            if pair[0].hi > pair[1].lo {
                return Err(Error::InvalidArgument(format!(
                    "mask segments [{}, {}) and [{}, {}) overlap",
                    pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[MaskSegment] {
        &self.segments
    }

    pub fn contains(&self, n: u64) -> bool {
        let idx = self.segments.partition_point(|s| s.hi <= n);
        match self.segments.get(idx) {
            Some(s) => s.lo <= n && n % s.step == 0,
            None => false,
        }
    }

    /// Largest index that can be kept, if any.
    pub fn max_index(&self) -> Option<u64> {
        self.segments.iter().rev().find_map(|s| {
            let last = s.hi - 1;
            let last = last - last % s.step;
            (last >= s.lo).then_some(last)
        })
    }

    /// Number of kept indices inside `[lo, hi)`.
    pub fn count_in(&self, lo: u64, hi: u64) -> u64 {
        self.segments
            .iter()
            .map(|s| {
                let a = s.lo.max(lo);
                let b = s.hi.min(hi);
                if b <= a {
                    return 0;
                }
                let first = a.div_ceil(s.step);
                let last = (b - 1) / s.step;
                last.saturating_sub(first) + u64::from(last >= first)
            })
            .sum()
    }
}

/// A covariance function `G` given by its Taylor log-coefficients.
#[derive(Clone)]
pub struct CoefficientModel {
    tag: String,
    params: BTreeMap<String, f64>,
    t_g: f64,
    max_index: Option<u64>,
    source: Source,
    masks: Vec<Arc<KeptMask>>,
}

impl fmt::Debug for CoefficientModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientModel")
            .field("tag", &self.tag)
            .field("params", &self.params)
            .field("t_g", &self.t_g)
            .field("max_index", &self.max_index)
            .field("masks", &self.masks.len())
            .finish()
    }
}

impl CoefficientModel {
    /// Builds one of the builtin families from a name and a real parameter map.
    ///
    /// Recognised names: `exp`, `mittag_leffler` (`alpha`), `double_exp`,
    /// `lindelof` (`alpha`), `unit_disk_exp` (`alpha`), `hyperbolic` (`L`),
    /// `two_term` (`n`, `m`, optional `cn`, `cm`), `monomial` (`k`).
    /// Coefficient files go through [`CoefficientModel::from_file`].
    pub fn family(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        family::make_family(name, params)
    }

    pub fn exp() -> Self {
        family::exp()
    }

    pub fn mittag_leffler(alpha: f64) -> Result<Self> {
        family::make_family("mittag_leffler", &BTreeMap::from([("alpha".into(), alpha)]))
    }

    pub fn double_exp() -> Self {
        family::double_exp()
    }

    pub fn lindelof(alpha: f64) -> Result<Self> {
        family::make_family("lindelof", &BTreeMap::from([("alpha".into(), alpha)]))
    }

    pub fn unit_disk_exp(alpha: f64) -> Result<Self> {
        family::make_family("unit_disk_exp", &BTreeMap::from([("alpha".into(), alpha)]))
    }

    pub fn hyperbolic(l: f64) -> Result<Self> {
        family::make_family("hyperbolic", &BTreeMap::from([("L".into(), l)]))
    }

    /// `G(z) = cn·zⁿ + cm·zᵐ`.
    pub fn two_term(n: u64, m: u64, cn: f64, cm: f64) -> Result<Self> {
        family::make_family(
            "two_term",
            &BTreeMap::from([
                ("n".into(), n as f64),
                ("m".into(), m as f64),
                ("cn".into(), cn),
                ("cm".into(), cm),
            ]),
        )
    }

    pub fn monomial(k: u64) -> Self {
        family::monomial(k)
    }

    /// A finitely supported model from explicit `log aₙ²` values
    /// (`-inf` for vanishing coefficients).
    pub fn from_log_coeffs(tag: &str, log_coeffs: Vec<f64>) -> Result<Self> {
        family::table(tag, log_coeffs)
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        read_coefficient_file(path.as_ref())
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// `log R_G`: either `0` (unit disk) or `+∞` (entire).
    pub fn t_g(&self) -> f64 {
        self.t_g
    }

    pub fn is_entire(&self) -> bool {
        self.t_g.is_infinite()
    }

    /// Largest index with a possibly non-zero coefficient, for finitely
    /// supported models.
    pub fn max_index(&self) -> Option<u64> {
        self.max_index
    }

    /// Closed-form `a(r)`, `b(r)` when the family has them.
    pub fn reference_forms(&self) -> Option<ReferenceForms> {
        if self.masks.is_empty() {
            self.source.reference_forms()
        } else {
            None
        }
    }

    pub fn log_coeff(&self, n: u64) -> f64 {
        self.log_coeffs(n, n + 1)[0]
    }

    /// `log aₙ²` for `n ∈ [lo, hi)`.
    pub fn log_coeffs(&self, lo: u64, hi: u64) -> Vec<f64> {
        let mut out = self.source.log_coeffs(lo, hi);
        if let Some(max) = self.max_index {
            for (i, v) in out.iter_mut().enumerate() {
                if lo + i as u64 > max {
                    *v = f64::NEG_INFINITY;
                }
            }
        }
        if !self.masks.is_empty() {
            for (i, v) in out.iter_mut().enumerate() {
                let n = lo + i as u64;
                if !self.masks.iter().all(|m| m.contains(n)) {
                    *v = f64::NEG_INFINITY;
                }
            }
        }
        out
    }

    /// The Taylor series restriction `Σ δₙ aₙ² zⁿ` with `δ` given by `mask`.
    ///
    /// Restricting twice with the same mask is the same as restricting once.
    pub fn restricted(&self, mask: Arc<KeptMask>) -> Self {
        let mut out = self.clone();
        if !out.masks.iter().any(|m| **m == *mask) {
            out.masks.push(mask);
        }
        let mask_max = out.masks.iter().filter_map(|m| m.max_index()).min();
        out.max_index = match (self.max_index, mask_max) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if !self.tag.starts_with("restricted(") {
            out.tag = format!("restricted({})", self.tag);
        }
        out
    }

    pub fn masks(&self) -> &[Arc<KeptMask>] {
        &self.masks
    }

    /// Window of the tilted law at `t` with default options.
    pub fn window(&self, t: f64) -> Result<TiltedWindow> {
        tilted_window(self, t, &WindowOptions::default())
    }

    pub fn stats(&self, t: f64) -> Result<WindowStats> {
        Ok(self.window(t)?.stats())
    }
}
