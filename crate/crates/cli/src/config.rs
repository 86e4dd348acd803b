//! Experiment configuration: a TOML file of `key = value` lines grouped in
//! sections.
//!
//! ```toml
//! [model]
//! family = "exp"            # or: path = "coeffs.txt"
//! [model.params]
//! alpha = 1.0
//! [model.restrict]          # optional lacunary restriction
//! ell_max = 3
//!
//! [grid]
//! r = [1.0, 2.0, 4.0]       # or: t = [...]
//!
//! [tolerances]
//! quad = 1e-9
//! tail_eps = 1e-12
//!
//! [mc]
//! samples = 20000
//! seed = 7
//!
//! [params]
//! c_g = 2.5
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gaf_zeros::covariance::DEFAULT_GAMMA;
use gaf_zeros::restriction::{
    interval_partition, restrict, IntervalPartition, RestrictionOptions, RestrictionPlan, DEFAULT_C1,
};
use gaf_zeros::variance::{DEFAULT_C_G, DEFAULT_EPSILON, DEFAULT_TOL};
use gaf_zeros::{CoefficientModel, WindowOptions};
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub params: ParamSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Tabulated `log aₙ²` file, instead of `family`.
    pub path: Option<PathBuf>,
    pub restrict: Option<RestrictSection>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictSection {
    pub ell_max: u64,
    #[serde(default = "default_ell_min")]
    pub ell_min: u64,
}

fn default_ell_min() -> u64 {
    RestrictionOptions::default().ell_min
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub r: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the variance quadrature.
    #[serde(default = "default_quad")]
    pub quad: f64,
    #[serde(default = "default_tail_eps")]
    pub tail_eps: f64,
    #[serde(default = "default_failure_rate")]
    pub mc_failure_rate: f64,
}

fn default_quad() -> f64 {
    DEFAULT_TOL
}
fn default_tail_eps() -> f64 {
    WindowOptions::default().tail_eps
}
fn default_failure_rate() -> f64 {
    1e-3
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad: default_quad(),
            tail_eps: default_tail_eps(),
            mc_failure_rate: default_failure_rate(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSection {
    #[serde(default = "default_c_g")]
    pub c_g: f64,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
}

fn default_c_g() -> f64 {
    DEFAULT_C_G
}
fn default_eps() -> f64 {
    DEFAULT_EPSILON
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_c1() -> f64 {
    DEFAULT_C1
}

impl Default for ParamSection {
    fn default() -> Self {
        Self {
            c_g: default_c_g(),
            epsilon: default_eps(),
            gamma: default_gamma(),
            c1: default_c1(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

pub struct Restricted {
    pub model: CoefficientModel,
    pub partition: IntervalPartition,
    pub plan: RestrictionPlan,
}

pub struct Models {
    pub base: CoefficientModel,
    pub restricted: Option<Restricted>,
}

impl Models {
    /// The model the grid is evaluated on.
    pub fn target(&self) -> &CoefficientModel {
        self.restricted.as_ref().map_or(&self.base, |r| &r.model)
    }
}

/// One grid point in both parameterizations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub t: f64,
    pub r: f64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // Coefficient files are resolved relative to the config.
        if let (Some(p), Some(base)) = (cfg.model.path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// The base model and, when requested, its restriction.
    pub fn build_model(&self) -> Result<Models, RunError> {
        let base = match (&self.model.family, &self.model.path) {
            (Some(f), None) => CoefficientModel::family(f, &self.model.params),
            (None, Some(p)) => CoefficientModel::from_file(p),
            _ => {
                return Err(RunError::Validation(
                    "[model] needs exactly one of `family` and `path`".into(),
                ))
            }
        }
        .map_err(|e| RunError::Validation(e.to_string()))?;
        let restricted = match &self.model.restrict {
            None => None,
            Some(rs) => {
                if rs.ell_max < 2 || rs.ell_min < 1 || rs.ell_min > rs.ell_max {
                    return Err(RunError::Validation(format!(
                        "[model.restrict] needs 1 <= ell_min <= ell_max and ell_max >= 2, got {} and {}",
                        rs.ell_min, rs.ell_max
                    )));
                }
                let partition = interval_partition(&base, rs.ell_max)?;
                let opts = RestrictionOptions {
                    ell_min: rs.ell_min,
                    c1: self.params.c1,
                };
                let (model, plan) = restrict(&base, &partition, &opts)?;
                Some(Restricted {
                    model,
                    partition,
                    plan,
                })
            }
        };
        Ok(Models { base, restricted })
    }

    pub fn window_options(&self) -> WindowOptions {
        WindowOptions::with_tail_eps(self.tolerances.tail_eps)
    }

    /// Validates scalars that do not depend on the model.
    pub fn validate(&self, needs_mc: bool) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Validation(m));
        let tol = &self.tolerances;
        if !(tol.quad > 0.0 && tol.quad < 1.0) {
            return bad(format!("tolerances.quad = {} must lie in (0, 1)", tol.quad));
        }
        if !(tol.tail_eps > 0.0 && tol.tail_eps < 1e-3) {
            return bad(format!("tolerances.tail_eps = {} must lie in (0, 1e-3)", tol.tail_eps));
        }
        if !(0.0..1.0).contains(&tol.mc_failure_rate) {
            return bad(format!("tolerances.mc_failure_rate = {} must lie in [0, 1)", tol.mc_failure_rate));
        }
        let p = &self.params;
        if !(p.c_g > 2.0 && p.c_g.is_finite()) {
            return bad(format!("params.c_g = {} must exceed 2", p.c_g));
        }
        if !(p.epsilon > 0.0 && p.epsilon < 0.5) {
            return bad(format!("params.epsilon = {} must lie in (0, 1/2)", p.epsilon));
        }
        if !(p.gamma > 0.0 && p.gamma < 0.5) {
            return bad(format!("params.gamma = {} must lie in (0, 1/2)", p.gamma));
        }
        if !(p.c1 > 0.0 && p.c1.is_finite()) {
            return bad(format!("params.c1 = {} must be positive", p.c1));
        }
        if needs_mc {
            if self.mc.seed.is_none() {
                return bad("Monte Carlo commands need [mc] seed (or --seed)".into());
            }
            match self.mc.samples {
                Some(n) if n >= 100 => {}
                other => return bad(format!("[mc] samples must be at least 100, got {other:?}")),
            }
        }
        Ok(())
    }

    /// The grid in grid order, checked against the domain of `model`.
    pub fn grid(&self, model: &CoefficientModel) -> Result<Vec<GridPoint>, RunError> {
        let bad = |m: String| Err(RunError::Validation(m));
        let (values, is_r) = match (&self.grid.r, &self.grid.t) {
            (Some(r), None) => (r, true),
            (None, Some(t)) => (t, false),
            _ => return bad("[grid] needs exactly one of `r` and `t`".into()),
        };
        if values.is_empty() {
            return bad("[grid] is empty".into());
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("[grid] must be strictly increasing".into());
        }
        let t_g = model.t_g();
        let mut out = Vec::with_capacity(values.len());
        for &v in values {
            let p = if is_r {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("grid radius r = {v} must be positive"));
                }
                GridPoint { t: 2.0 * v.ln(), r: v }
            } else {
                if !v.is_finite() {
                    return bad(format!("grid point t = {v} is not finite"));
                }
                GridPoint { t: v, r: (0.5 * v).exp() }
            };
            if p.t >= t_g {
                return bad(format!(
                    "grid point r = {} lies outside the disk of convergence (R_G = {})",
                    p.r,
                    (0.5 * t_g).exp()
                ));
            }
            out.push(p);
        }
        Ok(out)
    }
}
