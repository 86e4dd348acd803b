use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use statrs::function::gamma::ln_gamma;

use super::CoefficientModel;
use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

/// Closed-form `a(x)`, `b(x)` at `x = r² = eᵗ` for the families that have one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceForms {
    /// `G = e^z`: `a = b = x`.
    Exp,
    /// `G = exp(e^z)`: `a = x eˣ`, `b = x(x+1)eˣ`.
    DoubleExp,
    /// `G = exp((1−z)^{−α})`.
    UnitDiskExp { alpha: f64 },
    /// `G = (1−z)^{−L}`.
    Hyperbolic { l: f64 },
    /// `G = cn·zⁿ + cm·zᵐ`.
    TwoTerm { n: u64, m: u64, cn: f64, cm: f64 },
    /// `G = zᵏ`.
    Monomial { k: u64 },
}

impl ReferenceForms {
    /// `(a(x), b(x))`.
    pub fn ab(&self, x: f64) -> (f64, f64) {
        match *self {
            ReferenceForms::Exp => (x, x),
            ReferenceForms::DoubleExp => {
                let e = x.exp();
                (x * e, x * (x + 1.0) * e)
            }
            ReferenceForms::UnitDiskExp { alpha } => {
                let s = 1.0 - x;
                let a = alpha * x / s.powf(alpha + 1.0);
                let b = a + alpha * (alpha + 1.0) * x * x / s.powf(alpha + 2.0);
                (a, b)
            }
            ReferenceForms::Hyperbolic { l } => {
                let s = 1.0 - x;
                (l * x / s, l * x / (s * s))
            }
            ReferenceForms::TwoTerm { n, m, cn, cm } => {
                // Bernoulli on {n, m} with P[m] = cm xᵐ / (cn xⁿ + cm xᵐ).
                let logit = (cm.ln() - cn.ln()) + (m as f64 - n as f64) * x.ln();
                let q = 1.0 / (1.0 + (-logit).exp());
                let q_low = 1.0 / (1.0 + logit.exp());
                let d = m as f64 - n as f64;
                (n as f64 + d * q, d * d * q * q_low)
            }
            ReferenceForms::Monomial { k } => (k as f64, 0.0),
        }
    }
}

#[derive(Clone)]
pub(super) enum Source {
    Exp,
    MittagLeffler(f64),
    DoubleExp(Arc<RwLock<Vec<f64>>>),
    Lindelof(f64),
    UnitDiskExp {
        alpha: f64,
        cache: Arc<RwLock<RecurrenceCache>>,
    },
    Hyperbolic(f64),
    Table {
        values: Arc<Vec<f64>>,
        reference: Option<ReferenceForms>,
    },
}

impl Source {
    pub(super) fn reference_forms(&self) -> Option<ReferenceForms> {
        match self {
            Source::Exp => Some(ReferenceForms::Exp),
            Source::MittagLeffler(a) if *a == 1.0 => Some(ReferenceForms::Exp),
            Source::DoubleExp(_) => Some(ReferenceForms::DoubleExp),
            Source::UnitDiskExp { alpha, .. } => Some(ReferenceForms::UnitDiskExp { alpha: *alpha }),
            Source::Hyperbolic(l) => Some(ReferenceForms::Hyperbolic { l: *l }),
            Source::Table { reference, .. } => *reference,
            _ => None,
        }
    }

    pub(super) fn log_coeffs(&self, lo: u64, hi: u64) -> Vec<f64> {
        match self {
            Source::Exp => (lo..hi).map(|n| -ln_factorial(n)).collect(),
            Source::MittagLeffler(alpha) => (lo..hi)
                .map(|n| -ln_gamma(1.0 + n as f64 / alpha))
                .collect(),
            Source::Lindelof(alpha) => (lo..hi)
                .map(|n| {
                    let n = n as f64;
                    -alpha * n * (n + std::f64::consts::E).ln().ln()
                })
                .collect(),
            Source::Hyperbolic(l) => {
                let base = ln_gamma(*l);
                (lo..hi)
                    .map(|n| ln_gamma(n as f64 + l) - base - ln_factorial(n))
                    .collect()
            }
            Source::DoubleExp(cache) => cached(cache, lo, hi, |table, upto| {
                for n in table.len() as u64..upto {
                    table.push(double_exp_log_coeff(n));
                }
            }),
            Source::UnitDiskExp { cache, .. } => {
                {
                    let guard = cache.read().expect("coefficient cache poisoned");
                    if guard.log_g.len() as u64 >= hi {
                        return guard.log_g[lo as usize..hi as usize].to_vec();
                    }
                }
                let mut guard = cache.write().expect("coefficient cache poisoned");
                guard.extend(hi as usize);
                guard.log_g[lo as usize..hi as usize].to_vec()
            }
            Source::Table { values, .. } => (lo..hi)
                .map(|n| {
                    values
                        .get(n as usize)
                        .copied()
                        .unwrap_or(f64::NEG_INFINITY)
                })
                .collect(),
        }
    }
}

fn cached(
    cache: &RwLock<Vec<f64>>,
    lo: u64,
    hi: u64,
    grow: impl FnOnce(&mut Vec<f64>, u64),
) -> Vec<f64> {
    {
        let guard = cache.read().expect("coefficient cache poisoned");
        if guard.len() as u64 >= hi {
            return guard[lo as usize..hi as usize].to_vec();
        }
    }
    let mut guard = cache.write().expect("coefficient cache poisoned");
    if (guard.len() as u64) < hi {
        grow(&mut guard, hi);
    }
    guard[lo as usize..hi as usize].to_vec()
}

pub(crate) fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `log(Bₙ/n!)` through Dobinski's formula `Bₙ = e⁻¹ Σₖ kⁿ/k!`.
fn double_exp_log_coeff(n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let term = |k: u64| nf * (k as f64).ln() - ln_factorial(k);
    // The summand is log-concave in k; climb to its peak and sum outward.
    let mut peak = ((nf / (nf + 2.0).ln()).floor() as u64).max(1);
    while term(peak + 1) > term(peak) {
        peak += 1;
    }
    while peak > 1 && term(peak - 1) > term(peak) {
        peak -= 1;
    }
    let top = term(peak);
    let mut terms = vec![top];
    let mut k = peak + 1;
    loop {
        let v = term(k);
        terms.push(v);
        if v < top - 45.0 {
            break;
        }
        k += 1;
    }
    let mut k = peak;
    while k > 1 {
        k -= 1;
        let v = term(k);
        terms.push(v);
        if v < top - 45.0 {
            break;
        }
    }
    -1.0 - ln_factorial(n) + log_sum_exp(&terms)
}

/// Coefficients of `exp(F)` with `F = (1−z)^{−α}`, from `n gₙ = Σ k fₖ g_{n−k}`.
pub(super) struct RecurrenceCache {
    alpha: f64,
    log_kf: Vec<f64>,
    log_g: Vec<f64>,
}

impl RecurrenceCache {
    fn new(alpha: f64) -> Self {
        Self {
            alpha,
            log_kf: vec![f64::NEG_INFINITY],
            log_g: vec![1.0],
        }
    }

    fn extend(&mut self, upto: usize) {
        let base = ln_gamma(self.alpha);
        while self.log_kf.len() < upto {
            let k = self.log_kf.len() as f64;
            self.log_kf
                .push(k.ln() + ln_gamma(k + self.alpha) - base - ln_gamma(k + 1.0));
        }
        let mut terms = Vec::with_capacity(upto);
        while self.log_g.len() < upto {
            let n = self.log_g.len();
            terms.clear();
            terms.extend((1..=n).map(|k| self.log_kf[k] + self.log_g[n - k]));
            self.log_g.push(log_sum_exp(&terms) - (n as f64).ln());
        }
    }
}

fn build(tag: &str, params: BTreeMap<String, f64>, t_g: f64, source: Source) -> CoefficientModel {
    CoefficientModel {
        tag: tag.to_string(),
        params,
        t_g,
        max_index: None,
        source,
        masks: Vec::new(),
    }
}

pub(super) fn exp() -> CoefficientModel {
    build("exp", BTreeMap::new(), f64::INFINITY, Source::Exp)
}

pub(super) fn double_exp() -> CoefficientModel {
    build(
        "double_exp",
        BTreeMap::new(),
        f64::INFINITY,
        Source::DoubleExp(Arc::new(RwLock::new(Vec::new()))),
    )
}

pub(super) fn monomial(k: u64) -> CoefficientModel {
    let mut values = vec![f64::NEG_INFINITY; k as usize + 1];
    values[k as usize] = 0.0;
    let mut model = build(
        "monomial",
        BTreeMap::from([("k".into(), k as f64)]),
        f64::INFINITY,
        Source::Table {
            values: Arc::new(values),
            reference: Some(ReferenceForms::Monomial { k }),
        },
    );
    model.max_index = Some(k);
    model
}

pub(super) fn table(tag: &str, values: Vec<f64>) -> Result<CoefficientModel> {
    if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::InvalidArgument(
            "log-coefficients must be finite or -inf".into(),
        ));
    }
    let Some(last) = values.iter().rposition(|v| v.is_finite()) else {
        return Err(Error::EmptyModel);
    };
    let mut values = values;
    values.truncate(last + 1);
    let mut model = build(
        tag,
        BTreeMap::new(),
        f64::INFINITY,
        Source::Table {
            values: Arc::new(values),
            reference: None,
        },
    );
    model.max_index = Some(last as u64);
    Ok(model)
}

fn get(family: &str, params: &BTreeMap<String, f64>, name: &str) -> Result<f64> {
    params
        .get(name)
        .copied()
        .ok_or_else(|| Error::MissingParameter {
            family: family.into(),
            name: name.into(),
        })
}

fn positive(family: &str, name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            family: family.into(),
            name: name.into(),
            value,
            reason: "must be positive and finite",
        })
    }
}

fn index(family: &str, name: &str, value: f64) -> Result<u64> {
    if value.is_finite() && value >= 0.0 && value.fract() == 0.0 && value < 1e9 {
        Ok(value as u64)
    } else {
        Err(Error::InvalidParameter {
            family: family.into(),
            name: name.into(),
            value,
            reason: "must be a non-negative integer",
        })
    }
}

pub(super) fn make_family(name: &str, params: &BTreeMap<String, f64>) -> Result<CoefficientModel> {
    let one = |key: &str, v: f64| BTreeMap::from([(key.to_string(), v)]);
    match name {
        "exp" => Ok(exp()),
        "double_exp" => Ok(double_exp()),
        "mittag_leffler" => {
            let alpha = positive(name, "alpha", get(name, params, "alpha")?)?;
            Ok(build(name, one("alpha", alpha), f64::INFINITY, Source::MittagLeffler(alpha)))
        }
        "lindelof" => {
            let alpha = positive(name, "alpha", get(name, params, "alpha")?)?;
            Ok(build(name, one("alpha", alpha), f64::INFINITY, Source::Lindelof(alpha)))
        }
        "unit_disk_exp" => {
            let alpha = positive(name, "alpha", get(name, params, "alpha")?)?;
            Ok(build(
                name,
                one("alpha", alpha),
                0.0,
                Source::UnitDiskExp {
                    alpha,
                    cache: Arc::new(RwLock::new(RecurrenceCache::new(alpha))),
                },
            ))
        }
        "hyperbolic" => {
            let l = positive(name, "L", get(name, params, "L")?)?;
            Ok(build(name, one("L", l), 0.0, Source::Hyperbolic(l)))
        }
        "two_term" => {
            let n = index(name, "n", get(name, params, "n")?)?;
            let m = index(name, "m", get(name, params, "m")?)?;
            let cn = positive(name, "cn", params.get("cn").copied().unwrap_or(1.0))?;
            let cm = positive(name, "cm", params.get("cm").copied().unwrap_or(1.0))?;
            if n == m {
                return Err(Error::InvalidParameter {
                    family: name.into(),
                    name: "m".into(),
                    value: m as f64,
                    reason: "must differ from n",
                });
            }
            let (n, m, cn, cm) = if n < m { (n, m, cn, cm) } else { (m, n, cm, cn) };
            let mut values = vec![f64::NEG_INFINITY; m as usize + 1];
            values[n as usize] = cn.ln();
            values[m as usize] = cm.ln();
            let mut model = build(
                name,
                BTreeMap::from([
                    ("n".into(), n as f64),
                    ("m".into(), m as f64),
                    ("cn".into(), cn),
                    ("cm".into(), cm),
                ]),
                f64::INFINITY,
                Source::Table {
                    values: Arc::new(values),
                    reference: Some(ReferenceForms::TwoTerm { n, m, cn, cm }),
                },
            );
            model.max_index = Some(m);
            Ok(model)
        }
        "monomial" => Ok(monomial(index(name, "k", get(name, params, "k")?)?)),
        "file" => Err(Error::MissingParameter {
            family: name.into(),
            name: "path".into(),
        }),
        other => Err(Error::UnknownFamily(other.into())),
    }
}
