//! Majorant sequence `nu_n`, its generating function, growth constants and
//! the radii of convergence of the forward and inverse series.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orders evaluated in exact rational arithmetic by default.
pub const EXACT_ORDER: usize = 25;
/// Multiplicative margin applied to the tail ratio.
pub const GROWTH_SAFETY: f64 = 1.05;
pub const MIN_GROWTH_LEN: usize = 16;

/// `nu_0, ..., nu_N` with `nu_{n+1} = nu_n + sum_{i1+i2+i3=n} nu_i1 nu_i2 nu_i3`.
#[derive(Debug, Clone, PartialEq)]
pub struct NuSequence {
    nu0: f64,
    values: Vec<f64>,
    /// Exact prefix; empty when the sequence was built from floats.
    exact: Vec<BigRational>,
}

fn cubic_convolution<T>(v: &[T], n: usize) -> T
where
    T: Clone + Zero + for<'a> std::ops::Add<&'a T, Output = T>,
    for<'a> &'a T: std::ops::Mul<&'a T, Output = T>,
{
    // sum_{i1+i2+i3=n} v_i1 v_i2 v_i3 = sum_{i1} v_i1 * (sum_{i2} v_i2 v_{n-i1-i2})
    let mut total = T::zero();
    for i1 in 0..=n {
        let mut inner = T::zero();
        for i2 in 0..=(n - i1) {
            inner = inner + &(&v[i2] * &v[n - i1 - i2]);
        }
        total = total + &(&v[i1] * &inner);
    }
    total
}

pub fn nu_sequence(nu0: f64, order: usize) -> Result<NuSequence> {
    nu_sequence_with(nu0, order, EXACT_ORDER)
}

/// Exact through `exact_order`, floating point beyond.
pub fn nu_sequence_with(nu0: f64, order: usize, exact_order: usize) -> Result<NuSequence> {
    if !(nu0 >= 0.0) || !nu0.is_finite() {
        return Err(Error::Domain(format!("nu0 must be finite and nonnegative, got {nu0}")));
    }
    let seed = BigRational::from_float(nu0).expect("finite");
    let exact_len = order.min(exact_order) + 1;
    let mut exact = vec![seed];
    while exact.len() < exact_len {
        let n = exact.len() - 1;
        let next = exact[n].clone() + cubic_convolution(&exact, n);
        exact.push(next);
    }
    let mut values = Vec::with_capacity(order + 1);
    for (i, q) in exact.iter().enumerate() {
        let x = q.to_f64().unwrap_or(f64::INFINITY);
        if !x.is_finite() {
            return Err(Error::Overflow { largest_safe: i.saturating_sub(1) });
        }
        values.push(x);
    }
    while values.len() < order + 1 {
        let n = values.len() - 1;
        let next = values[n] + cubic_convolution(&values, n);
        if !next.is_finite() {
            return Err(Error::Overflow { largest_safe: n });
        }
        values.push(next);
    }
    Ok(NuSequence { nu0, values, exact })
}

impl NuSequence {
    pub fn from_floats(values: Vec<f64>) -> Result<Self> {
        let nu0 = *values
            .first()
            .ok_or_else(|| Error::Domain("empty sequence".into()))?;
        Ok(Self {
            nu0,
            values,
            exact: Vec::new(),
        })
    }

    pub fn from_exact(exact: Vec<BigRational>) -> Result<Self> {
        let values: Vec<f64> = exact.iter().map(|q| q.to_f64().unwrap_or(f64::INFINITY)).collect();
        let nu0 = *values
            .first()
            .ok_or_else(|| Error::Domain("empty sequence".into()))?;
        Ok(Self { nu0, values, exact })
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exact(&self) -> &[BigRational] {
        &self.exact
    }

    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_fully_exact(&self) -> bool {
        self.exact.len() == self.values.len()
    }

    /// The exactly evaluated leading part of the sequence.
    pub fn exact_prefix(&self) -> Option<NuSequence> {
        if self.exact.is_empty() {
            return None;
        }
        Some(Self {
            nu0: self.nu0,
            values: self.values[..self.exact.len()].to_vec(),
            exact: self.exact.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratingDefect {
    /// Largest `|c_m|` for the coefficients of `x P^3 + (x - 1) P + nu0`.
    pub max_abs: f64,
    /// Largest `|c_m| / max(1, nu_m)`.
    pub max_rel: f64,
    /// First order with a nonzero coefficient.
    pub first_nonzero: Option<usize>,
    pub exact: bool,
    pub checked_through: usize,
}

/// Coefficients of `x P(x)^3 + (x - 1) P(x) + nu0` for the truncated series
/// `P = sum nu_n x^n`, checked through the highest stored order.
pub fn verify_generating_polynomial(seq: &NuSequence) -> Result<GeneratingDefect> {
    let n = seq.values.len();
    if n < 3 {
        return Err(Error::Domain(format!("need at least 3 terms, got {n}")));
    }
    let top = n - 1;
    if seq.is_fully_exact() {
        let v = &seq.exact;
        let mut max_abs = BigRational::zero();
        let mut max_rel = 0.0f64;
        let mut first = None;
        for m in 0..=top {
            let mut c = if m == 0 {
                BigRational::zero()
            } else {
                cubic_convolution(v, m - 1) + &v[m - 1]
            };
            c = c - &v[m];
            if m == 0 {
                c = c + &v[0];
            }
            let a = c.abs();
            if !a.is_zero() && first.is_none() {
                first = Some(m);
            }
            let denom = v[m].abs().max(BigRational::one());
            max_rel = max_rel.max((&a / denom).to_f64().unwrap_or(f64::INFINITY));
            if a > max_abs {
                max_abs = a;
            }
        }
        return Ok(GeneratingDefect {
            max_abs: max_abs.to_f64().unwrap_or(f64::INFINITY),
            max_rel,
            first_nonzero: first,
            exact: true,
            checked_through: top,
        });
    }
    let v = &seq.values;
    let (mut max_abs, mut max_rel, mut first) = (0.0f64, 0.0f64, None);
    for m in 0..=top {
        let c = if m == 0 {
            0.0
        } else {
            cubic_convolution(v, m - 1) + v[m - 1] - v[m]
        };
        if c != 0.0 && first.is_none() {
            first = Some(m);
        }
        max_abs = max_abs.max(c.abs());
        max_rel = max_rel.max(c.abs() / v[m].abs().max(1.0));
    }
    Ok(GeneratingDefect {
        max_abs,
        max_rel,
        first_nonzero: first,
        exact: false,
        checked_through: top,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthEstimator {
    /// `K = safety * max ratio nu_{n+1}/nu_n` over the last quarter.
    TailRatio,
    /// `K = safety / x*` with `x*` the branch point of the generating function.
    Singularity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub k: f64,
    pub nu: f64,
    pub estimator: GrowthEstimator,
    pub safety_factor: f64,
    pub raw_rate: f64,
}

pub fn estimate_growth(seq: &NuSequence) -> Result<GrowthEstimate> {
    estimate_growth_with(seq, GrowthEstimator::TailRatio)
}

pub fn estimate_growth_with(seq: &NuSequence, estimator: GrowthEstimator) -> Result<GrowthEstimate> {
    let v = &seq.values;
    if v.len() < MIN_GROWTH_LEN {
        return Err(Error::Domain(format!(
            "growth estimate needs at least {MIN_GROWTH_LEN} terms, got {}",
            v.len()
        )));
    }
    if !(v[0] > 0.0) {
        return Err(Error::Domain("growth estimate needs nu0 > 0".into()));
    }
    let raw = match estimator {
        GrowthEstimator::TailRatio => {
            let start = v.len() - v.len() / 4 - 1;
            v[start..]
                .windows(2)
                .map(|w| w[1] / w[0])
                .fold(0.0, f64::max)
        }
        GrowthEstimator::Singularity => 1.0 / singularity(v[0])?,
    };
    let k = GROWTH_SAFETY * raw;
    // nu_n K^{-n} computed incrementally to stay in range
    let mut nu = 0.0f64;
    let mut scale = 1.0f64;
    for &x in v {
        nu = nu.max(x * scale);
        scale /= k;
    }
    Ok(GrowthEstimate {
        k,
        nu,
        estimator,
        safety_factor: GROWTH_SAFETY,
        raw_rate: raw,
    })
}

/// Smallest positive `x` where the cubic `x p^3 + (x - 1) p + nu0` in `p` has a
/// double root, i.e. `4 (1 - x)^3 = 27 nu0^2 x`. Found by bisection on (0, 1).
pub fn singularity(nu0: f64) -> Result<f64> {
    if !(nu0 > 0.0) || !nu0.is_finite() {
        return Err(Error::Domain(format!("nu0 must be positive, got {nu0}")));
    }
    let f = |x: f64| 4.0 * (1.0 - x).powi(3) - 27.0 * nu0 * nu0 * x;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {x}")))
    }
}

/// `1 / (K mu)`.
pub fn forward_radius(mu: f64, k: f64) -> Result<f64> {
    positive("mu", mu)?;
    positive("K", k)?;
    Ok(1.0 / (k * mu))
}

/// Returns `(r, C)` with `C = max(2, ||pinv|| nu K mu)` and
/// `r = (sqrt(16 C^2 + 1) - 4 C) / (2 K mu)`.
pub fn inverse_radius(mu: f64, k: f64, nu: f64, pinv_norm: f64) -> Result<(f64, f64)> {
    positive("mu", mu)?;
    positive("K", k)?;
    positive("nu", nu)?;
    positive("pseudoinverse norm", pinv_norm)?;
    let c = (pinv_norm * nu * k * mu).max(2.0);
    // sqrt(16C^2+1) - 4C rewritten without cancellation
    let bracket = 1.0 / ((16.0 * c * c + 1.0).sqrt() + 4.0 * c);
    Ok((bracket / (2.0 * k * mu), c))
}

/// Data-side check of the inverse series hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataCheck {
    /// `||K1+ phi||` in the sup norm over both coefficients.
    pub first_term_norm: f64,
    pub radius: f64,
    pub within_radius: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub mu: f64,
    pub nu0: f64,
    pub sequence_order: usize,
    pub exact_order: usize,
    pub nu_values: Vec<f64>,
    /// Defect over the exact prefix; zero when the recurrence is consistent.
    pub generating_defect: GeneratingDefect,
    /// Relative defect of the full (partly floating point) sequence.
    pub float_defect_rel: f64,
    pub growth_rate: f64,
    pub growth_prefactor: f64,
    pub estimator: GrowthEstimator,
    pub safety_factor: f64,
    pub singularity: f64,
    pub forward_radius: f64,
    pub pinv_norm: Option<f64>,
    pub constant_c: Option<f64>,
    pub inverse_radius: Option<f64>,
    pub parameter_norm: String,
    pub data_check: Option<DataCheck>,
}

impl ConvergenceReport {
    pub fn build(mu: f64, nu0: f64, order: usize, pinv_norm: Option<f64>) -> Result<Self> {
        let seq = nu_sequence(nu0, order)?;
        let full = verify_generating_polynomial(&seq)?;
        let defect = match seq.exact_prefix() {
            Some(p) if p.values.len() >= 3 => verify_generating_polynomial(&p)?,
            _ => full.clone(),
        };
        let growth = estimate_growth(&seq)?;
        let fr = forward_radius(mu, growth.k)?;
        let (inv, c) = match pinv_norm {
            Some(p) => {
                let (r, c) = inverse_radius(mu, growth.k, growth.nu, p)?;
                (Some(r), Some(c))
            }
            None => (None, None),
        };
        Ok(Self {
            mu,
            nu0,
            sequence_order: order,
            exact_order: seq.exact.len().saturating_sub(1),
            nu_values: seq.values.clone(),
            generating_defect: defect,
            float_defect_rel: full.max_rel,
            growth_rate: growth.k,
            growth_prefactor: growth.nu,
            estimator: growth.estimator,
            safety_factor: growth.safety_factor,
            singularity: singularity(nu0)?,
            forward_radius: fr,
            pinv_norm,
            constant_c: c,
            inverse_radius: inv,
            parameter_norm: "sup over alpha and beta".into(),
            data_check: None,
        })
    }

    /// Records `||K1+ phi||` against the inverse radius.
    pub fn check_data(&mut self, first_term_norm: f64) -> Option<&DataCheck> {
        let radius = self.inverse_radius?;
        self.data_check = Some(DataCheck {
            first_term_norm,
            radius,
            within_radius: first_term_norm < radius,
        });
        self.data_check.as_ref()
    }
}

/// Exact `nu_n` as a decimal string when it is an integer, else `p/q`.
pub fn format_exact(q: &BigRational) -> String {
    if q.denom() == &BigInt::one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}
