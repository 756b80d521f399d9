//! Poisson point and tail probabilities, and the initial component-code loss.
//!
//! Everything here is a pure function of its arguments. The density-evolution
//! inner loops call [`psi_geq_table`], which fills all tails up to some `t` in
//! a single pass over the pmf.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LOG_FACTORIAL_TABLE: usize = 4096;
const DIRECT_LIMIT: f64 = 30.0;

fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LOG_FACTORIAL_TABLE + 1);
        let mut acc = 0.0f64;
        table.push(0.0);
        for i in 1..=LOG_FACTORIAL_TABLE {
            acc += (i as f64).ln();
            table.push(acc);
        }
        table
    })
}

/// `ln(i!)`, tabulated up to 4096 and Stirling's series beyond.
pub fn log_factorial(i: u64) -> f64 {
    if (i as usize) <= LOG_FACTORIAL_TABLE {
        return log_factorial_table()[i as usize];
    }
    let x = i as f64 + 1.0;
    // ln Γ(x) for large x
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

fn check_rate(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "Poisson rate must be finite and nonnegative, got {lambda}"
        )));
    }
    Ok(())
}

/// `Pr{Pois(lambda) = i}`.
pub fn psi_eq(i: u64, lambda: f64) -> Result<f64> {
    check_rate(lambda)?;
    Ok(psi_eq_unchecked(i, lambda))
}

pub(crate) fn psi_eq_unchecked(i: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    if i as f64 > DIRECT_LIMIT || lambda > DIRECT_LIMIT {
        let log_p = i as f64 * lambda.ln() - lambda - log_factorial(i);
        return log_p.exp();
    }
    let mut p = (-lambda).exp();
    for k in 1..=i {
        p *= lambda / k as f64;
    }
    p
}

/// `Pr{Pois(lambda) >= t}`. Tails below the mean are one minus the lower
/// cumulative sum; tails above it are summed upward so small values keep
/// their relative accuracy.
pub fn psi_geq(t: u64, lambda: f64) -> Result<f64> {
    check_rate(lambda)?;
    Ok(psi_geq_unchecked(t, lambda))
}

pub(crate) fn psi_geq_unchecked(t: u64, lambda: f64) -> f64 {
    if t == 0 {
        return 1.0;
    }
    if t as f64 > lambda {
        return upper_tail(t, psi_eq_unchecked(t, lambda), lambda);
    }
    let below: f64 = (0..t).map(|i| psi_eq_unchecked(i, lambda)).sum();
    (1.0 - below).clamp(0.0, 1.0)
}

/// `sum_{i >= k} Pr{Pois(lambda) = i}` given `p_k`, for `k > lambda`.
fn upper_tail(k: u64, p_k: f64, lambda: f64) -> f64 {
    let mut sum = 0.0;
    let mut p = p_k;
    let mut i = k;
    while p > 0.0 && p > 1e-18 * sum {
        sum += p;
        i += 1;
        p *= lambda / i as f64;
    }
    sum.min(1.0)
}

/// Fills `out[k] = Pr{Pois(lambda) >= k}` for `k = 0..out.len()`.
///
/// `lambda` must be finite and nonnegative; callers in the DE loops have
/// already validated it.
pub fn psi_geq_table(lambda: f64, out: &mut [f64]) {
    let len = out.len();
    if len == 0 {
        return;
    }
    out[0] = 1.0;
    if lambda == 0.0 {
        out[1..].iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    // first index whose tail is summed upward
    let split = ((lambda.floor() as u64 + 1).min(len as u64)) as usize;
    let mut pmf = if lambda < 700.0 {
        (-lambda).exp()
    } else {
        psi_eq_unchecked(0, lambda)
    };
    let mut below = 0.0;
    for k in 1..split {
        below += if lambda < 700.0 { pmf } else { psi_eq_unchecked(k as u64 - 1, lambda) };
        out[k] = (1.0 - below).clamp(0.0, 1.0);
        pmf *= lambda / k as f64;
    }
    if split >= len {
        return;
    }
    // store p_k in place, then accumulate from the top
    let mut p = psi_eq_unchecked(split as u64, lambda);
    for (k, slot) in out.iter_mut().enumerate().skip(split) {
        *slot = p;
        p *= lambda / (k + 1) as f64;
    }
    let last = len - 1;
    out[last] = upper_tail(last as u64, out[last], lambda);
    for k in (split..last).rev() {
        out[k] = (out[k] + out[k + 1]).min(1.0);
    }
}

/// Truncation index used for checks of infinite Poisson sums.
pub fn truncation_horizon(lambda: f64) -> u64 {
    (lambda + 40.0 * lambda.sqrt() + 50.0).ceil() as u64
}

/// Initial component-code loss `sum_{i<t} Pr{Pois(c)=i} (t - i)`.
pub fn loss(t: u32, c: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::Domain("loss requires t >= 1".into()));
    }
    check_rate(c)?;
    Ok(loss_unchecked(t, c))
}

pub(crate) fn loss_unchecked(t: u32, c: f64) -> f64 {
    (0..t)
        .map(|i| psi_eq_unchecked(i as u64, c) * (t - i) as f64)
        .sum()
}

/// Mixture loss `sum_t tau_t loss(t, c)`.
pub fn loss_mixture(tau: &CapabilityDistribution, c: f64) -> Result<f64> {
    check_rate(c)?;
    Ok(tau.iter().map(|(t, w)| w * loss_unchecked(t, c)).sum())
}

/// `c * int_0^1 Pr{Pois(c x) >= t} dx`, via the closed form `c - t + loss(t, c)`.
pub fn psi_tail_integral(t: u32, c: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::Domain("tail integral requires t >= 1".into()));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("tail integral requires c > 0, got {c}")));
    }
    check_rate(c)?;
    Ok(c - t as f64 + loss_unchecked(t, c))
}

/// A probability vector over erasure-correcting capabilities `t = 1..=t_max`.
///
/// Serialized as a `{t: weight}` map with only the nonzero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<u32, f64>", into = "BTreeMap<u32, f64>")]
pub struct CapabilityDistribution {
    // probs[k] is the weight of t = k + 1
    probs: Vec<f64>,
}

impl CapabilityDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    /// Builds a distribution from weights indexed by `t - 1`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("t_max must be at least 1".into()));
        }
        if let Some((k, w)) = probs
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= 0.0) || !w.is_finite())
        {
            return Err(Error::InvalidDistribution(format!(
                "weight for t={} is {w}",
                k + 1
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        let mut probs = probs;
        while probs.len() > 1 && probs[probs.len() - 1] == 0.0 {
            probs.pop();
        }
        Ok(Self { probs })
    }

    /// Builds a distribution from `(t, weight)` pairs; repeated `t` accumulate.
    pub fn from_pairs(pairs: &[(u32, f64)]) -> Result<Self> {
        let t_max = pairs.iter().map(|p| p.0).max().unwrap_or(0);
        if t_max == 0 || pairs.iter().any(|p| p.0 == 0) {
            return Err(Error::InvalidDistribution(
                "capabilities must be >= 1".into(),
            ));
        }
        let mut probs = vec![0.0; t_max as usize];
        for &(t, w) in pairs {
            probs[t as usize - 1] += w;
        }
        Self::new(probs)
    }

    pub fn point_mass(t: u32) -> Result<Self> {
        Self::from_pairs(&[(t, 1.0)])
    }

    /// Uniform over `t_min..=t_max`.
    pub fn uniform(t_min: u32, t_max: u32) -> Result<Self> {
        if t_min == 0 || t_min > t_max {
            return Err(Error::InvalidDistribution(format!(
                "empty uniform range {t_min}..={t_max}"
            )));
        }
        let w = 1.0 / (t_max - t_min + 1) as f64;
        let mut probs = vec![0.0; t_max as usize];
        for t in t_min..=t_max {
            probs[t as usize - 1] = w;
        }
        Self::new(probs)
    }

    pub fn t_max(&self) -> u32 {
        self.probs.len() as u32
    }

    pub fn weight(&self, t: u32) -> f64 {
        if t == 0 {
            return 0.0;
        }
        self.probs.get(t as usize - 1).copied().unwrap_or(0.0)
    }

    /// Weights indexed by `t - 1`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `(t, weight)` for every nonzero weight, in increasing `t`.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(k, w)| (k as u32 + 1, *w))
    }

    /// Mean capability.
    pub fn mean(&self) -> f64 {
        self.iter().map(|(t, w)| t as f64 * w).sum()
    }

    /// The smallest capability carrying positive weight.
    pub fn t_min(&self) -> u32 {
        self.iter().next().map(|(t, _)| t).unwrap_or(1)
    }

    /// `sum_t tau_t Pr{Pois(lambda) >= t + shift}`; `shift = 0` is the DE
    /// update, `shift = 1` the check-node failure probability.
    pub fn tail_mixture(&self, lambda: f64, shift: u32, scratch: &mut Vec<f64>) -> f64 {
        let len = self.probs.len() + 1 + shift as usize;
        scratch.resize(len, 0.0);
        psi_geq_table(lambda, scratch);
        self.iter()
            .map(|(t, w)| w * scratch[(t + shift) as usize])
            .sum()
    }
}

impl TryFrom<BTreeMap<u32, f64>> for CapabilityDistribution {
    type Error = Error;

    fn try_from(map: BTreeMap<u32, f64>) -> Result<Self> {
        let pairs: Vec<(u32, f64)> = map.into_iter().collect();
        Self::from_pairs(&pairs)
    }
}

impl From<CapabilityDistribution> for BTreeMap<u32, f64> {
    fn from(d: CapabilityDistribution) -> Self {
        d.iter().collect()
    }
}
