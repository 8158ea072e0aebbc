//! Exact law of the sufficient statistic `x^T Q x`.
//!
//! Dense matrices are enumerated over all `2^n` configurations with a Gray
//! code. Block matrices only depend on the per-class sums, so their law is
//! assembled from products of binomial coefficients and works far beyond
//! `n = 24`.

use std::collections::HashMap;

use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::coupling::{block_quadratic, CouplingMatrix, Storage};
use crate::error::{Error, Result};

/// Largest `n` for brute-force enumeration of a dense matrix.
pub const ENUMERATION_CAP: usize = 24;
/// Largest number of class-sum vectors visited for block matrices.
const CLASS_SUM_CAP: u128 = 20_000_000;
/// Values closer than `1 / KEY_SCALE` are merged.
const KEY_SCALE: f64 = 1e9;
/// Counts stay exact in `f64` below this many spins.
const EXACT_WEIGHT_MAX_N: usize = 53;

#[derive(Debug, Clone, Serialize)]
pub struct EnumerationResult {
    pub theta: f64,
    pub log_z: f64,
    /// `Z_n'(theta) = E[x^T Q x] / 2`.
    pub dlog_z: f64,
    /// `(value, probability)` pairs sorted by value.
    pub suff_stat_pmf: Vec<(f64, f64)>,
}

/// Attainable values of `x^T Q x` with their multiplicities under the uniform
/// measure on `{-1, 1}^n`.
#[derive(Debug, Clone)]
pub struct StatisticLaw {
    n: usize,
    values: Vec<f64>,
    /// `log(count / 2^n)`.
    ln_weight: Vec<f64>,
    /// `count / 2^n`, exact when `n <= 53`.
    exact_weight: Option<Vec<f64>>,
}

fn key(v: f64) -> i64 {
    (v * KEY_SCALE).round() as i64
}

fn binomial_u64(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * u128::from(n - i) / u128::from(i + 1);
    }
    c as u64
}

impl StatisticLaw {
    pub fn enumerate(q: &CouplingMatrix) -> Result<Self> {
        match q.storage() {
            Storage::Blocks(b) => Self::from_blocks(q.n(), b),
            Storage::Dense(d) => Self::from_dense(q.n(), d),
        }
    }

    fn from_entries(n: usize, entries: Vec<(f64, f64, Option<u64>)>) -> Self {
        let mut merged: HashMap<i64, (f64, f64, Option<u64>)> = HashMap::new();
        for (v, lw, c) in entries {
            merged
                .entry(key(v))
                .and_modify(|e| {
                    let hi = e.1.max(lw);
                    e.1 = hi + ((e.1 - hi).exp() + (lw - hi).exp()).ln();
                    e.2 = match (e.2, c) {
                        (Some(a), Some(b)) => Some(a + b),
                        _ => None,
                    };
                })
                .or_insert((v, lw, c));
        }
        let mut rows: Vec<_> = merged.into_values().collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let exact = (n <= EXACT_WEIGHT_MAX_N && rows.iter().all(|r| r.2.is_some())).then(|| {
            let scale = 0.5f64.powi(n as i32);
            rows.iter().map(|r| r.2.unwrap() as f64 * scale).collect()
        });
        Self {
            n,
            values: rows.iter().map(|r| r.0).collect(),
            ln_weight: rows.iter().map(|r| r.1).collect(),
            exact_weight: exact,
        }
    }

    fn from_blocks(n: usize, b: &crate::coupling::Blocks) -> Result<Self> {
        let s = b.class_size;
        let combos = (s as u128 + 1)
            .checked_pow(b.classes as u32)
            .unwrap_or(u128::MAX);
        if combos > CLASS_SUM_CAP {
            return Err(Error::Capacity {
                n,
                cap: ENUMERATION_CAP,
            });
        }
        let ln2n = n as f64 * std::f64::consts::LN_2;
        let ln_binom: Vec<f64> = (0..=s).map(|k| ln_binomial(s as u64, k as u64)).collect();
        let binom: Option<Vec<u64>> = (n <= EXACT_WEIGHT_MAX_N)
            .then(|| (0..=s).map(|k| binomial_u64(s as u64, k as u64)).collect());
        let mut ups = vec![0usize; b.classes];
        let mut sums = vec![0.0; b.classes];
        let mut entries = Vec::new();
        loop {
            for (a, &k) in ups.iter().enumerate() {
                sums[a] = (2 * k) as f64 - s as f64;
            }
            let v = block_quadratic(b, &sums);
            let lw = ups.iter().map(|&k| ln_binom[k]).sum::<f64>() - ln2n;
            let c = binom
                .as_ref()
                .map(|bn| ups.iter().map(|&k| bn[k]).product());
            entries.push((v, lw, c));
            let mut a = 0;
            loop {
                if a == b.classes {
                    return Ok(Self::from_entries(n, entries));
                }
                ups[a] += 1;
                if ups[a] <= s {
                    break;
                }
                ups[a] = 0;
                a += 1;
            }
        }
    }

    fn from_dense(n: usize, d: &[f64]) -> Result<Self> {
        if n > ENUMERATION_CAP {
            return Err(Error::Capacity {
                n,
                cap: ENUMERATION_CAP,
            });
        }
        let mut x = vec![-1.0f64; n];
        let recompute = |x: &[f64]| {
            let t: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| d[i * n + j] * x[j]).sum())
                .collect();
            let v: f64 = x.iter().zip(&t).map(|(a, b)| a * b).sum();
            (t, v)
        };
        let (mut t, mut v) = recompute(&x);
        let mut counts: HashMap<i64, (f64, u64)> = HashMap::new();
        let total: u64 = 1 << n;
        for g in 0..total {
            if g > 0 {
                let i = g.trailing_zeros() as usize;
                let old = x[i];
                v -= 4.0 * old * t[i];
                x[i] = -old;
                let delta = -2.0 * old;
                for (k, tk) in t.iter_mut().enumerate() {
                    *tk += delta * d[k * n + i];
                }
                if g % 4096 == 0 {
                    (t, v) = recompute(&x);
                }
            }
            counts.entry(key(v)).or_insert((v, 0)).1 += 1;
        }
        let ln2n = n as f64 * std::f64::consts::LN_2;
        let entries = counts
            .into_values()
            .map(|(v, c)| (v, (c as f64).ln() - ln2n, Some(c)))
            .collect();
        Ok(Self::from_entries(n, entries))
    }

    /// The closed-form law for the complete family at any `n`.
    pub fn complete(n: usize) -> Result<Self> {
        Self::enumerate(&CouplingMatrix::build(
            crate::coupling::Family::Complete,
            n,
            None,
        )?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `a_n = min x^T Q x`.
    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    /// `b_n = max x^T Q x`.
    pub fn max_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Unnormalized log-probabilities `log(count / 2^n) + theta v / 2` and the
    /// normalizer, returned as `(probabilities, log_z)`.
    fn tilt(&self, theta: f64) -> (Vec<f64>, f64) {
        let ln2n = self.n as f64 * std::f64::consts::LN_2;
        match &self.exact_weight {
            Some(w) => {
                let top = self
                    .values
                    .iter()
                    .map(|v| 0.5 * theta * v)
                    .fold(f64::NEG_INFINITY, f64::max);
                let terms: Vec<f64> = w
                    .iter()
                    .zip(&self.values)
                    .map(|(w, v)| w * (0.5 * theta * v - top).exp())
                    .collect();
                let s: f64 = terms.iter().sum();
                (terms.iter().map(|t| t / s).collect(), ln2n + top + s.ln())
            }
            None => {
                let logs: Vec<f64> = self
                    .ln_weight
                    .iter()
                    .zip(&self.values)
                    .map(|(lw, v)| lw + 0.5 * theta * v)
                    .collect();
                let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let terms: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
                let s: f64 = terms.iter().sum();
                (terms.iter().map(|t| t / s).collect(), ln2n + top + s.ln())
            }
        }
    }

    pub fn log_z(&self, theta: f64) -> f64 {
        self.tilt(theta).1
    }

    /// `Z_n'(theta)`.
    pub fn dlog_z(&self, theta: f64) -> f64 {
        let (p, _) = self.tilt(theta);
        0.5 * p.iter().zip(&self.values).map(|(p, v)| p * v).sum::<f64>()
    }

    pub fn at(&self, theta: f64) -> EnumerationResult {
        let (p, log_z) = self.tilt(theta);
        let dlog_z = 0.5 * p.iter().zip(&self.values).map(|(p, v)| p * v).sum::<f64>();
        EnumerationResult {
            theta,
            log_z,
            dlog_z,
            suff_stat_pmf: self.values.iter().copied().zip(p).collect(),
        }
    }
}

/// Exact log-partition function, its derivative and the law of `x^T Q x`.
pub fn exact_enumerate(q: &CouplingMatrix, theta: f64) -> Result<EnumerationResult> {
    Ok(StatisticLaw::enumerate(q)?.at(theta))
}
