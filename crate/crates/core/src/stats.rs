//! Small statistical helpers shared by the samplers, estimators and the
//! experiment harness.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// A law with a left-continuous quantile function `inf{t : F(t) >= p}`.
pub trait Quantile {
    fn quantile(&self, p: f64) -> Result<f64>;
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("probability {p} outside (0, 1)")))
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn normal_sf(x: f64) -> f64 {
    std_normal().sf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Empirical law backed by a sorted sample.
#[derive(Debug, Clone)]
pub struct EmpiricalLaw {
    sorted: Vec<f64>,
}

impl EmpiricalLaw {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("empirical law needs at least one sample"));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::numeric("NaN in empirical sample"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Fraction of the sample strictly above `x`.
    pub fn exceedance(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }
}

impl Quantile for EmpiricalLaw {
    /// The `ceil(p N)`-th order statistic.
    fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        let n = self.sorted.len();
        let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
        Ok(self.sorted[rank - 1])
    }
}

/// A CDF given on a strictly increasing grid, linearly interpolated.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    x: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabulatedCdf {
    pub fn new(x: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if x.len() != cdf.len() || x.len() < 2 {
            return Err(Error::param(
                "CDF table needs matching columns of length >= 2",
            ));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) || cdf.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::param("CDF table must be increasing"));
        }
        Ok(Self { x, cdf })
    }

    pub fn cdf(&self, t: f64) -> f64 {
        interpolate(&self.x, &self.cdf, t)
    }
}

impl Quantile for TabulatedCdf {
    fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(invert_table(&self.x, &self.cdf, p))
    }
}

/// Piecewise-linear interpolation of `ys` over increasing `xs`, clamped at the ends.
pub(crate) fn interpolate(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    if t <= xs[0] {
        return ys[0];
    }
    if t >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let k = xs.partition_point(|&v| v <= t) - 1;
    let w = (t - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + w * (ys[k + 1] - ys[k])
}

/// Smallest `x` with linearly interpolated CDF `>= p`.
pub(crate) fn invert_table(xs: &[f64], cdf: &[f64], p: f64) -> f64 {
    let k = cdf.partition_point(|&c| c < p);
    if k == 0 {
        return xs[0];
    }
    if k >= cdf.len() {
        return xs[xs.len() - 1];
    }
    let (c0, c1) = (cdf[k - 1], cdf[k]);
    if c1 <= c0 {
        return xs[k];
    }
    xs[k - 1] + (p - c0) / (c1 - c0) * (xs[k] - xs[k - 1])
}

/// One-sample Kolmogorov-Smirnov distance `sup |F_N - F|`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov p-value for distance `d` at effective sample size `n`
/// (Stephens' small-sample correction).
pub fn ks_pvalue(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Total-variation distance between two probability vectors on a shared support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_quantile_uses_ceiling_order_statistic() {
        let law = EmpiricalLaw::new((1..=10).map(f64::from).collect()).unwrap();
        assert_eq!(law.quantile(0.5).unwrap(), 5.0);
        assert_eq!(law.quantile(0.51).unwrap(), 6.0);
        assert_eq!(law.quantile(0.01).unwrap(), 1.0);
        assert!(law.quantile(1.0).is_err());
        assert!(law.quantile(0.0).is_err());
    }

    #[test]
    fn normal_table_quantile() {
        let xs: Vec<f64> = (0..=4000)
            .map(|i| -8.0 + 16.0 * i as f64 / 4000.0)
            .collect();
        let cdf: Vec<f64> = xs.iter().map(|&x| normal_cdf(x)).collect();
        let table = TabulatedCdf::new(xs, cdf).unwrap();
        assert!((table.quantile(0.975).unwrap() - 1.959_964).abs() < 1e-4);
    }

    #[test]
    fn ks_pvalue_reference_points() {
        // Asymptotic Kolmogorov critical values: Q(1.36) ~ 0.05, Q(1.63) ~ 0.01.
        let big: f64 = 1e12;
        assert!((ks_pvalue(1.3581 / big.sqrt(), big) - 0.05).abs() < 1e-3);
        assert!((ks_pvalue(1.6276 / big.sqrt(), big) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_two_sample_identical_is_zero() {
        let a = [0.1, 0.4, 0.2, 0.9];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 0.1], &[1.0, 2.0]), 1.0);
    }
}
