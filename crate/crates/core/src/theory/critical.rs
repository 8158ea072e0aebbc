//! The quartic family with density `exp(-u^4/12 + h u^2/2 - F(h))`.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre8;
use crate::stats::{check_probability, Quantile};

pub const DEFAULT_GRID_POINTS: usize = 4096;
const MIN_GRID_POINTS: usize = 1024;
const MAX_ABS_H: f64 = 50.0;
/// The integrand is below `exp(-TAIL_EXPONENT)` times its maximum outside the support.
const TAIL_EXPONENT: f64 = 40.0;

/// Tabulated law of `U_h`. The table covers `u >= 0`; the law is even.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalLaw {
    h: f64,
    log_normalizer: f64,
    /// Maximum of the exponent, subtracted before exponentiating.
    shift: f64,
    nodes: Vec<f64>,
    /// `P(0 <= U <= nodes[k])`.
    half_cdf: Vec<f64>,
    moment2: f64,
    moment4: f64,
}

fn exponent(h: f64, u: f64) -> f64 {
    let u2 = u * u;
    -u2 * u2 / 12.0 + 0.5 * h * u2
}

impl CriticalLaw {
    pub fn new(h: f64) -> Result<Self> {
        Self::with_grid(h, DEFAULT_GRID_POINTS)
    }

    pub fn with_grid(h: f64, grid_points: usize) -> Result<Self> {
        if !(h.abs() <= MAX_ABS_H) {
            return Err(Error::param(format!(
                "|h| must be at most {MAX_ABS_H}, got {h}"
            )));
        }
        if grid_points < MIN_GRID_POINTS {
            return Err(Error::param(format!(
                "critical law needs at least {MIN_GRID_POINTS} grid points"
            )));
        }
        let shift = if h > 0.0 { 0.75 * h * h } else { 0.0 };
        let u_max = (3.0 * h + (9.0 * h * h + 12.0 * (TAIL_EXPONENT + shift)).sqrt()).sqrt();
        let step = u_max / (grid_points - 1) as f64;
        let nodes: Vec<f64> = (0..grid_points).map(|k| k as f64 * step).collect();
        let g = |u: f64| (exponent(h, u) - shift).exp();
        let moment = |k: i32| {
            nodes
                .windows(2)
                .map(|w| gauss_legendre8(&|u: f64| u.powi(k) * g(u), w[0], w[1]))
                .sum::<f64>()
        };
        let mut cum = Vec::with_capacity(grid_points);
        cum.push(0.0);
        for w in nodes.windows(2) {
            let last = *cum.last().unwrap();
            cum.push(last + gauss_legendre8(&g, w[0], w[1]));
        }
        let half_mass = *cum.last().unwrap();
        if !(half_mass.is_finite() && half_mass > 0.0) {
            return Err(Error::numeric(format!(
                "critical-law normalizer failed at h = {h}"
            )));
        }
        let total = 2.0 * half_mass;
        let half_cdf = cum.iter().map(|c| c / total).collect();
        Ok(Self {
            h,
            log_normalizer: total.ln() + shift,
            shift,
            moment2: moment(2) / half_mass,
            moment4: moment(4) / half_mass,
            nodes,
            half_cdf,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `F(h)`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn support(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn pdf(&self, u: f64) -> f64 {
        (exponent(self.h, u) - self.log_normalizer).exp()
    }

    pub fn moment2(&self) -> f64 {
        self.moment2
    }

    pub fn moment4(&self) -> f64 {
        self.moment4
    }

    /// `E U^k` for even `k` (odd moments vanish).
    pub fn moment(&self, k: u32) -> f64 {
        if k % 2 == 1 {
            return 0.0;
        }
        let k = k as i32;
        let f = |u: f64| u.powi(k) * self.pdf(u);
        2.0 * self
            .nodes
            .windows(2)
            .map(|w| gauss_legendre8(&f, w[0], w[1]))
            .sum::<f64>()
    }

    /// `P(0 <= U <= x)` for `x >= 0` by cubic Hermite interpolation of the table.
    fn half(&self, x: f64) -> f64 {
        let last = self.nodes.len() - 1;
        if x >= self.nodes[last] {
            return 0.5;
        }
        let step = self.nodes[1];
        let k = ((x / step) as usize).min(last - 1);
        let (x0, x1) = (self.nodes[k], self.nodes[k + 1]);
        let t = (x - x0) / step;
        let (c0, c1) = (self.half_cdf[k], self.half_cdf[k + 1]);
        let (d0, d1) = (self.pdf(x0) * step, self.pdf(x1) * step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * c0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * c1
            + (t3 - t2) * d1
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x >= 0.0 {
            0.5 + self.half(x)
        } else {
            0.5 - self.half(-x)
        }
    }

    /// `P(U^2 <= w)`.
    pub fn sq_cdf(&self, w: f64) -> f64 {
        if w <= 0.0 {
            0.0
        } else {
            2.0 * self.half(w.sqrt())
        }
    }

    /// Inverse of `half` for a target in `[0, 0.5)`.
    fn half_inverse(&self, target: f64) -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        let k = self.half_cdf.partition_point(|&c| c < target);
        if k >= self.nodes.len() {
            return self.support();
        }
        let (mut lo, mut hi) = (self.nodes[k - 1], self.nodes[k]);
        let mut x = {
            let (c0, c1) = (self.half_cdf[k - 1], self.half_cdf[k]);
            lo + (target - c0) / (c1 - c0) * (hi - lo)
        };
        for _ in 0..60 {
            let r = self.half(x) - target;
            if r == 0.0 {
                break;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.pdf(x);
            let newton = x - r / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (hi - lo) < 1e-15 * hi.max(1.0) || r.abs() < 1e-17 {
                break;
            }
        }
        x
    }

    /// One draw by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v: f64 = rng.random();
        self.from_uniform(v)
    }

    /// `Psi(v)` with a linear first guess and one Newton correction.
    pub fn from_uniform(&self, v: f64) -> f64 {
        let target = (v - 0.5).abs();
        let k = self
            .half_cdf
            .partition_point(|&c| c < target)
            .clamp(1, self.nodes.len() - 1);
        let (c0, c1) = (self.half_cdf[k - 1], self.half_cdf[k]);
        let (x0, x1) = (self.nodes[k - 1], self.nodes[k]);
        let mut x = if c1 > c0 {
            x0 + (target - c0) / (c1 - c0) * (x1 - x0)
        } else {
            x0
        };
        let d = self.pdf(x);
        if d > 0.0 {
            x = (x - (self.half(x) - target) / d).clamp(x0, x1);
        }
        if v < 0.5 {
            -x
        } else {
            x
        }
    }

    /// Rows `(u, pdf, cdf)` over the symmetric support.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "u,pdf,cdf")?;
        for (&u, &c) in self.nodes.iter().zip(&self.half_cdf).rev() {
            if u > 0.0 {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", -u, self.pdf(u), 0.5 - c)?;
            }
        }
        for (&u, &c) in self.nodes.iter().zip(&self.half_cdf) {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", u, self.pdf(u), 0.5 + c)?;
        }
        Ok(())
    }
}

impl Quantile for CriticalLaw {
    fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(if p >= 0.5 {
            self.half_inverse(p - 0.5)
        } else {
            -self.half_inverse(0.5 - p)
        })
    }
}

/// `F(h)`.
pub fn log_normalizer(h: f64) -> Result<f64> {
    Ok(CriticalLaw::new(h)?.log_normalizer())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;
    use crate::seed::rng_from_seed;
    use statrs::function::gamma::gamma;

    fn closed_form_f0() -> f64 {
        (12f64.powf(0.25) * gamma(0.25) / 2.0).ln()
    }

    #[test]
    fn normalizer_closed_form() {
        let law = CriticalLaw::new(0.0).unwrap();
        assert!((law.log_normalizer() - closed_form_f0()).abs() < 1e-12);
        let simpson =
            adaptive_simpson(&|u: f64| (-u.powi(4) / 12.0).exp(), -8.0, 8.0, 1e-13).unwrap();
        assert!((law.log_normalizer() - simpson.ln()).abs() < 1e-11);
    }

    #[test]
    fn second_and_fourth_moments_at_zero() {
        let law = CriticalLaw::new(0.0).unwrap();
        let e2 = 12f64.sqrt() * gamma(0.75) / gamma(0.25);
        assert!((law.moment2() - e2).abs() < 1e-10);
        assert!((law.moment4() - 3.0).abs() < 1e-10);
        assert!((law.moment(2) - e2).abs() < 1e-10);
    }

    #[test]
    fn density_integrates_to_one_and_is_even() {
        for h in [-3.0, 0.0, 2.5] {
            let law = CriticalLaw::new(h).unwrap();
            assert!((law.moment(0) - 1.0).abs() < 1e-10);
            assert!((law.pdf(0.0) - (-law.log_normalizer()).exp()).abs() < 1e-15);
            assert_eq!(law.pdf(1.3), law.pdf(-1.3));
            assert!((law.cdf(law.support()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_normalizer_is_half_second_moment() {
        let d = 1e-4;
        for h in [-1.0, 0.0, 1.0, 2.0] {
            let fd = (log_normalizer(h + d).unwrap() - log_normalizer(h - d).unwrap()) / (2.0 * d);
            let half_m2 = 0.5 * CriticalLaw::new(h).unwrap().moment2();
            assert!((fd - half_m2).abs() < 1e-6, "h = {h}: {fd} vs {half_m2}");
        }
    }

    #[test]
    fn quantiles_are_symmetric_and_invert_cdf() {
        let law = CriticalLaw::new(0.7).unwrap();
        assert_eq!(law.quantile(0.5).unwrap(), 0.0);
        for p in [0.01, 0.05, 0.25, 0.4] {
            let (a, b) = (law.quantile(p).unwrap(), law.quantile(1.0 - p).unwrap());
            assert!((a + b).abs() < 1e-8);
            assert!((law.cdf(b) - (1.0 - p)).abs() < 1e-12);
        }
        assert!(law.quantile(1.0).is_err());
    }

    #[test]
    fn cdf_is_increasing() {
        let law = CriticalLaw::new(-1.0).unwrap();
        let mut prev = -1.0;
        for k in 0..2000 {
            let x = -4.0 + 8.0 * k as f64 / 1999.0;
            let c = law.cdf(x);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn sampling_matches_moments() {
        let law = CriticalLaw::new(1.0).unwrap();
        let mut rng = rng_from_seed(11);
        let n = 200_000;
        let m2: f64 = (0..n).map(|_| law.sample(&mut rng).powi(2)).sum::<f64>() / n as f64;
        let sd = ((law.moment4() - law.moment2().powi(2)) / n as f64).sqrt();
        assert!((m2 - law.moment2()).abs() < 4.0 * sd);
    }

    #[test]
    fn range_checks() {
        assert!(CriticalLaw::new(51.0).is_err());
        assert!(CriticalLaw::with_grid(0.0, 100).is_err());
        assert!(CriticalLaw::new(-50.0).is_ok());
        assert!(CriticalLaw::new(50.0).is_ok());
    }
}
