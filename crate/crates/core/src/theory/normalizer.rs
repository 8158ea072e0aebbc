//! Limits of log-partition differences and the limiting CDF of the critical MLE.

use serde::Serialize;

use super::critical::CriticalLaw;
use super::regime::RegimeTheory;
use crate::error::{Error, Result};

fn shift_parts(theta0: f64, tail_eigs: &[f64], kappa: f64) -> Result<(f64, f64)> {
    let m = super::regime::solve_m(theta0);
    let ta = theta0 * (1.0 - m * m);
    let mut series = 0.0;
    for &l in tail_eigs {
        let arg = 1.0 - ta * l;
        if !(arg > 0.0) {
            return Err(Error::domain(format!(
                "log argument 1 - theta0 (1 - m^2) lambda = {arg} is not positive"
            )));
        }
        series += arg.ln() + l * ta;
    }
    Ok((-0.5 * ta + 0.25 * kappa * ta * ta, series))
}

/// Limit of `Z_n(theta_n, Q_n) - Z_n(theta_n, CW)` for a regular `Q_n`:
/// `-theta0 a/2 + kappa theta0^2 a^2/4 - (1/2) sum_j [log(1 - theta0 a lambda_j) + theta0 a lambda_j]`
/// with `a = 1 - m^2(theta0)`.
pub fn normalizing_shift_c(theta0: f64, tail_eigs: &[f64], kappa: f64) -> Result<f64> {
    let (base, series) = shift_parts(theta0, tail_eigs, kappa)?;
    Ok(base - 0.5 * series)
}

/// The same constant with `+ (1/2) sum_j [...]`. Kept for comparison only: exact
/// enumeration on the bipartite family follows [`normalizing_shift_c`].
pub fn normalizing_shift_c_plus(theta0: f64, tail_eigs: &[f64], kappa: f64) -> Result<f64> {
    let (base, series) = shift_parts(theta0, tail_eigs, kappa)?;
    Ok(base + 0.5 * series)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizerShift {
    /// `R h^2 / 2` at low temperature, `F(h) - F(0)` at criticality.
    pub limit: f64,
    /// Coefficient of `sqrt(n)` in the drift `sqrt(n) h m^2 / 2`.
    pub drift_per_sqrt_n: f64,
}

impl NormalizerShift {
    /// Predicted `Z_n(theta0 + h/sqrt(n)) - Z_n(theta0)` at size `n`.
    pub fn predict(&self, n: f64) -> f64 {
        n.sqrt() * self.drift_per_sqrt_n + self.limit
    }
}

/// Asymptotics of `Z_n(theta0 + h/sqrt(n)) - Z_n(theta0)` (low temperature)
/// or `Z_n(1 + h/sqrt(n)) - Z_n(1)` (critical).
pub fn delta_logz_asymptotic(theta0: f64, h: f64) -> Result<NormalizerShift> {
    let regime = RegimeTheory::new(theta0).map_err(|_| {
        Error::domain(format!(
            "normalizer asymptotics need theta0 >= 1, got {theta0}"
        ))
    })?;
    Ok(match regime.regime {
        super::Regime::Low => NormalizerShift {
            limit: 0.5 * regime.r_info * h * h,
            drift_per_sqrt_n: 0.5 * h * regime.m * regime.m,
        },
        super::Regime::Critical => NormalizerShift {
            limit: if h == 0.0 {
                0.0
            } else {
                CriticalLaw::new(h)?.log_normalizer() - CriticalLaw::new(0.0)?.log_normalizer()
            },
            drift_per_sqrt_n: 0.0,
        },
    })
}

/// `P(U_0^2 <= E U_h^2)`.
pub fn mle_critical_cdf(h: f64) -> Result<f64> {
    let e2 = CriticalLaw::new(h)?.moment2();
    Ok(CriticalLaw::new(0.0)?.sq_cdf(e2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn complete_shift_is_half_theta_a() {
        let m = crate::theory::solve_m(1.5);
        let c = normalizing_shift_c(1.5, &[], 0.0).unwrap();
        assert!((c + 0.75 * (1.0 - m * m)).abs() < 1e-15);
    }

    #[test]
    fn bipartite_shift_at_critical_point() {
        let c = normalizing_shift_c(1.0, &[-1.0], 0.0).unwrap();
        assert!((c + 0.5 * 2f64.ln()).abs() < 1e-15);
        let plus = normalizing_shift_c_plus(1.0, &[-1.0], 0.0).unwrap();
        assert!((plus - (-1.0 + 0.5 * 2f64.ln())).abs() < 1e-15);
        assert!(normalizing_shift_c(1.0, &[1.0], 0.0).is_err());
    }

    #[test]
    fn delta_logz_values() {
        assert_eq!(delta_logz_asymptotic(1.0, 0.0).unwrap().limit, 0.0);
        assert_eq!(delta_logz_asymptotic(1.5, 0.0).unwrap().limit, 0.0);
        let r = RegimeTheory::new(1.5).unwrap().r_info;
        assert!((delta_logz_asymptotic(1.5, 1.0).unwrap().limit - r / 2.0).abs() < 1e-15);
        let f1 = CriticalLaw::new(1.0).unwrap().log_normalizer();
        let f0 = CriticalLaw::new(0.0).unwrap().log_normalizer();
        assert!((delta_logz_asymptotic(1.0, 1.0).unwrap().limit - (f1 - f0)).abs() < 1e-15);
        assert!(delta_logz_asymptotic(0.8, 1.0).is_err());
    }

    #[test]
    fn mle_cdf_monotone_and_saturating() {
        let vals: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|&h| mle_critical_cdf(h).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
        assert!(mle_critical_cdf(20.0).unwrap() > 0.99);
    }

    #[test]
    fn mle_cdf_at_zero_matches_monte_carlo() {
        let law = CriticalLaw::new(0.0).unwrap();
        let e2 = law.moment2();
        let mut rng = rng_from_seed(21);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| law.sample(&mut rng).powi(2) <= e2)
            .count();
        let mc = hits as f64 / n as f64;
        assert!((mc - mle_critical_cdf(0.0).unwrap()).abs() < 0.002);
    }
}
