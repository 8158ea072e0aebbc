//! Critical values and local powers from the limit laws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CriticalValue, TestKind, TestSpec};
use crate::coupling::{limiting_spectrum, Family, LimitSpectrum};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::stats::{normal_quantile, normal_sf, Quantile};
use crate::theory::{sample_v, CriticalLaw, Regime, RegimeTheory, VLimitLaw};

/// How the critical PL power is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlMethod {
    /// Fraction of `draws` samples of `V_h` above the critical value.
    MonteCarlo,
    /// Exact in `U_h`, averaged over `law_draws` samples of `S_1 - T_1`.
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticOptions {
    pub draws: usize,
    /// Draws of `S_1 - T_1` behind the `V_0` quantile.
    pub law_draws: usize,
    pub seed: u64,
    pub pl_method: PlMethod,
}

impl Default for AsymptoticOptions {
    fn default() -> Self {
        Self {
            draws: 1_000_000,
            law_draws: 200_000,
            seed: 0,
            pl_method: PlMethod::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPower {
    pub kind: TestKind,
    pub h: f64,
    pub power: f64,
    /// Zero when the power is computed by quadrature.
    pub mc_stderr: f64,
    /// Critical value on the scale of the limit law.
    pub limit_critical: f64,
}

fn regime(theta0: f64) -> Result<RegimeTheory> {
    RegimeTheory::new(theta0).map_err(|_| {
        Error::Unsupported(format!(
            "theta0 = {theta0} is in neither the low-temperature nor the critical regime"
        ))
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("alpha = {alpha} outside (0, 1)")))
    }
}

/// `K_n(alpha)` from the limit laws, without simulation of the model.
pub fn asymptotic_critical_value(spec: &TestSpec, family: Family) -> Result<CriticalValue> {
    spec.validate()?;
    let theory = regime(spec.theta0)?;
    let n = spec.n as f64;
    let alpha = spec.alpha;
    // x^T Q x - n Xbar^2 = x^T B x, and trace(B) = -1 for every zero-diagonal Q.
    let value = match theory.regime {
        Regime::Low => {
            let z = normal_quantile(1.0 - alpha);
            let sigma = theory.sigma_sq.unwrap_or(f64::NAN).sqrt();
            let ms = n * (theory.m + z * sigma / n.sqrt()).powi(2);
            match spec.kind {
                TestKind::Ms => ms,
                TestKind::Np => ms - 1.0,
                TestKind::Pl => spec.theta0 + z / (n * theory.r_info).sqrt(),
            }
        }
        Regime::Critical => match spec.kind {
            TestKind::Ms | TestKind::Np => {
                let c = CriticalLaw::new(0.0)?.quantile(1.0 - alpha / 2.0)?;
                let ms = n.sqrt() * c * c;
                if spec.kind == TestKind::Ms {
                    ms
                } else {
                    ms - 1.0
                }
            }
            TestKind::Pl => {
                let limit = limiting_spectrum(family, spec.n)?;
                let law = VLimitLaw::new(
                    0.0,
                    limit.tail(),
                    limit.kappa,
                    AsymptoticOptions::default().law_draws,
                    0,
                )?;
                1.0 + law.quantile(1.0 - alpha)? / n.sqrt()
            }
        },
    };
    Ok(CriticalValue {
        kind: spec.kind,
        value,
        gamma: 0.0,
        p_above: None,
        p_at: None,
        conservative_level: None,
        achieved_level: None,
        sampler: "asymptotic".into(),
        reps: 0,
    })
}

/// Local power at `theta0 + h / sqrt(n)` as `n` grows, for one `h`.
pub fn asymptotic_power(
    kind: TestKind,
    theory: &RegimeTheory,
    h: f64,
    alpha: f64,
    limit: &LimitSpectrum,
    opts: &AsymptoticOptions,
) -> Result<AsymptoticPower> {
    Ok(asymptotic_power_curve(kind, theory, &[h], alpha, limit, opts)?.remove(0))
}

/// [`asymptotic_power`] over a grid of `h`, sharing the null-side work.
pub fn asymptotic_power_curve(
    kind: TestKind,
    theory: &RegimeTheory,
    hs: &[f64],
    alpha: f64,
    limit: &LimitSpectrum,
    opts: &AsymptoticOptions,
) -> Result<Vec<AsymptoticPower>> {
    check_alpha(alpha)?;
    if hs.iter().any(|h| !h.is_finite()) {
        return Err(Error::param("h must be finite"));
    }
    let point = |h: f64, power: f64, mc_stderr: f64, limit_critical: f64| AsymptoticPower {
        kind,
        h,
        power,
        mc_stderr,
        limit_critical,
    };
    match theory.regime {
        Regime::Low => {
            let z = normal_quantile(1.0 - alpha);
            let root_r = theory.r_info.sqrt();
            Ok(hs
                .iter()
                .map(|&h| point(h, normal_sf(z - h * root_r), 0.0, z))
                .collect())
        }
        Regime::Critical => match kind {
            TestKind::Ms | TestKind::Np => {
                let c = CriticalLaw::new(0.0)?.quantile(1.0 - alpha / 2.0)?;
                hs.par_iter()
                    .map(|&h| {
                        let law = CriticalLaw::new(h)?;
                        let p = (2.0 * (1.0 - law.cdf(c))).clamp(0.0, 1.0);
                        Ok(point(h, p, 0.0, c))
                    })
                    .collect()
            }
            TestKind::Pl => {
                if opts.draws == 0 || opts.law_draws == 0 {
                    return Err(Error::param("PL power needs positive draw counts"));
                }
                let null = VLimitLaw::new(
                    0.0,
                    limit.tail(),
                    limit.kappa,
                    opts.law_draws,
                    derive_seed(opts.seed, 0),
                )?;
                let c = null.quantile(1.0 - alpha)?;
                hs.iter()
                    .enumerate()
                    .map(|(i, &h)| {
                        let stream = derive_seed(opts.seed, 1 + i as u64);
                        match opts.pl_method {
                            PlMethod::MonteCarlo => {
                                let v = sample_v(h, limit.tail(), limit.kappa, opts.draws, stream)?;
                                let n = v.len() as f64;
                                let p = v.iter().filter(|&&x| x > c).count() as f64 / n;
                                Ok(point(h, p, (p * (1.0 - p) / n).sqrt(), c))
                            }
                            PlMethod::Conditional => {
                                let law = VLimitLaw::new(
                                    h,
                                    limit.tail(),
                                    limit.kappa,
                                    opts.law_draws,
                                    stream,
                                )?;
                                let (p, se) = law.exceedance(c);
                                Ok(point(h, p, se, c))
                            }
                        }
                    })
                    .collect()
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::Calibration;

    fn complete() -> LimitSpectrum {
        limiting_spectrum(Family::Complete, 100).unwrap()
    }

    #[test]
    fn zero_h_gives_the_level() {
        let opts = AsymptoticOptions {
            draws: 200_000,
            ..Default::default()
        };
        let low = RegimeTheory::new(1.5).unwrap();
        let crit = RegimeTheory::new(1.0).unwrap();
        for kind in TestKind::ALL {
            let p = asymptotic_power(kind, &low, 0.0, 0.05, &complete(), &opts).unwrap();
            assert!((p.power - 0.05).abs() < 1e-9);
        }
        let ms = asymptotic_power(TestKind::Ms, &crit, 0.0, 0.05, &complete(), &opts).unwrap();
        assert!((ms.power - 0.05).abs() < 1e-7, "{}", ms.power);
        let pl = asymptotic_power(TestKind::Pl, &crit, 0.0, 0.05, &complete(), &opts).unwrap();
        assert!((pl.power - 0.05).abs() < 4.0 * pl.mc_stderr);
    }

    #[test]
    fn critical_ms_value_from_the_null_quantile() {
        let spec = TestSpec::new(TestKind::Ms, 1.0, 0.05, 400, Calibration::Asymptotic);
        let k = asymptotic_critical_value(&spec, Family::Complete).unwrap();
        let c = CriticalLaw::new(0.0).unwrap().quantile(0.975).unwrap();
        assert!((k.value - 20.0 * c * c).abs() < 1e-9);
        let law = CriticalLaw::new(0.0).unwrap();
        assert!((2.0 * (1.0 - law.cdf(c)) - 0.05).abs() < 1e-7);
        let np = TestSpec {
            kind: TestKind::Np,
            ..spec
        };
        let k_np = asymptotic_critical_value(&np, Family::Complete).unwrap();
        assert!((k.value - k_np.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn low_temperature_values() {
        let t = RegimeTheory::new(1.5).unwrap();
        let spec = TestSpec::new(TestKind::Pl, 1.5, 0.05, 1600, Calibration::Asymptotic);
        let k = asymptotic_critical_value(&spec, Family::Complete).unwrap();
        let z = 1.6448536269514722;
        assert!((k.value - (1.5 + z / (1600.0 * t.r_info).sqrt())).abs() < 1e-9);
        let p = asymptotic_power(
            TestKind::Np,
            &t,
            2.0,
            0.05,
            &complete(),
            &Default::default(),
        )
        .unwrap();
        assert!((p.power - normal_sf(z - 2.0 * t.r_info.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn below_one_is_out_of_scope() {
        let t = RegimeTheory::new(0.5);
        assert!(t.is_err());
        let spec = TestSpec::new(TestKind::Ms, 0.5, 0.05, 100, Calibration::Asymptotic);
        assert!(matches!(
            asymptotic_critical_value(&spec, Family::Complete),
            Err(Error::Unsupported(_))
        ));
    }
}
