//! The experiment pipelines behind [`super::run_experiment`].

use std::time::Instant;

use rayon::prelude::*;

use super::config::{CalibrationMode, ExperimentConfig};
use super::table::{Cell, Table};
use crate::coupling::{
    default_row_tol, limiting_spectrum, spectrum, validate_assumptions, CouplingMatrix,
};
use crate::error::{Error, Result};
use crate::inference::{mle_from_law, mple};
use crate::sampler::{cw_log_z, StatisticLaw};
use crate::seed::{derive_seed, stream};
use crate::stats::{
    ks_distance, ks_pvalue, ks_two_sample, mean, normal_cdf, normal_quantile, variance,
    EmpiricalLaw, Quantile, TabulatedCdf,
};
use crate::testing::{
    asymptotic_critical_value, asymptotic_power_curve, calibrate_from_null, rejection_rate,
    simulate_statistics, AsymptoticOptions, Calibration, CriticalValue, ModelSampler, TestSpec,
};
use crate::theory::{delta_logz_asymptotic, mle_critical_cdf, sample_v, Regime, RegimeTheory};

/// Block of the null calibration draws.
pub const CALIBRATION_BLOCK: u64 = 0;
/// Block of the limit-law draws.
pub const LIMIT_BLOCK: u64 = 1 << 32;

/// Seed of model-draw block `j` (one per size or per `h`).
pub fn draw_block(j: usize) -> u64 {
    1 + j as u64
}

pub(crate) fn build_matrix(cfg: &ExperimentConfig, n: usize) -> Result<CouplingMatrix> {
    CouplingMatrix::build(
        cfg.family()?,
        n,
        Some(cfg.graph_seed.unwrap_or(cfg.master_seed)),
    )
}

fn quartiles(sorted: &EmpiricalLaw) -> Result<[f64; 3]> {
    Ok([
        sorted.quantile(0.25)?,
        sorted.quantile(0.5)?,
        sorted.quantile(0.75)?,
    ])
}

/// CDF of the critical MLE limit tabulated on `[-lim, lim]`.
fn mle_law_table(points: usize, lim: f64) -> Result<TabulatedCdf> {
    let xs: Vec<f64> = (0..points)
        .map(|i| -lim + 2.0 * lim * i as f64 / (points - 1) as f64)
        .collect();
    let cdf = xs
        .par_iter()
        .map(|&h| mle_critical_cdf(h))
        .collect::<Result<Vec<f64>>>()?;
    let mut mono = cdf;
    for i in 1..mono.len() {
        mono[i] = mono[i].max(mono[i - 1]);
    }
    TabulatedCdf::new(xs, mono)
}

pub(crate) fn estimator_law(cfg: &ExperimentConfig) -> Result<(Table, Table)> {
    let theory = RegimeTheory::new(cfg.theta0)?;
    let family = cfg.family()?;
    let reps = cfg.replications();
    let mut records = Table::new(&[
        "n",
        "replication_index",
        "derived_seed",
        "theta",
        "xbar",
        "xqx",
        "mple",
        "mple_exists",
        "mle",
        "mle_exists",
        "time_us",
    ]);
    let mut summary = Table::new(&[
        "n",
        "estimator",
        "count",
        "exist_rate",
        "mean_z",
        "var_z",
        "theory_var",
        "q25",
        "q50",
        "q75",
        "theory_q25",
        "theory_q50",
        "theory_q75",
        "ks_distance",
        "ks_pvalue",
    ]);
    let limit = limiting_spectrum(family, cfg.sizes()[0])?;
    let v_law = match theory.regime {
        Regime::Critical => Some(EmpiricalLaw::new(sample_v(
            0.0,
            limit.tail(),
            limit.kappa,
            cfg.limit_draws,
            derive_seed(cfg.master_seed, LIMIT_BLOCK),
        )?)?),
        Regime::Low => None,
    };
    let mle_table = match theory.regime {
        Regime::Critical if cfg.mle => Some(mle_law_table(801, 12.0)?),
        _ => None,
    };

    for (j, &n) in cfg.sizes().iter().enumerate() {
        let q = build_matrix(cfg, n)?;
        let law = if cfg.mle {
            StatisticLaw::enumerate(&q).ok()
        } else {
            None
        };
        let sampler = ModelSampler::new(&q, cfg.theta0)?;
        let block = derive_seed(cfg.master_seed, draw_block(j));
        let rows = (0..reps)
            .into_par_iter()
            .map(|i| {
                let start = Instant::now();
                let mut rng = stream(block, i as u64);
                let x = sampler.draw(i, &mut rng)?;
                let pl = mple(&x);
                let ml = law.as_ref().map(|l| mle_from_law(l, x.quadratic_form()));
                let (mle_v, mle_e) = ml.map_or((f64::NAN, false), |r| (r.value, r.exists));
                Ok(vec![
                    Cell::from(n),
                    Cell::from(i),
                    Cell::from(derive_seed(block, i as u64)),
                    Cell::from(cfg.theta0),
                    Cell::from(x.mean()),
                    Cell::from(x.quadratic_form()),
                    Cell::from(pl.value),
                    Cell::from(pl.exists),
                    Cell::from(mle_v),
                    Cell::from(mle_e),
                    Cell::from(start.elapsed().as_micros() as u64),
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        let scale = (n as f64).sqrt();
        let z_of = |col: usize| -> Vec<f64> {
            rows.iter()
                .map(|r| scale * (r[col].as_f64().unwrap_or(f64::NAN) - cfg.theta0))
                .collect()
        };
        let exist_of = |col: usize| -> f64 {
            rows.iter().filter(|r| r[col] == Cell::Bool(true)).count() as f64 / reps as f64
        };
        let mut push = |name: &str,
                        z: Vec<f64>,
                        exist: f64,
                        theory_cdf: &dyn Fn(&[f64]) -> (f64, f64, f64, [f64; 3])|
         -> Result<()> {
            let finite: Vec<f64> = z.iter().copied().filter(|v| v.is_finite()).collect();
            let emp = EmpiricalLaw::new(z.clone())?;
            let qs = quartiles(&emp)?;
            let (theory_var, d, p, tq) = theory_cdf(&z);
            summary.push(vec![
                n.into(),
                name.into(),
                z.len().into(),
                exist.into(),
                if finite.is_empty() {
                    f64::NAN
                } else {
                    mean(&finite)
                }
                .into(),
                if finite.len() < 2 {
                    f64::NAN
                } else {
                    variance(&finite)
                }
                .into(),
                theory_var.into(),
                qs[0].into(),
                qs[1].into(),
                qs[2].into(),
                tq[0].into(),
                tq[1].into(),
                tq[2].into(),
                d.into(),
                p.into(),
            ]);
            Ok(())
        };
        let zq = [normal_quantile(0.25), 0.0, normal_quantile(0.75)];
        match theory.regime {
            Regime::Low => {
                let var = 1.0 / theory.r_info;
                let sd = var.sqrt();
                let vs_normal = |z: &[f64]| {
                    let d = ks_distance(z, |t| normal_cdf(t / sd));
                    (var, d, ks_pvalue(d, z.len() as f64), zq.map(|v| v * sd))
                };
                push("mple", z_of(6), exist_of(7), &vs_normal)?;
                if law.is_some() {
                    push("mle", z_of(8), exist_of(9), &vs_normal)?;
                }
            }
            Regime::Critical => {
                let v = v_law.as_ref().expect("critical V law");
                let tq = quartiles(v)?;
                let vs_v = |z: &[f64]| {
                    let d = ks_two_sample(z, v.sorted());
                    let (a, b) = (z.len() as f64, v.len() as f64);
                    (f64::NAN, d, ks_pvalue(d, a * b / (a + b)), tq)
                };
                push("mple", z_of(6), exist_of(7), &vs_v)?;
                if let (Some(_), Some(t)) = (&law, &mle_table) {
                    let mq = [t.quantile(0.25)?, t.quantile(0.5)?, t.quantile(0.75)?];
                    let vs_mle = |z: &[f64]| {
                        let d = ks_distance(z, |h| t.cdf(h));
                        (f64::NAN, d, ks_pvalue(d, z.len() as f64), mq)
                    };
                    push("mle", z_of(8), exist_of(9), &vs_mle)?;
                }
            }
        }
        for r in rows {
            records.push(r);
        }
    }
    Ok((records, summary))
}

fn test_spec(cfg: &ExperimentConfig, kind: crate::testing::TestKind, n: usize) -> TestSpec {
    let calibration = match cfg.calibration {
        CalibrationMode::Asymptotic => Calibration::Asymptotic,
        CalibrationMode::MonteCarlo => Calibration::MonteCarloNull {
            reps: cfg.calibration_reps,
            seed: derive_seed(cfg.master_seed, CALIBRATION_BLOCK),
        },
    };
    let mut s = TestSpec::new(kind, cfg.theta0, cfg.alpha, n, calibration);
    s.boundary = cfg.boundary;
    s
}

pub(crate) fn power_curve(cfg: &ExperimentConfig) -> Result<(Table, Table)> {
    let n = cfg.sizes()[0];
    if cfg.sizes().len() > 1 {
        return Err(Error::config("n_grid", "a power curve uses a single n"));
    }
    let q = build_matrix(cfg, n)?;
    let family = q.family();
    let hs = cfg.h_values();

    let cvs: Vec<CriticalValue> = match cfg.calibration {
        CalibrationMode::Asymptotic => cfg
            .tests
            .iter()
            .map(|&k| asymptotic_critical_value(&test_spec(cfg, k, n), family))
            .collect::<Result<_>>()?,
        CalibrationMode::MonteCarlo => {
            let sampler = ModelSampler::new(&q, cfg.theta0)?;
            let null = simulate_statistics(
                &sampler,
                cfg.calibration_reps,
                derive_seed(cfg.master_seed, CALIBRATION_BLOCK),
            )?;
            cfg.tests
                .iter()
                .map(|&k| calibrate_from_null(k, cfg.alpha, cfg.boundary, &null, sampler.name()))
                .collect::<Result<_>>()?
        }
    };

    let theory = RegimeTheory::new(cfg.theta0)?;
    let limit = limiting_spectrum(family, n)?;
    let opts = AsymptoticOptions {
        draws: cfg.limit_draws,
        seed: derive_seed(cfg.master_seed, LIMIT_BLOCK),
        ..AsymptoticOptions::default()
    };
    let asym: Vec<Vec<_>> = cfg
        .tests
        .iter()
        .map(|&k| asymptotic_power_curve(k, &theory, &hs, cfg.alpha, &limit, &opts))
        .collect::<Result<_>>()?;

    let mut cols = vec!["h", "replication_index", "derived_seed", "theta", "u"];
    let stat_cols: Vec<String> = cfg
        .tests
        .iter()
        .map(|k| format!("stat_{}", k.name()))
        .collect();
    let rej_cols: Vec<String> = cfg
        .tests
        .iter()
        .map(|k| format!("reject_{}", k.name()))
        .collect();
    cols.extend(stat_cols.iter().map(String::as_str));
    cols.extend(rej_cols.iter().map(String::as_str));
    let mut records = Table::new(&cols);
    let mut summary = Table::new(&[
        "h",
        "kind",
        "theta",
        "empirical_power",
        "mc_stderr",
        "asymptotic_power",
        "asymptotic_mc_stderr",
        "critical_value",
        "gamma",
        "calibrated_level",
        "sampler",
    ]);
    let reps = cfg.replications();
    for (j, &h) in hs.iter().enumerate() {
        let theta = cfg.theta0 + h / (n as f64).sqrt();
        let sampler = ModelSampler::new(&q, theta)?;
        let block = derive_seed(cfg.master_seed, draw_block(j));
        let sims = simulate_statistics(&sampler, reps, block)?;
        for (i, r) in sims.iter().enumerate() {
            let mut row: Vec<Cell> = vec![
                h.into(),
                i.into(),
                derive_seed(block, i as u64).into(),
                theta.into(),
                r.u.into(),
            ];
            row.extend(cfg.tests.iter().map(|&k| Cell::from(r.get(k))));
            row.extend(
                cvs.iter()
                    .map(|cv| Cell::from(cv.decide(r.get(cv.kind), r.u))),
            );
            records.push(row);
        }
        for (t, cv) in cvs.iter().enumerate() {
            let (rate, se) = rejection_rate(cv, &sims);
            let a = &asym[t][j];
            summary.push(vec![
                h.into(),
                cv.kind.name().into(),
                theta.into(),
                rate.into(),
                se.into(),
                a.power.into(),
                a.mc_stderr.into(),
                cv.value.into(),
                cv.gamma.into(),
                cv.achieved_level.unwrap_or(f64::NAN).into(),
                cv.sampler.clone().into(),
            ]);
        }
    }
    Ok((records, summary))
}

/// Gaussian kernel density at `x` with bandwidth `bw` over sorted samples.
fn kde(sorted: &[f64], x: f64, bw: f64) -> f64 {
    let lo = sorted.partition_point(|&v| v < x - 8.0 * bw);
    let hi = sorted.partition_point(|&v| v <= x + 8.0 * bw);
    let s: f64 = sorted[lo..hi]
        .iter()
        .map(|&v| {
            let z = (x - v) / bw;
            (-0.5 * z * z).exp()
        })
        .sum();
    s / (sorted.len() as f64 * bw * (2.0 * std::f64::consts::PI).sqrt())
}

pub(crate) fn limit_law_density(cfg: &ExperimentConfig) -> Result<(Table, Table)> {
    let n = cfg.sizes()[0];
    let limit = limiting_spectrum(cfg.family()?, n)?;
    let v = EmpiricalLaw::new(sample_v(
        0.0,
        limit.tail(),
        limit.kappa,
        cfg.limit_draws,
        derive_seed(cfg.master_seed, LIMIT_BLOCK),
    )?)?;
    let s = v.sorted();
    let sd = variance(s).sqrt();
    let iqr = v.quantile(0.75)? - v.quantile(0.25)?;
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let bw = 0.9 * spread * (s.len() as f64).powf(-0.2);
    // V has a heavy left tail; the window stops where the MLE table is defined.
    let lo = v.quantile(0.05)?.clamp(-40.0, -5.0);
    let hi = v.quantile(0.995)?.clamp(5.0, 40.0);
    let pts = cfg.grid_points;
    let step = (hi - lo) / (pts - 1) as f64;
    let rows = (0..pts)
        .into_par_iter()
        .map(|i| {
            let x = lo + step * i as f64;
            let d = 1e-4;
            let cdf = mle_critical_cdf(x)?;
            let pdf = (mle_critical_cdf(x + d)? - mle_critical_cdf(x - d)?) / (2.0 * d);
            Ok(vec![
                Cell::from(x),
                Cell::from(if bw > 0.0 { kde(s, x, bw) } else { f64::NAN }),
                Cell::from(v.cdf(x)),
                Cell::from(pdf),
                Cell::from(cdf),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = Table::new(&["x", "mple_pdf", "mple_cdf", "mle_pdf", "mle_cdf"]);
    for r in rows {
        records.push(r);
    }
    let qs = quartiles(&v)?;
    let mut summary = Table::new(&[
        "family",
        "draws",
        "bandwidth",
        "mean",
        "variance",
        "q25",
        "q50",
        "q75",
        "exact_tail",
    ]);
    summary.push(vec![
        cfg.family()?.name().into(),
        s.len().into(),
        bw.into(),
        mean(s).into(),
        variance(s).into(),
        qs[0].into(),
        qs[1].into(),
        qs[2].into(),
        (limit.tail().is_empty() && limit.kappa == 0.0).into(),
    ]);
    Ok((records, summary))
}

pub(crate) fn normalizer_check(cfg: &ExperimentConfig) -> Result<(Table, Table)> {
    let mut records = Table::new(&["n", "h", "theta", "delta_logz", "predicted", "gap"]);
    let mut summary = Table::new(&[
        "h",
        "limit",
        "drift_per_sqrt_n",
        "final_gap",
        "gap_decreasing",
    ]);
    for h in cfg.h_values() {
        let shift = delta_logz_asymptotic(cfg.theta0, h)?;
        let mut gaps = Vec::new();
        for n in cfg.sizes() {
            let theta = cfg.theta0 + h / (n as f64).sqrt();
            let dz = cw_log_z(n, theta)? - cw_log_z(n, cfg.theta0)?;
            let pred = shift.predict(n as f64);
            let gap = (dz - pred).abs();
            gaps.push(gap);
            records.push(vec![
                n.into(),
                h.into(),
                theta.into(),
                dz.into(),
                pred.into(),
                gap.into(),
            ]);
        }
        summary.push(vec![
            h.into(),
            shift.limit.into(),
            shift.drift_per_sqrt_n.into(),
            gaps.last().copied().unwrap_or(f64::NAN).into(),
            gaps.windows(2).all(|w| w[1] < w[0]).into(),
        ]);
    }
    Ok((records, summary))
}

pub(crate) fn spectrum_report(cfg: &ExperimentConfig) -> Result<(Table, Table)> {
    let mut records = Table::new(&["n", "index", "finite_eig", "limit_eig"]);
    let mut summary = Table::new(&[
        "n",
        "family",
        "frobenius_sq",
        "gamma_sq",
        "kappa",
        "max_limit_error",
        "row_sum_max_dev",
        "entry_bound",
        "spectral_gap",
        "regular",
        "gap_ok",
    ]);
    for n in cfg.sizes() {
        let q = build_matrix(cfg, n)?;
        let s = spectrum(&q)?;
        let report = validate_assumptions(&q, default_row_tol(n), 1e-8);
        let limit = s.limit_eigs.clone().unwrap_or_default();
        let mut max_err: f64 = 0.0;
        for (i, &e) in s.finite_eigs.iter().enumerate() {
            let l = limit.get(i).copied();
            if let Some(l) = l {
                max_err = max_err.max((e - l).abs());
            }
            records.push(vec![
                n.into(),
                i.into(),
                e.into(),
                l.unwrap_or(f64::NAN).into(),
            ]);
        }
        summary.push(vec![
            n.into(),
            q.family().name().into(),
            s.frobenius_sq.into(),
            s.gamma_sq.unwrap_or(f64::NAN).into(),
            s.kappa.unwrap_or(f64::NAN).into(),
            max_err.into(),
            report.row_sum_max_dev.into(),
            report.entry_bound.into(),
            report.spectral_gap.into(),
            report.passes.regular.into(),
            report.passes.spectral_gap.into(),
        ]);
    }
    Ok((records, summary))
}
