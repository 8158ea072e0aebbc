//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use ising_infer::coupling::{limiting_spectrum, spectrum, CouplingMatrix, Family};
use ising_infer::inference::{existence_bounds, mle_exact, mple, pseudo_score};
use ising_infer::sampler::{
    apply_sweep_kernel, configuration_pmf, cw_log_z, default_burn_in, exact_enumerate,
    glauber_sample, CurieWeissSampler, SpinConfiguration, StatisticLaw,
};
use ising_infer::seed::{derive_seed, stream};
use ising_infer::stats::{
    ks_distance, ks_pvalue, normal_cdf, total_variation, EmpiricalLaw, Quantile,
};
use ising_infer::testing::{
    asymptotic_power_curve, calibrate_from_null, rejection_rate, simulate_statistics,
    AsymptoticOptions, Boundary, ModelSampler, TestKind,
};
use ising_infer::theory::{
    delta_logz_asymptotic, log_normalizer, sample_v, sigma_sq, solve_m, CriticalLaw, RegimeTheory,
};

const MASTER: u64 = 20_240_601;

// Pinned tolerances and budgets.
const SPECTRUM_TOL: f64 = 1e-10;
const CYCLIC_TOL: f64 = 1e-8;
const CW_ORACLE_TOL: f64 = 1e-9;
const NORMALIZER_GAP_TOL: f64 = 0.02;
const CRITICAL_KS_TOL: f64 = 0.05;
const LOW_KS_LEVEL: f64 = 0.01;
const QUARTILE_TOL: f64 = 0.1;
const DERIVATIVE_TOL: f64 = 1e-6;
const F_PRIME_TOL: f64 = 1e-6;
const F0_TOL: f64 = 1e-8;
const STATIONARITY_TOL: f64 = 1e-10;
const TV_TOL: f64 = 0.03;
const SIGMAS: f64 = 3.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn complete(n: usize) -> CouplingMatrix {
    CouplingMatrix::build(Family::Complete, n, None).unwrap()
}

fn c1_spectrum() -> Verdict {
    let bip = spectrum(&CouplingMatrix::build(Family::Bipartite, 100, None).unwrap()).unwrap();
    let mut want = vec![0.0; 100];
    want[0] = 1.0;
    want[1] = -1.0;
    let bip_err = bip
        .finite_eigs
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let qp =
        spectrum(&CouplingMatrix::build(Family::QPartite { q: 3 }, 12, None).unwrap()).unwrap();
    let qp_err = (qp.finite_eigs[1] + 0.5).abs();

    let cyc = spectrum(&CouplingMatrix::build(Family::CyclicQPartite { q: 5 }, 20, None).unwrap())
        .unwrap();
    let mut got = cyc.finite_eigs.clone();
    got.sort_by(f64::total_cmp);
    let mut want: Vec<f64> = (0..5)
        .map(|a| (2.0 * std::f64::consts::PI * a as f64 / 5.0).cos())
        .chain(std::iter::repeat_n(0.0, 15))
        .collect();
    want.sort_by(f64::total_cmp);
    let cyc_err = got
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    verdict(
        bip_err < SPECTRUM_TOL && qp_err < SPECTRUM_TOL && cyc_err < CYCLIC_TOL,
        format!("bipartite {bip_err:.1e}, q-partite {qp_err:.1e}, cyclic {cyc_err:.1e}"),
    )
}

/// Brute force over all `2^n` configurations of `exp(theta n xbar^2 / 2)`.
fn brute_cw_log_z(n: usize, theta: f64) -> f64 {
    let logs: Vec<f64> = (0u32..1 << n)
        .map(|m| {
            let s = 2.0 * m.count_ones() as f64 - n as f64;
            theta * s * s / (2.0 * n as f64)
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
}

fn c2_partition() -> Verdict {
    let mut exact_ok = true;
    for n in 2..=20 {
        for family in [Family::Complete, Family::Bipartite] {
            if family == Family::Bipartite && n % 2 == 1 {
                continue;
            }
            let q = CouplingMatrix::build(family, n, None).unwrap();
            exact_ok &=
                exact_enumerate(&q, 0.0).unwrap().log_z == n as f64 * std::f64::consts::LN_2;
        }
    }
    for n in [6, 11, 14] {
        let q = complete(n);
        let dense = CouplingMatrix::from_dense(n, q.to_dense().unwrap()).unwrap();
        exact_ok &=
            exact_enumerate(&dense, 0.0).unwrap().log_z == n as f64 * std::f64::consts::LN_2;
    }
    let worst = (8..=20)
        .into_par_iter()
        .map(|n| {
            [0.3, 1.0, 1.7, 3.0]
                .iter()
                .map(|&t| (cw_log_z(n, t).unwrap() - brute_cw_log_z(n, t)).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    verdict(
        exact_ok && worst < CW_ORACLE_TOL,
        format!("theta=0 exact: {exact_ok}, cw vs brute force max {worst:.1e}"),
    )
}

fn c3_normalizer() -> Verdict {
    let sizes = [1_000usize, 10_000, 100_000, 1_000_000];
    let gaps = |theta0: f64, h: f64| -> Vec<f64> {
        let shift = delta_logz_asymptotic(theta0, h).unwrap();
        sizes
            .iter()
            .map(|&n| {
                let nf = n as f64;
                let d = cw_log_z(n, theta0 + h / nf.sqrt()).unwrap() - cw_log_z(n, theta0).unwrap();
                (d - shift.predict(nf)).abs()
            })
            .collect()
    };
    let low = gaps(1.5, 1.0);
    let crit = gaps(1.0, 1.0);
    let decreasing = low.windows(2).all(|w| w[1] < w[0]);
    let pass = decreasing && low[3] < NORMALIZER_GAP_TOL && crit[3] < NORMALIZER_GAP_TOL;
    verdict(
        pass,
        format!(
            "low gaps {:?} decreasing={decreasing}; critical gap at 1e6 {:.2e}",
            low.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>(),
            crit[3]
        ),
    )
}

fn c4_critical_magnetization() -> Verdict {
    let n = 10_000;
    let reps = 2000;
    let s = CurieWeissSampler::new(n, 1.0).unwrap();
    let scale = (n as f64).powf(0.25);
    let draws: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let (ups, _) = s
                .sample_up_count(&mut stream(derive_seed(MASTER, 4), i))
                .unwrap();
            scale * (2.0 * ups as f64 - n as f64) / n as f64
        })
        .collect();
    let law = CriticalLaw::new(0.0).unwrap();
    let d = ks_distance(&draws, |u| law.cdf(u));
    verdict(d < CRITICAL_KS_TOL, format!("KS distance {d:.4}"))
}

fn mple_draws(n: usize, theta: f64, reps: u64, block: u64) -> Vec<f64> {
    let s = CurieWeissSampler::new(n, theta).unwrap();
    let root_n = (n as f64).sqrt();
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let (ups, _) = s
                .sample_up_count(&mut stream(derive_seed(MASTER, block), i))
                .unwrap();
            let x = s.configuration_from_count(ups).unwrap();
            root_n * (mple(&x).value - theta)
        })
        .collect()
}

fn c5_low_estimator() -> Verdict {
    let m = solve_m(1.5);
    let r = m * m * sigma_sq(1.5).unwrap();
    let sd = r.recip().sqrt();
    let z = mple_draws(1600, 1.5, 400, 5);
    let d = ks_distance(&z, |v| normal_cdf(v / sd));
    let p = ks_pvalue(d, z.len() as f64);
    verdict(
        p >= LOW_KS_LEVEL,
        format!("R(1.5) = {r:.6}, KS {d:.4}, p = {p:.3}"),
    )
}

fn c6_critical_mple() -> Verdict {
    let z = mple_draws(10_000, 1.0, 2000, 6);
    let finite = z.iter().all(|v| v.is_finite());
    let ez = EmpiricalLaw::new(z).unwrap();
    let v = EmpiricalLaw::new(sample_v(0.0, &[], 0.0, 1_000_000, derive_seed(MASTER, 60)).unwrap())
        .unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for p in [0.25, 0.5, 0.75] {
        let a = ez.quantile(p).unwrap();
        let b = v.quantile(p).unwrap();
        worst = worst.max((a - b).abs());
        // Standard error of a sample quantile from the limit density.
        let dens = 0.02 / (v.quantile(p + 0.01).unwrap() - v.quantile(p - 0.01).unwrap());
        let se = (p * (1.0 - p) / ez.len() as f64).sqrt() / dens;
        parts.push(format!("{a:.3}/{b:.3} (se {se:.3})"));
    }
    verdict(
        finite && worst < QUARTILE_TOL,
        format!(
            "quartiles estimator/limit {}; max diff {worst:.3}",
            parts.join(", ")
        ),
    )
}

/// A strict sign change of `g` over `[-l, l]`; `g` is nondecreasing.
fn has_root(g: impl Fn(f64) -> f64, l: f64) -> bool {
    g(-l) < 0.0 && g(l) > 0.0
}

fn c7_existence() -> Verdict {
    let mut checked = 0;
    let mut disagree = 0;
    for family in [Family::Complete, Family::Bipartite] {
        let q = CouplingMatrix::build(family, 8, None).unwrap();
        let law = StatisticLaw::enumerate(&q).unwrap();
        let bounds = existence_bounds(&q);
        let a_n = bounds.a_n.unwrap();
        for mask in 0u32..256 {
            let spins: Vec<i8> = (0..8)
                .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
                .collect();
            let x = SpinConfiguration::new(&q, spins).unwrap();
            let xqx = x.quadratic_form();
            let t = x.fields().to_vec();
            let direct_pl = has_root(|th| pseudo_score(&t, th) - xqx, 200.0);
            let direct_ml = has_root(|th| law.dlog_z(th) - 0.5 * xqx, 200.0);
            let analytic_ml = a_n < xqx - 1e-9 && xqx < bounds.b_n - 1e-9;
            let pl = mple(&x).exists;
            let ml = mle_exact(&x, &q).unwrap().exists;
            checked += 1;
            if pl != direct_pl || ml != direct_ml || analytic_ml != direct_ml {
                disagree += 1;
            }
        }
    }
    verdict(
        disagree == 0,
        format!("{checked} configurations, {disagree} disagreements"),
    )
}

fn c8_derivative() -> Verdict {
    let step = 1e-5;
    let worst = [1.1, 1.5, 2.0, 5.0]
        .iter()
        .map(|&t| {
            let fd = (solve_m(t + step) - solve_m(t - step)) / (2.0 * step);
            (solve_m(t) * sigma_sq(t).unwrap() - fd).abs()
        })
        .fold(0.0, f64::max);
    verdict(
        worst < DERIVATIVE_TOL,
        format!("max |m sigma^2 - dm| {worst:.1e}"),
    )
}

fn c9_log_normalizer() -> Verdict {
    let step = 1e-4;
    let worst = [-1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|&h| {
            let fd = (log_normalizer(h + step).unwrap() - log_normalizer(h - step).unwrap())
                / (2.0 * step);
            (fd - 0.5 * CriticalLaw::new(h).unwrap().moment2()).abs()
        })
        .fold(0.0, f64::max);
    let closed = 0.25 * 12f64.ln() + ln_gamma(0.25) - 2f64.ln();
    let f0_err = (log_normalizer(0.0).unwrap() - closed).abs();
    verdict(
        worst < F_PRIME_TOL && f0_err < F0_TOL,
        format!("max |F' - E U^2 / 2| {worst:.1e}, F(0) error {f0_err:.1e}"),
    )
}

fn c10_power_ordering() -> Verdict {
    let theory = RegimeTheory::new(1.0).unwrap();
    let opts = AsymptoticOptions {
        seed: derive_seed(MASTER, 10),
        ..AsymptoticOptions::default()
    };
    let curve = |family: Family, kind: TestKind, hs: &[f64]| {
        let limit = limiting_spectrum(family, 100).unwrap();
        asymptotic_power_curve(kind, &theory, hs, 0.05, &limit, &opts).unwrap()
    };
    let grid = [0.0, 0.5, 1.0, 2.0, 3.0];
    let ms = curve(Family::Bipartite, TestKind::Ms, &grid);
    let np = curve(Family::Bipartite, TestKind::Np, &grid);
    let same = ms.iter().zip(&np).all(|(a, b)| a.power == b.power);
    let pl = curve(Family::Bipartite, TestKind::Pl, &[1.0]);
    let gap = ms[2].power - pl[0].power;
    let bip_ok = gap > SIGMAS * pl[0].mc_stderr;

    let hs = [0.5, 1.0, 2.0];
    let cms = curve(Family::Complete, TestKind::Ms, &hs);
    let cpl = curve(Family::Complete, TestKind::Pl, &hs);
    let mut complete_ok = true;
    let mut diffs = Vec::new();
    for (a, b) in cms.iter().zip(&cpl) {
        let d = (a.power - b.power).abs();
        complete_ok &= d < SIGMAS * b.mc_stderr;
        diffs.push(format!("{d:.4}/{:.4}", SIGMAS * b.mc_stderr));
    }
    verdict(
        same && bip_ok && complete_ok,
        format!(
            "bipartite NP=MS {same}, MS(1)-PL(1) {gap:.4} vs 3se {:.4}; complete |MS-PL|/3se {}",
            SIGMAS * pl[0].mc_stderr,
            diffs.join(", ")
        ),
    )
}

fn c11_level() -> Verdict {
    const ALPHA: f64 = 0.05;
    const FRESH: usize = 10_000;
    const CALIBRATION: usize = 100_000;
    let band = SIGMAS * (ALPHA * (1.0 - ALPHA) / FRESH as f64).sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, theta0, n, block) in [("low", 1.5, 400, 110), ("critical", 1.0, 2500, 112)] {
        let q = complete(n);
        let sampler = ModelSampler::new(&q, theta0).unwrap();
        let null = simulate_statistics(&sampler, CALIBRATION, derive_seed(MASTER, block)).unwrap();
        let fresh = simulate_statistics(&sampler, FRESH, derive_seed(MASTER, block + 1)).unwrap();
        for kind in TestKind::ALL {
            let cv = calibrate_from_null(kind, ALPHA, Boundary::Randomized, &null, sampler.name())
                .unwrap();
            let (rate, _) = rejection_rate(&cv, &fresh);
            pass &= (rate - ALPHA).abs() <= band;
            parts.push(format!("{label}/{} {rate:.4}", kind.name()));
        }
    }
    verdict(pass, format!("band +-{band:.4}: {}", parts.join(", ")))
}

fn c12_glauber() -> Verdict {
    let mut stat_err: f64 = 0.0;
    for (family, n) in [
        (Family::Complete, 12),
        (Family::Bipartite, 12),
        (Family::QPartite { q: 3 }, 9),
        (Family::RandomRegular { d: 3 }, 10),
    ] {
        let q = CouplingMatrix::build(family, n, Some(MASTER)).unwrap();
        for theta in [0.5, 1.0, 2.0] {
            let pmf = configuration_pmf(&q, theta).unwrap();
            let next = apply_sweep_kernel(&q, theta, &pmf).unwrap();
            let err = pmf
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            stat_err = stat_err.max(err);
        }
    }

    let theta = 0.5;
    let reps = 40_000u64;
    let mut worst_tv: f64 = 0.0;
    for family in [Family::Complete, Family::Bipartite] {
        let q = CouplingMatrix::build(family, 12, None).unwrap();
        let exact = exact_enumerate(&q, theta).unwrap().suff_stat_pmf;
        let burn = default_burn_in(12, theta);
        let values: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|i| {
                glauber_sample(
                    &q,
                    theta,
                    1,
                    burn,
                    derive_seed(derive_seed(MASTER, 12), i),
                    None,
                )
                .unwrap()
                .quadratic_form()
            })
            .collect();
        let mut counts = vec![0.0; exact.len()];
        for v in values {
            let k = exact
                .iter()
                .position(|(e, _)| (e - v).abs() < 1e-9)
                .expect("value in support");
            counts[k] += 1.0 / reps as f64;
        }
        let p: Vec<f64> = exact.iter().map(|(_, p)| *p).collect();
        worst_tv = worst_tv.max(total_variation(&counts, &p));
    }
    verdict(
        stat_err < STATIONARITY_TOL && worst_tv < TV_TOL,
        format!("kernel stationarity {stat_err:.1e}, max TV {worst_tv:.4}"),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Verdict);

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 12] = [
        (1, "spectrum exactness", secs(1), c1_spectrum),
        (2, "partition-function oracles", secs(30), c2_partition),
        (3, "normalizer asymptotics", secs(120), c3_normalizer),
        (
            4,
            "critical magnetization law",
            secs(300),
            c4_critical_magnetization,
        ),
        (
            5,
            "low-temperature estimator law",
            secs(600),
            c5_low_estimator,
        ),
        (6, "critical MPLE law", secs(900), c6_critical_mple),
        (7, "existence characterization", secs(10), c7_existence),
        (8, "derivative identity", secs(1), c8_derivative),
        (9, "log-normalizer identities", secs(1), c9_log_normalizer),
        (10, "power ordering", secs(300), c10_power_ordering),
        (11, "level validity", secs(900), c11_level),
        (12, "Glauber correctness", secs(300), c12_glauber),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| verdict(false, "panicked"));
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {name}: {} ({}; {:.2}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
