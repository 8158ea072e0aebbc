//! Monte Carlo calibration under the null and empirical power.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    asymptotic_critical_value, test_statistic, Boundary, Calibration, CriticalValue, TestKind,
    TestSpec,
};
use crate::coupling::{CouplingMatrix, Family};
use crate::error::{Error, Result};
use crate::sampler::{default_burn_in, glauber_sample, CurieWeissSampler, SpinConfiguration};
use crate::seed::{stream, StreamRng};
use crate::stats::{EmpiricalLaw, Quantile};

/// Draws model configurations: exactly through the auxiliary magnetization for
/// the complete family, by Glauber dynamics otherwise.
#[derive(Debug, Clone)]
pub enum ModelSampler<'a> {
    CurieWeiss(Box<CurieWeissSampler>),
    Glauber {
        q: &'a CouplingMatrix,
        theta: f64,
        burn_in: usize,
    },
}

impl<'a> ModelSampler<'a> {
    pub fn new(q: &'a CouplingMatrix, theta: f64) -> Result<Self> {
        if q.family() == Family::Complete {
            Ok(ModelSampler::CurieWeiss(Box::new(CurieWeissSampler::new(
                q.n(),
                theta,
            )?)))
        } else {
            Ok(ModelSampler::Glauber {
                q,
                theta,
                burn_in: default_burn_in(q.n(), theta),
            })
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSampler::CurieWeiss(_) => "cw_aux",
            ModelSampler::Glauber { .. } => "glauber",
        }
    }

    /// Replication `index` of the seeded family `master`, drawn from `stream(master, index)`.
    pub fn sample(&self, master: u64, index: usize) -> Result<SpinConfiguration> {
        self.draw(index, &mut stream(master, index as u64))
    }

    /// Glauber replications at low temperature start alternately from all
    /// `+1` and all `-1`.
    pub(crate) fn draw(&self, index: usize, rng: &mut StreamRng) -> Result<SpinConfiguration> {
        match self {
            ModelSampler::CurieWeiss(s) => {
                let (ups, _) = s.sample_up_count(rng)?;
                s.configuration_from_count(ups)
            }
            ModelSampler::Glauber { q, theta, burn_in } => {
                let seed: u64 = rng.random();
                let start = if index.is_multiple_of(2) { 1 } else { -1 };
                let init = vec![start; q.n()];
                let init = (*theta > 1.0).then_some(init.as_slice());
                glauber_sample(q, *theta, 1, *burn_in, seed, init)
            }
        }
    }
}

/// All three statistics of one replication plus the boundary coin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub stats: [f64; 3],
    pub u: f64,
}

impl Replicate {
    pub fn get(&self, kind: TestKind) -> f64 {
        self.stats[kind.index()]
    }
}

/// `reps` replications; replication `i` uses the stream `stream(seed, i)`.
pub fn simulate_statistics(
    sampler: &ModelSampler<'_>,
    reps: usize,
    seed: u64,
) -> Result<Vec<Replicate>> {
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let x = sampler.draw(i, &mut rng)?;
            let stats = TestKind::ALL.map(|k| test_statistic(k, &x));
            Ok(Replicate {
                stats,
                u: rng.random(),
            })
        })
        .collect()
}

/// Critical value from simulated null statistics: the `ceil((1 - alpha) N)`-th
/// order statistic, with the boundary probability `gamma` when randomized.
pub fn calibrate_from_null(
    kind: TestKind,
    alpha: f64,
    boundary: Boundary,
    null: &[Replicate],
    sampler: &str,
) -> Result<CriticalValue> {
    let stats: Vec<f64> = null.iter().map(|r| r.get(kind)).collect();
    let law = EmpiricalLaw::new(stats)?;
    let k = law.quantile(1.0 - alpha)?;
    if !k.is_finite() {
        return Err(Error::numeric(format!(
            "{} null quantile is not finite",
            kind.name()
        )));
    }
    let mut cv = CriticalValue {
        kind,
        value: k,
        gamma: 0.0,
        p_above: None,
        p_at: None,
        conservative_level: None,
        achieved_level: None,
        sampler: sampler.to_string(),
        reps: null.len(),
    };
    let tol = cv.tie_tolerance();
    let n = law.len() as f64;
    let above = law.sorted().iter().filter(|&&s| s > k + tol).count() as f64 / n;
    let at = law
        .sorted()
        .iter()
        .filter(|&&s| (s - k).abs() <= tol)
        .count() as f64
        / n;
    if boundary == Boundary::Randomized && at > 0.0 {
        cv.gamma = ((alpha - above) / at).clamp(0.0, 1.0);
    }
    cv.p_above = Some(above);
    cv.p_at = Some(at);
    cv.conservative_level = Some(above);
    cv.achieved_level = Some(above + cv.gamma * at);
    Ok(cv)
}

/// `K_n(alpha)` for `spec` on `q`.
pub fn calibrate(spec: &TestSpec, q: &CouplingMatrix) -> Result<CriticalValue> {
    spec.validate()?;
    if q.n() != spec.n {
        return Err(Error::Dimension {
            expected: spec.n,
            actual: q.n(),
        });
    }
    match spec.calibration {
        Calibration::Asymptotic => asymptotic_critical_value(spec, q.family()),
        Calibration::MonteCarloNull { reps, seed } => {
            let sampler = ModelSampler::new(q, spec.theta0)?;
            let null = simulate_statistics(&sampler, reps, seed)?;
            calibrate_from_null(spec.kind, spec.alpha, spec.boundary, &null, sampler.name())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub kind: TestKind,
    pub h: f64,
    /// `theta0 + h / sqrt(n)`.
    pub theta: f64,
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub stderr: f64,
    pub reps: usize,
}

/// Rejection rate of `cv` over simulated replications.
pub fn rejection_rate(cv: &CriticalValue, sims: &[Replicate]) -> (f64, f64) {
    let n = sims.len() as f64;
    let k = sims
        .iter()
        .filter(|r| cv.decide(r.get(cv.kind), r.u))
        .count() as f64;
    let p = k / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

/// Rejection rate of `cv` over `reps` samples drawn at `theta0 + h / sqrt(n)`.
pub fn empirical_power(
    spec: &TestSpec,
    cv: &CriticalValue,
    q: &CouplingMatrix,
    h: f64,
    reps: usize,
    seed: u64,
) -> Result<PowerEstimate> {
    if !(h >= 0.0) {
        return Err(Error::param(format!("h = {h} must be nonnegative")));
    }
    if reps == 0 {
        return Err(Error::param("reps must be at least 1"));
    }
    let theta = spec.theta0 + h / (q.n() as f64).sqrt();
    let sampler = ModelSampler::new(q, theta)?;
    let sims = simulate_statistics(&sampler, reps, seed)?;
    let (rate, stderr) = rejection_rate(cv, &sims);
    Ok(PowerEstimate {
        kind: cv.kind,
        h,
        theta,
        rate,
        stderr,
        reps,
    })
}
