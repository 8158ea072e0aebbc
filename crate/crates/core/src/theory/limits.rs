//! Eigenvalue-series laws `S_theta`, `T_theta` and the critical PL limit `V_h`.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::critical::CriticalLaw;
use super::regime::solve_m;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};
use crate::stats::check_probability;

pub const DEFAULT_TRUNCATION: usize = 64;
/// Draws per independent stream. Fixed so results do not depend on the thread count.
const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Serialize)]
pub struct LimitSampleSet {
    pub theta: f64,
    pub truncation: usize,
    pub kappa: f64,
    pub samples_s: Vec<f64>,
    pub samples_t: Vec<f64>,
    pub samples_v: Option<Vec<f64>>,
    pub seed: u64,
}

impl LimitSampleSet {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        match &self.samples_v {
            Some(v) => {
                writeln!(w, "S,T,V")?;
                for ((s, t), v) in self.samples_s.iter().zip(&self.samples_t).zip(v) {
                    writeln!(w, "{s:.16e},{t:.16e},{v:.16e}")?;
                }
            }
            None => {
                writeln!(w, "S,T")?;
                for (s, t) in self.samples_s.iter().zip(&self.samples_t) {
                    writeln!(w, "{s:.16e},{t:.16e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Coefficients of one `(S, T)` draw, precomputed from the spectrum.
struct SeriesTerms {
    a: f64,
    lambdas: Vec<f64>,
    inv: Vec<f64>,
    constant_s: f64,
    w_sd: f64,
    kappa: f64,
}

impl SeriesTerms {
    fn new(theta: f64, tail_eigs: &[f64], kappa: f64, truncation: usize) -> Result<Self> {
        if !(kappa >= 0.0) {
            return Err(Error::param(format!(
                "kappa must be nonnegative, got {kappa}"
            )));
        }
        let m = solve_m(theta);
        let a = 1.0 - m * m;
        let lambdas: Vec<f64> = tail_eigs.iter().copied().take(truncation).collect();
        let mut inv = Vec::with_capacity(lambdas.len());
        for &l in &lambdas {
            let denom = 1.0 - theta * a * l;
            if !(denom > 0.0) {
                return Err(Error::domain(format!(
                    "1 - theta (1 - m^2) lambda = {denom} <= 0 for lambda = {l}"
                )));
            }
            inv.push(1.0 / denom);
        }
        Ok(Self {
            a,
            constant_s: -lambdas.iter().sum::<f64>() - 1.0 + a * theta * kappa,
            lambdas,
            inv,
            w_sd: (2.0 * kappa).sqrt(),
            kappa,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let mut s = self.constant_s;
        let mut t = self.kappa;
        for (&l, &inv) in self.lambdas.iter().zip(&self.inv) {
            let z: f64 = rng.sample(StandardNormal);
            let y = z * z * inv;
            s += l * y;
            t += l * l * y;
        }
        if self.w_sd > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            s += self.w_sd * z;
        }
        (self.a * s, self.a * t)
    }
}

fn chunked<T: Send, F>(reps: usize, seed: u64, f: F) -> Vec<T>
where
    F: Fn(&mut crate::seed::StreamRng) -> T + Sync,
{
    let chunks = reps.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let len = CHUNK.min(reps - c * CHUNK);
            let mut rng = stream(seed, c as u64);
            (0..len).map(|_| f(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// `reps` joint draws of `(S_theta, T_theta)`. `tail_eigs` are the limiting
/// eigenvalues `lambda_j`, `j >= 2`, largest in absolute value first.
pub fn sample_limit_st(
    theta: f64,
    tail_eigs: &[f64],
    kappa: f64,
    truncation: usize,
    reps: usize,
    seed: u64,
) -> Result<LimitSampleSet> {
    let terms = SeriesTerms::new(theta, tail_eigs, kappa, truncation)?;
    let draws = chunked(reps, seed, |rng| terms.draw(rng));
    let (samples_s, samples_t) = draws.into_iter().unzip();
    Ok(LimitSampleSet {
        theta,
        truncation: truncation.min(tail_eigs.len()),
        kappa,
        samples_s,
        samples_t,
        samples_v: None,
        seed,
    })
}

/// Draws of `V_h = U_h^2/3 + (S_1 - T_1)/U_h^2`, returned with the `(S_1, T_1)`
/// draws they were built from. `U_h` and `(S_1, T_1)` use independent streams.
pub fn sample_v_set(
    h: f64,
    tail_eigs: &[f64],
    kappa: f64,
    reps: usize,
    seed: u64,
) -> Result<LimitSampleSet> {
    let law = CriticalLaw::new(h)?;
    let mut set = sample_limit_st(
        1.0,
        tail_eigs,
        kappa,
        tail_eigs.len().max(DEFAULT_TRUNCATION),
        reps,
        derive_seed(seed, 0),
    )?;
    let u = chunked(reps, derive_seed(seed, 1), |rng| law.sample(rng));
    let v = u
        .iter()
        .zip(set.samples_s.iter().zip(&set.samples_t))
        .map(|(u, (s, t))| {
            let w = u * u;
            w / 3.0 + (s - t) / w
        })
        .collect();
    set.samples_v = Some(v);
    set.seed = seed;
    Ok(set)
}

pub fn sample_v(h: f64, tail_eigs: &[f64], kappa: f64, reps: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(sample_v_set(h, tail_eigs, kappa, reps, seed)?
        .samples_v
        .unwrap_or_default())
}

/// The law of `V_h`, integrated exactly over `U_h` and by Monte Carlo over
/// `D = S_1 - T_1`. When the spectrum has no `j >= 2` terms and `kappa = 0`,
/// `D = -1` and the law is exact.
#[derive(Debug, Clone)]
pub struct VLimitLaw {
    law: CriticalLaw,
    d: Vec<f64>,
}

impl VLimitLaw {
    pub fn new(h: f64, tail_eigs: &[f64], kappa: f64, draws: usize, seed: u64) -> Result<Self> {
        let law = CriticalLaw::new(h)?;
        let d = if tail_eigs.is_empty() && kappa == 0.0 {
            vec![-1.0]
        } else {
            if draws == 0 {
                return Err(Error::param("need at least one draw of S - T"));
            }
            let set = sample_limit_st(1.0, tail_eigs, kappa, tail_eigs.len(), draws, seed)?;
            set.samples_s
                .iter()
                .zip(&set.samples_t)
                .map(|(s, t)| s - t)
                .collect()
        };
        Ok(Self { law, d })
    }

    pub fn is_exact(&self) -> bool {
        self.d.len() == 1
    }

    /// `P(V > c | D = d)`, from `w^2 - 3cw + 3d > 0` with `w = U^2 > 0`.
    fn conditional_exceedance(&self, c: f64, d: f64) -> f64 {
        let disc = 9.0 * c * c - 12.0 * d;
        if disc < 0.0 {
            return 1.0;
        }
        let r = disc.sqrt();
        let (lo, hi) = (0.5 * (3.0 * c - r), 0.5 * (3.0 * c + r));
        let below = self.law.sq_cdf(lo);
        let above = 1.0 - self.law.sq_cdf(hi);
        (below + above).min(1.0)
    }

    /// `P(V > c)` and its Monte Carlo standard error.
    pub fn exceedance(&self, c: f64) -> (f64, f64) {
        let n = self.d.len() as f64;
        let (mut s, mut s2) = (0.0, 0.0);
        for &d in &self.d {
            let p = self.conditional_exceedance(c, d);
            s += p;
            s2 += p * p;
        }
        let mean = s / n;
        let se = if self.d.len() > 1 {
            ((s2 / n - mean * mean).max(0.0) / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        (mean, se)
    }

    /// `c` with `P(V <= c) = p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        let target = 1.0 - p;
        let (mut lo, mut hi) = (-1.0, 1.0);
        let mut guard = 0;
        while self.exceedance(lo).0 < target {
            lo *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::numeric("cannot bracket V quantile from below"));
            }
        }
        while self.exceedance(hi).0 > target {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::numeric("cannot bracket V quantile from above"));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.exceedance(mid).0 > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, EmpiricalLaw, Quantile};

    #[test]
    fn complete_family_is_deterministic() {
        let set = sample_limit_st(1.0, &[], 0.0, 64, 100, 1).unwrap();
        assert!(set.samples_s.iter().all(|&s| s == -1.0));
        assert!(set.samples_t.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn bipartite_s_plus_t_vanishes() {
        let set = sample_limit_st(1.0, &[-1.0], 0.0, 64, 1000, 2).unwrap();
        for (s, t) in set.samples_s.iter().zip(&set.samples_t) {
            assert!((s + t).abs() < 1e-14);
            assert!(*t >= 0.0);
        }
    }

    #[test]
    fn bipartite_mean_of_s() {
        let set = sample_limit_st(1.0, &[-1.0], 0.0, 64, 1_000_000, 3).unwrap();
        assert!((mean(&set.samples_s) + 0.5).abs() < 0.005);
    }

    #[test]
    fn singular_spectrum_is_rejected() {
        assert!(sample_limit_st(1.0, &[1.0], 0.0, 64, 10, 1).is_err());
        assert!(sample_limit_st(1.0, &[0.5], -1.0, 64, 10, 1).is_err());
    }

    #[test]
    fn complete_v_formula() {
        let set = sample_v_set(0.0, &[], 0.0, 1000, 4).unwrap();
        let v = set.samples_v.unwrap();
        assert!(v.iter().all(|v| v.is_finite()));
        let law = VLimitLaw::new(0.0, &[], 0.0, 0, 0).unwrap();
        assert!(law.is_exact());
        let q = law.quantile(0.95).unwrap();
        let frac = v.iter().filter(|&&x| x > q).count() as f64 / v.len() as f64;
        assert!((frac - 0.05).abs() < 4.0 * (0.05f64 * 0.95 / 1000.0).sqrt());
    }

    #[test]
    fn draws_do_not_depend_on_thread_count() {
        let a = sample_v(0.5, &[-1.0], 0.0, 40_000, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| sample_v(0.5, &[-1.0], 0.0, 40_000, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn conditional_law_matches_plain_monte_carlo() {
        let tail = [-1.0];
        let v = sample_v(0.0, &tail, 0.0, 400_000, 5).unwrap();
        let emp = EmpiricalLaw::new(v).unwrap();
        let law = VLimitLaw::new(0.0, &tail, 0.0, 100_000, 6).unwrap();
        for p in [0.25, 0.5, 0.75, 0.95] {
            let c = law.quantile(p).unwrap();
            assert!((emp.cdf(c) - p).abs() < 0.005, "p = {p}");
        }
        let c = emp.quantile(0.9).unwrap();
        let (ex, se) = law.exceedance(c);
        assert!((ex - 0.1).abs() < 0.005 + 3.0 * se);
    }

    #[test]
    fn truncation_effect_within_chi_square_bound() {
        let tail: Vec<f64> = (2..60).map(|j| 0.5f64.powi(j)).collect();
        let theta = 1.0;
        let j = 4;
        let short = sample_limit_st(theta, &tail, 0.0, j, 200_000, 8).unwrap();
        let long = sample_limit_st(theta, &tail, 0.0, 2 * j, 200_000, 8).unwrap();
        let var = |x: &[f64]| crate::stats::variance(x);
        let bound: f64 = tail[j..]
            .iter()
            .map(|l| 2.0 * l * l / (1.0 - theta * l).powi(2))
            .sum();
        assert!((var(&long.samples_s) - var(&short.samples_s)).abs() < bound);
    }
}
