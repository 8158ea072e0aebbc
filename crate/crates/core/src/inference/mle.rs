//! The MLE solves `Z_n'(theta) = x^T Q x / 2`, exactly from the law of the
//! sufficient statistic, or by noisy bisection with Glauber chains.

use rayon::prelude::*;
use serde::Serialize;

use super::{EstimateResult, Method};
use crate::coupling::{CouplingMatrix, Storage};
use crate::error::{Error, Result};
use crate::sampler::{default_burn_in, GlauberChain, SpinConfiguration, StatisticLaw};
use crate::seed::{derive_seed, rng_from_seed};

const EXACT_TOL: f64 = 1e-10;
/// Values within this relative distance of `a_n` or `b_n` count as on the boundary.
const BOUNDARY_TOL: f64 = 1e-9;

/// `a_n = min x^T Q x` and `b_n = max x^T Q x`. `b_n = 1^T Q 1` for any
/// nonnegative `Q`; `a_n` is only available when the statistic law can be
/// enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExistenceBounds {
    pub a_n: Option<f64>,
    pub b_n: f64,
}

pub fn existence_bounds(q: &CouplingMatrix) -> ExistenceBounds {
    let b_n = match q.storage() {
        Storage::Blocks(_) => q.quadratic_form(&vec![1; q.n()]).unwrap_or(f64::NAN),
        Storage::Dense(_) => q.row_sums().iter().sum(),
    };
    let a_n = StatisticLaw::enumerate(q).ok().map(|law| law.min_value());
    ExistenceBounds { a_n, b_n }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUNDARY_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Exact MLE; `Q` must be enumerable (dense `n <= 24` or a block family).
pub fn mle_exact(x: &SpinConfiguration, q: &CouplingMatrix) -> Result<EstimateResult> {
    if x.n() != q.n() {
        return Err(Error::Dimension {
            expected: q.n(),
            actual: x.n(),
        });
    }
    let law = StatisticLaw::enumerate(q)?;
    Ok(mle_from_law(&law, x.quadratic_form()))
}

/// Exact MLE from a precomputed statistic law and the observed `x^T Q x`.
pub fn mle_from_law(law: &StatisticLaw, xqx: f64) -> EstimateResult {
    let mut r = EstimateResult::new(Method::MleExact);
    let (a_n, b_n) = (law.min_value(), law.max_value());
    r.diag("a_n", a_n);
    r.diag("b_n", b_n);
    r.diag("xqx", xqx);
    if xqx >= b_n || near(xqx, b_n) {
        return r.nonexistent(true);
    }
    if xqx <= a_n || near(xqx, a_n) {
        return r.nonexistent(false);
    }
    let target = 0.5 * xqx;
    let g = |theta: f64| law.dlog_z(theta) - target;
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut k = 0;
    while g(hi) < 0.0 && k < 2000 {
        lo = hi;
        hi *= 2.0;
        k += 1;
    }
    while g(lo) > 0.0 && k < 4000 {
        hi = lo;
        lo *= 2.0;
        k += 1;
    }
    r.bracket = (lo, hi);
    let mut theta = 0.5 * (lo + hi);
    let mut res = g(theta);
    for _ in 0..400 {
        r.iterations += 1;
        if res.abs() < EXACT_TOL {
            break;
        }
        if res < 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        let next = 0.5 * (lo + hi);
        if next == theta {
            break;
        }
        theta = next;
        res = g(theta);
    }
    r.iterations += k;
    r.value = theta;
    r.exists = true;
    r.diag("residual", res.abs());
    if res.abs() >= EXACT_TOL {
        r.flags.push("residual_above_tolerance".into());
    }
    r
}

/// Monte Carlo budget for [`mle_stochastic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub chains: usize,
    /// Sweeps averaged per chain and evaluation.
    pub sweeps: usize,
    /// Burn-in sweeps per chain; `None` uses the sampler default.
    pub burn_in: Option<usize>,
    /// Stop once the bracket is narrower than this.
    pub tol: f64,
    pub seed: u64,
    pub bracket: (f64, f64),
    pub max_iter: usize,
    /// Half-width of the confidence interval in standard errors.
    pub z: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            chains: 8,
            sweeps: 2000,
            burn_in: None,
            tol: 0.01,
            seed: 0,
            bracket: (0.0, 4.0),
            max_iter: 40,
            z: 2.0,
        }
    }
}

/// One bisection evaluation: `theta`, estimated `Z_n'(theta)` and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub theta: f64,
    pub mean: f64,
    pub stderr: f64,
}

fn estimate_derivative(
    q: &CouplingMatrix,
    theta: f64,
    mc: &McConfig,
    eval: u64,
) -> Result<TrajectoryPoint> {
    let burn = mc.burn_in.unwrap_or_else(|| default_burn_in(q.n(), theta));
    let means: Vec<f64> = (0..mc.chains)
        .into_par_iter()
        .map(|c| -> Result<f64> {
            let mut rng = rng_from_seed(derive_seed(mc.seed, eval * mc.chains as u64 + c as u64));
            let start = if c % 2 == 0 { 1 } else { -1 };
            let mut chain = GlauberChain::new(q, theta, vec![start; q.n()])?;
            for _ in 0..burn {
                chain.sweep(&mut rng);
            }
            let mut acc = 0.0;
            for k in 0..mc.sweeps {
                chain.sweep(&mut rng);
                if k % 1024 == 1023 {
                    chain.refresh()?;
                }
                acc += 0.5 * chain.quadratic_form();
            }
            Ok(acc / mc.sweeps as f64)
        })
        .collect::<Result<_>>()?;
    let mean = crate::stats::mean(&means);
    let stderr = (crate::stats::variance(&means) / means.len() as f64).sqrt();
    Ok(TrajectoryPoint {
        theta,
        mean,
        stderr,
    })
}

/// MLE by bisection on Monte Carlo estimates of `Z_n'(theta)`. The bracket
/// only shrinks when the confidence interval at the midpoint excludes the
/// target `x^T Q x / 2`.
pub fn mle_stochastic(
    x: &SpinConfiguration,
    q: &CouplingMatrix,
    mc: &McConfig,
) -> Result<EstimateResult> {
    if mc.chains < 4 {
        return Err(Error::param("mle_stochastic needs at least 4 chains"));
    }
    if mc.sweeps == 0 || !(mc.tol > 0.0) || !(mc.bracket.0 < mc.bracket.1) {
        return Err(Error::param("invalid Monte Carlo budget"));
    }
    if x.n() != q.n() {
        return Err(Error::Dimension {
            expected: q.n(),
            actual: x.n(),
        });
    }
    let mut r = EstimateResult::new(Method::MleStochastic);
    let xqx = x.quadratic_form();
    let bounds = existence_bounds(q);
    r.diag("b_n", bounds.b_n);
    r.diag("xqx", xqx);
    if xqx >= bounds.b_n || near(xqx, bounds.b_n) {
        return Ok(r.nonexistent(true));
    }
    match bounds.a_n {
        Some(a) => {
            r.diag("a_n", a);
            if xqx <= a || near(xqx, a) {
                return Ok(r.nonexistent(false));
            }
        }
        None => {
            let sum_abs: f64 = x.fields().iter().map(|t| t.abs()).sum();
            if xqx <= -sum_abs {
                return Ok(r.nonexistent(false));
            }
            r.flags.push("existence_assumed".into());
        }
    }

    let target = 0.5 * xqx;
    let (mut lo, mut hi) = mc.bracket;
    let mut last_se = f64::NAN;
    for it in 0..mc.max_iter {
        if hi - lo < mc.tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let p = estimate_derivative(q, mid, mc, it as u64)?;
        r.trajectory.push(p);
        r.iterations += 1;
        last_se = p.stderr;
        if p.mean - mc.z * p.stderr > target {
            hi = mid;
        } else if p.mean + mc.z * p.stderr < target {
            lo = mid;
        } else {
            r.flags.push("ci_not_separating".into());
            r.bracket = (lo, hi);
            r.value = mid;
            r.exists = true;
            r.diag("mc_stderr", p.stderr);
            r.diag("ci_halfwidth", mc.z * p.stderr);
            r.diag("residual", (p.mean - target).abs());
            return Ok(r);
        }
    }
    if hi - lo >= mc.tol {
        r.flags.push("inconclusive".into());
    }
    if lo == mc.bracket.0 || hi == mc.bracket.1 {
        r.flags.push("bracket_edge".into());
    }
    r.bracket = (lo, hi);
    r.value = 0.5 * (lo + hi);
    r.exists = true;
    r.diag("mc_stderr", last_se);
    r.diag("ci_halfwidth", mc.z * last_se);
    r.diag("bracket_width", hi - lo);
    Ok(r)
}
