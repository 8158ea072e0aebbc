//! Curie-Weiss log-partition function and the auxiliary-variable sampler.
//!
//! With `phi ~ N(X-bar, 1/(n theta))` added to a Curie-Weiss draw, the
//! marginal density of `phi` is proportional to `exp(-n q(phi))` with
//! `q(phi) = theta phi^2 / 2 - log cosh(theta phi)`, and given `phi` the spins
//! are IID with `P(+1) = e^{theta phi} / (2 cosh(theta phi))`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use super::glauber::conditional_up_probability;
use super::{AuxiliaryMagnetization, SpinConfiguration};
use crate::coupling::{CouplingMatrix, Family};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::theory::solve_m;

pub const DEFAULT_PHI_GRID: usize = 4096;
const MIN_PHI_GRID: usize = 256;
const MAX_CW_N: usize = 10_000_000;
/// The density is below `exp(-TAIL_EXPONENT)` of its maximum off the grid.
const TAIL_EXPONENT: f64 = 40.0;

/// `log sum_k C(n,k) exp(theta (2k - n)^2 / (2n))`.
pub fn cw_log_z(n: usize, theta: f64) -> Result<f64> {
    if n == 0 || n > MAX_CW_N {
        return Err(Error::param(format!(
            "cw_log_z needs 1 <= n <= {MAX_CW_N}, got {n}"
        )));
    }
    if !theta.is_finite() {
        return Err(Error::param("theta must be finite"));
    }
    let nf = n as f64;
    let energy = |k: usize| {
        let s = 2.0 * k as f64 - nf;
        theta * s * s / (2.0 * nf)
    };
    let ln2n = nf * std::f64::consts::LN_2;
    if n <= 53 {
        // Exact dyadic weights keep theta = 0 at exactly n log 2.
        let top = (0..=n).map(energy).fold(f64::NEG_INFINITY, f64::max);
        let scale = 0.5f64.powi(n as i32);
        let mut c: u64 = 1;
        let mut s = 0.0;
        for k in 0..=n {
            s += c as f64 * scale * (energy(k) - top).exp();
            c = (u128::from(c) * (n - k) as u128 / (k as u128 + 1)) as u64;
        }
        return Ok(ln2n + top + s.ln());
    }
    let logs: Vec<f64> = (0..=n)
        .map(|k| ln_binomial(n as u64, k as u64) + energy(k))
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    Ok(top + s.ln())
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Tabulated marginal density of `phi` on `phi >= 0`; the law is even.
#[derive(Debug, Clone, Serialize)]
pub struct PhiGrid {
    n: usize,
    theta: f64,
    nodes: Vec<f64>,
    /// `exp(-n (q(phi) - min q))`.
    density: Vec<f64>,
    /// `P(0 <= phi <= nodes[k])`, trapezoid rule.
    half_cdf: Vec<f64>,
    half_mass: f64,
}

impl PhiGrid {
    pub fn new(n: usize, theta: f64, grid_points: usize) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::param(format!(
                "auxiliary sampler needs theta > 0, got {theta}"
            )));
        }
        if n == 0 {
            return Err(Error::param("n must be positive"));
        }
        if grid_points < MIN_PHI_GRID {
            return Err(Error::param(format!(
                "phi grid needs at least {MIN_PHI_GRID} points"
            )));
        }
        let nf = n as f64;
        let q = |phi: f64| 0.5 * theta * phi * phi - ln_cosh(theta * phi);
        let center = solve_m(theta);
        let q_min = q(center);
        let excess = |phi: f64| nf * (q(phi) - q_min);

        let mut step = 1.0 / nf.sqrt();
        let mut hi = center + step;
        while excess(hi) < TAIL_EXPONENT {
            step *= 2.0;
            hi = center + step;
        }
        let mut below = center;
        for _ in 0..200 {
            let mid = 0.5 * (below + hi);
            if excess(mid) < TAIL_EXPONENT {
                below = mid;
            } else {
                hi = mid;
            }
        }
        let lo = if excess(0.0) <= TAIL_EXPONENT {
            0.0
        } else {
            let (mut a, mut b) = (0.0, center);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if excess(mid) > TAIL_EXPONENT {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            a
        };

        let width = (hi - lo) / (grid_points - 1) as f64;
        let nodes: Vec<f64> = (0..grid_points).map(|k| lo + k as f64 * width).collect();
        let density: Vec<f64> = nodes.iter().map(|&p| (-excess(p)).exp()).collect();
        let mut cum = vec![0.0; grid_points];
        for k in 1..grid_points {
            cum[k] = cum[k - 1] + 0.5 * width * (density[k - 1] + density[k]);
        }
        let total = 2.0 * cum[grid_points - 1];
        let half_cdf = cum.iter().map(|c| c / total).collect();
        Ok(Self {
            n,
            theta,
            nodes,
            density,
            half_cdf,
            half_mass: cum[grid_points - 1],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Grid spacing.
    pub fn step(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// Node with the largest density on `phi >= 0`.
    pub fn argmax(&self) -> f64 {
        let k = self
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.nodes[k]
    }

    /// Full symmetric table of `(phi, unnormalized density, CDF)`.
    pub fn table(&self) -> Vec<(f64, f64, f64)> {
        let mut rows: Vec<(f64, f64, f64)> = self
            .nodes
            .iter()
            .zip(&self.density)
            .zip(&self.half_cdf)
            .rev()
            .filter(|((p, _), _)| **p > 0.0)
            .map(|((p, d), c)| (-p, *d, 0.5 - c))
            .collect();
        rows.extend(
            self.nodes
                .iter()
                .zip(&self.density)
                .zip(&self.half_cdf)
                .map(|((p, d), c)| (*p, *d, 0.5 + c)),
        );
        rows
    }

    /// `E phi^k` for even `k` by the trapezoid rule.
    pub fn moment(&self, k: u32) -> f64 {
        if k % 2 == 1 {
            return 0.0;
        }
        let h = self.step();
        let trap = |f: &dyn Fn(usize) -> f64| {
            let m = self.nodes.len();
            h * ((1..m - 1).map(f).sum::<f64>() + 0.5 * (f(0) + f(m - 1)))
        };
        let num = trap(&|i| self.nodes[i].powi(k as i32) * self.density[i]);
        let den = trap(&|i| self.density[i]);
        num / den
    }

    /// Draws `phi` by inverting the trapezoid CDF, which is exact for the
    /// piecewise-linear density on the grid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v: f64 = rng.random::<f64>() * 0.5;
        let k = self
            .half_cdf
            .partition_point(|&c| c < v)
            .clamp(1, self.nodes.len() - 1);
        let h = self.step();
        let total = 2.0 * self.half_mass;
        let r = (v - self.half_cdf[k - 1]) * total;
        let (d0, d1) = (self.density[k - 1], self.density[k]);
        let slope = (d1 - d0) / h;
        let disc = (d0 * d0 + 2.0 * slope * r).max(0.0);
        let s = if d0 + disc.sqrt() > 0.0 {
            2.0 * r / (d0 + disc.sqrt())
        } else {
            0.5 * h
        };
        let mag = self.nodes[k - 1] + s.clamp(0.0, h);
        if rng.random::<bool>() {
            mag
        } else {
            -mag
        }
    }
}

pub fn phi_density_grid(n: usize, theta: f64, grid_points: usize) -> Result<PhiGrid> {
    PhiGrid::new(n, theta, grid_points)
}

/// Exact Curie-Weiss sampler (up to the `phi` grid) for the complete family.
#[derive(Debug, Clone)]
pub struct CurieWeissSampler {
    grid: PhiGrid,
    q: CouplingMatrix,
}

impl CurieWeissSampler {
    pub fn new(n: usize, theta: f64) -> Result<Self> {
        Self::with_grid(n, theta, DEFAULT_PHI_GRID)
    }

    pub fn with_grid(n: usize, theta: f64, grid_points: usize) -> Result<Self> {
        Ok(Self {
            grid: PhiGrid::new(n, theta, grid_points)?,
            q: CouplingMatrix::build(Family::Complete, n.max(2), None)?,
        })
    }

    pub fn grid(&self) -> &PhiGrid {
        &self.grid
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.q
    }

    fn aux(&self, phi: f64) -> AuxiliaryMagnetization {
        AuxiliaryMagnetization {
            phi,
            n: self.grid.n,
            theta: self.grid.theta,
        }
    }

    /// Draws `phi`, then `n` IID spins.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<(SpinConfiguration, AuxiliaryMagnetization)> {
        let phi = self.grid.sample(rng);
        let p = conditional_up_probability(self.grid.theta, phi);
        let spins = (0..self.grid.n)
            .map(|_| if rng.random::<f64>() < p { 1 } else { -1 })
            .collect();
        Ok((SpinConfiguration::new(&self.q, spins)?, self.aux(phi)))
    }

    /// Draws `phi`, then the number of `+1` spins as a binomial count.
    pub fn sample_up_count<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<(usize, AuxiliaryMagnetization)> {
        let phi = self.grid.sample(rng);
        let p = conditional_up_probability(self.grid.theta, phi);
        let b = Binomial::new(self.grid.n as u64, p)
            .map_err(|e| Error::numeric(format!("binomial draw: {e}")))?;
        Ok((b.sample(rng) as usize, self.aux(phi)))
    }

    /// A configuration with `ups` leading `+1` spins. Statistics of the
    /// complete family depend on the count only.
    pub fn configuration_from_count(&self, ups: usize) -> Result<SpinConfiguration> {
        let n = self.grid.n;
        let spins = (0..n).map(|i| if i < ups { 1 } else { -1 }).collect();
        SpinConfiguration::new(&self.q, spins)
    }
}

pub fn cw_aux_sample(
    n: usize,
    theta: f64,
    seed: u64,
) -> Result<(SpinConfiguration, AuxiliaryMagnetization)> {
    let sampler = CurieWeissSampler::new(n, theta)?;
    sampler.sample(&mut rng_from_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;
    use crate::sampler::exact_enumerate;
    use crate::stats::ks_two_sample;
    use crate::theory::CriticalLaw;
    use rand_distr::StandardNormal;

    #[test]
    fn cw_log_z_small_cases() {
        assert_eq!(cw_log_z(9, 0.0).unwrap(), 9.0 * std::f64::consts::LN_2);
        let want = (2.0 * std::f64::consts::E + 2.0).ln();
        assert!((cw_log_z(2, 1.0).unwrap() - want).abs() < 1e-15);
        assert!((cw_log_z(1000, 0.0).unwrap() - 1000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn cw_log_z_is_increasing() {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..40 {
            let v = cw_log_z(200, 0.1 * k as f64).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn complete_matrix_convention_offset() {
        for theta in [0.5, 1.0, 1.5] {
            let q = CouplingMatrix::build(Family::Complete, 16, None).unwrap();
            let z = exact_enumerate(&q, theta).unwrap().log_z;
            assert!((z - (cw_log_z(16, theta).unwrap() - theta / 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_and_log_routes_agree() {
        let direct = cw_log_z(53, 1.3).unwrap();
        let logs: Vec<f64> = (0..=53u64)
            .map(|k| {
                let s = 2.0 * k as f64 - 53.0;
                ln_binomial(53, k) + 1.3 * s * s / 106.0
            })
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        assert!((direct - lse).abs() < 1e-12);
    }

    #[test]
    fn grid_is_symmetric_with_modes_at_m() {
        let g = PhiGrid::new(400, 1.5, 4096).unwrap();
        let table = g.table();
        let mid = table.iter().find(|r| r.0 >= 0.0).unwrap();
        assert!((mid.2 - 0.5).abs() < 1e-10 || table.iter().any(|r| r.0 == 0.0));
        assert!((g.argmax() - solve_m(1.5)).abs() <= g.step());
        let g1 = PhiGrid::new(400, 0.8, 4096).unwrap();
        let t1 = g1.table();
        let zero = t1.iter().find(|r| r.0 == 0.0).unwrap();
        assert!((zero.2 - 0.5).abs() < 1e-10);
    }

    fn direct_fourth_moment(n: usize) -> f64 {
        let nf = n as f64;
        let scale = nf.powf(0.25);
        let f = |u: f64| {
            let phi = u / scale;
            (-nf * (0.5 * phi * phi - ln_cosh(phi))).exp()
        };
        let den = adaptive_simpson(&f, -12.0, 12.0, 1e-10).unwrap();
        let num = adaptive_simpson(&|u: f64| u.powi(4) * f(u), -12.0, 12.0, 1e-10).unwrap();
        num / den
    }

    #[test]
    fn critical_fourth_moment() {
        let n = 10_000;
        let g = PhiGrid::new(n, 1.0, 4096).unwrap();
        let grid = g.moment(4) * n as f64;
        assert!((grid - direct_fourth_moment(n)).abs() < 1e-5 * grid);
        let big = 1_000_000;
        let g = PhiGrid::new(big, 1.0, 4096).unwrap();
        let m4 = CriticalLaw::new(0.0).unwrap().moment4();
        assert!((g.moment(4) * big as f64 - m4).abs() < 0.01 * m4);
    }

    #[test]
    fn doubling_the_grid_barely_moves_moments() {
        let a = PhiGrid::new(1600, 1.5, 4096).unwrap();
        let b = PhiGrid::new(1600, 1.5, 8192).unwrap();
        assert!((a.moment(2) - b.moment(2)).abs() < 1e-4);
        assert!((a.moment(4) - b.moment(4)).abs() < 1e-4);
    }

    #[test]
    fn regenerated_phi_matches_direct_phi() {
        let (n, theta) = (100, 1.5);
        let s = CurieWeissSampler::new(n, theta).unwrap();
        let mut rng = rng_from_seed(17);
        let reps = 10_000;
        let mut direct = Vec::with_capacity(reps);
        let mut regen = Vec::with_capacity(reps);
        for _ in 0..reps {
            let (x, aux) = s.sample(&mut rng).unwrap();
            direct.push(aux.phi);
            let z: f64 = rng.sample(StandardNormal);
            regen.push(x.mean() + z / (n as f64 * theta).sqrt());
        }
        let d = ks_two_sample(&direct, &regen);
        let ne = (reps * reps) as f64 / (2 * reps) as f64;
        assert!(crate::stats::ks_pvalue(d, ne) > 0.01);
    }

    #[test]
    fn unconditional_mean_is_zero() {
        let s = CurieWeissSampler::new(50, 0.5).unwrap();
        let mut rng = rng_from_seed(8);
        let reps = 10_000;
        let mean: f64 = (0..reps)
            .map(|_| {
                let (k, _) = s.sample_up_count(&mut rng).unwrap();
                (2.0 * k as f64 - 50.0) / 50.0
            })
            .sum::<f64>()
            / reps as f64;
        assert!(mean.abs() < 4.0 / ((reps * 50) as f64).sqrt());
    }

    #[test]
    fn rejects_nonpositive_theta() {
        assert!(PhiGrid::new(10, 0.0, 512).is_err());
        assert!(PhiGrid::new(10, 1.0, 100).is_err());
        assert!(cw_aux_sample(10, -1.0, 1).is_err());
    }
}
