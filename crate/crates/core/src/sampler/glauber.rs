//! Systematic-scan Glauber dynamics.

use rand::Rng;

use super::SpinConfiguration;
use crate::coupling::{CouplingMatrix, Storage};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Largest `n` for the exact transition-kernel helpers (`2^n` states).
pub const KERNEL_CAP: usize = 16;

/// `P(X_i = +1 | t_i) = e^{theta t} / (e^{theta t} + e^{-theta t})`.
pub fn conditional_up_probability(theta: f64, t: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * theta * t).exp())
}

/// Burn-in sweeps: `10 n` for `theta <= 1.2`, `50 n` above.
pub fn default_burn_in(n: usize, theta: f64) -> usize {
    if theta <= 1.2 {
        10 * n
    } else {
        50 * n
    }
}

#[derive(Debug, Clone)]
enum FieldCache {
    Dense(Vec<f64>),
    /// Per-class spin sums.
    Blocks(Vec<i64>),
}

/// A single Glauber chain with incrementally maintained local fields.
#[derive(Debug, Clone)]
pub struct GlauberChain<'a> {
    q: &'a CouplingMatrix,
    theta: f64,
    spins: Vec<i8>,
    cache: FieldCache,
}

impl<'a> GlauberChain<'a> {
    pub fn new(q: &'a CouplingMatrix, theta: f64, spins: Vec<i8>) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::param("theta must be finite"));
        }
        if spins.len() != q.n() {
            return Err(Error::Dimension {
                expected: q.n(),
                actual: spins.len(),
            });
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::param("spins must be +-1"));
        }
        let cache = Self::fresh_cache(q, &spins)?;
        Ok(Self {
            q,
            theta,
            spins,
            cache,
        })
    }

    pub fn random_start<R: Rng + ?Sized>(
        q: &'a CouplingMatrix,
        theta: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let spins = (0..q.n())
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Self::new(q, theta, spins)
    }

    fn fresh_cache(q: &CouplingMatrix, spins: &[i8]) -> Result<FieldCache> {
        Ok(match q.storage() {
            Storage::Blocks(b) => FieldCache::Blocks(
                spins
                    .chunks(b.class_size)
                    .map(|c| c.iter().map(|&s| i64::from(s)).sum())
                    .collect(),
            ),
            Storage::Dense(_) => FieldCache::Dense(q.local_fields(spins)?),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn set_theta(&mut self, theta: f64) {
        self.theta = theta;
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// Local field at site `i`.
    pub fn field(&self, i: usize) -> f64 {
        match (&self.cache, self.q.storage()) {
            (FieldCache::Dense(t), _) => t[i],
            (FieldCache::Blocks(sums), Storage::Blocks(b)) => {
                let a = b.class_of(i);
                let mixed: f64 = (0..b.classes)
                    .map(|c| b.weight(a, c) * sums[c] as f64)
                    .sum();
                mixed - b.weight(a, a) * f64::from(self.spins[i])
            }
            _ => unreachable!("cache kind follows storage kind"),
        }
    }

    pub fn fields(&self) -> Vec<f64> {
        (0..self.spins.len()).map(|i| self.field(i)).collect()
    }

    fn set_spin(&mut self, i: usize, new: i8) {
        let old = self.spins[i];
        if old == new {
            return;
        }
        self.spins[i] = new;
        let delta = f64::from(new - old);
        match (&mut self.cache, self.q.storage()) {
            (FieldCache::Dense(t), Storage::Dense(d)) => {
                let n = t.len();
                for (k, tk) in t.iter_mut().enumerate() {
                    *tk += delta * d[k * n + i];
                }
            }
            (FieldCache::Blocks(sums), Storage::Blocks(b)) => {
                sums[b.class_of(i)] += i64::from(new - old);
            }
            _ => unreachable!("cache kind follows storage kind"),
        }
    }

    /// Resamples site `i` from its conditional law using the uniform draw `u`.
    pub fn update_site(&mut self, i: usize, u: f64) {
        let p = conditional_up_probability(self.theta, self.field(i));
        self.set_spin(i, if u < p { 1 } else { -1 });
    }

    /// One systematic scan over sites `0..n`.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for i in 0..self.spins.len() {
            let u: f64 = rng.random();
            self.update_site(i, u);
        }
    }

    /// Largest gap between the cached and recomputed local fields.
    pub fn field_drift(&self) -> Result<f64> {
        let fresh = self.q.local_fields(&self.spins)?;
        Ok(fresh
            .iter()
            .enumerate()
            .map(|(i, f)| (f - self.field(i)).abs())
            .fold(0.0, f64::max))
    }

    /// Recomputes the field cache from scratch.
    pub fn refresh(&mut self) -> Result<()> {
        self.cache = Self::fresh_cache(self.q, &self.spins)?;
        Ok(())
    }

    pub fn quadratic_form(&self) -> f64 {
        match (&self.cache, self.q.storage()) {
            (FieldCache::Blocks(sums), Storage::Blocks(b)) => {
                let s: Vec<f64> = sums.iter().map(|&v| v as f64).collect();
                crate::coupling::block_quadratic(b, &s)
            }
            (FieldCache::Dense(t), _) => self
                .spins
                .iter()
                .zip(t)
                .map(|(&s, t)| f64::from(s) * t)
                .sum(),
            _ => unreachable!("cache kind follows storage kind"),
        }
    }

    pub fn configuration(&self) -> Result<SpinConfiguration> {
        SpinConfiguration::new(self.q, self.spins.clone())
    }
}

/// Runs `burn_in + sweeps` sweeps from `init` (or a uniform random start) and
/// returns the final state.
pub fn glauber_sample(
    q: &CouplingMatrix,
    theta: f64,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
    init: Option<&[i8]>,
) -> Result<SpinConfiguration> {
    if sweeps == 0 {
        return Err(Error::param("sweeps must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let mut chain = match init {
        Some(s) => GlauberChain::new(q, theta, s.to_vec())?,
        None => GlauberChain::random_start(q, theta, &mut rng)?,
    };
    for k in 0..burn_in + sweeps {
        chain.sweep(&mut rng);
        if k % 1024 == 1023 {
            chain.refresh()?;
        }
    }
    chain.configuration()
}

fn mask_spins(mask: usize, n: usize) -> Vec<i8> {
    (0..n)
        .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
        .collect()
}

/// Exact Ising probabilities of every configuration; index bit `i` set means
/// `x_i = +1`.
pub fn configuration_pmf(q: &CouplingMatrix, theta: f64) -> Result<Vec<f64>> {
    let n = q.n();
    if n > KERNEL_CAP {
        return Err(Error::Capacity { n, cap: KERNEL_CAP });
    }
    let logs: Vec<f64> = (0..1usize << n)
        .map(|m| Ok(0.5 * theta * q.quadratic_form(&mask_spins(m, n))?))
        .collect::<Result<_>>()?;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / s).collect())
}

/// Pushes a distribution over configurations through one systematic sweep.
pub fn apply_sweep_kernel(q: &CouplingMatrix, theta: f64, dist: &[f64]) -> Result<Vec<f64>> {
    let n = q.n();
    if n > KERNEL_CAP {
        return Err(Error::Capacity { n, cap: KERNEL_CAP });
    }
    if dist.len() != 1 << n {
        return Err(Error::Dimension {
            expected: 1 << n,
            actual: dist.len(),
        });
    }
    let fields: Vec<Vec<f64>> = (0..1usize << n)
        .map(|m| q.local_fields(&mask_spins(m, n)))
        .collect::<Result<_>>()?;
    let mut cur = dist.to_vec();
    for i in 0..n {
        let bit = 1usize << i;
        let mut next = vec![0.0; cur.len()];
        for m in 0..cur.len() {
            if m & bit != 0 {
                continue;
            }
            // t_i does not depend on x_i.
            let p_up = conditional_up_probability(theta, fields[m][i]);
            let mass = cur[m] + cur[m | bit];
            next[m | bit] = mass * p_up;
            next[m] = mass * (1.0 - p_up);
        }
        cur = next;
    }
    Ok(cur)
}
