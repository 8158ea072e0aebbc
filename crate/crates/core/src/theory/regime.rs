//! The magnetization fixed point and the low-temperature constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `w(theta, x) = x - tanh(theta x)`.
pub fn fixed_point_residual(theta: f64, x: f64) -> f64 {
    x - (theta * x).tanh()
}

/// Positive root of `x = tanh(theta x)` for `theta > 1`, else 0.
pub fn solve_m(theta: f64) -> f64 {
    if !(theta > 1.0) {
        return 0.0;
    }
    // Below sqrt(3(theta - 1) / theta^3) the cubic expansion keeps w negative.
    let mut lo = (0.1 * (3.0 * (theta - 1.0) / theta.powi(3)).sqrt()).min(0.5);
    let mut hi = 1.0;
    if fixed_point_residual(theta, lo) >= 0.0 {
        lo = f64::MIN_POSITIVE;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fixed_point_residual(theta, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut m = 0.5 * (lo + hi);
    for _ in 0..3 {
        let sech2 = 1.0 - (theta * m).tanh().powi(2);
        let slope = 1.0 - theta * sech2;
        if slope <= 0.0 {
            break;
        }
        let next = m - fixed_point_residual(theta, m) / slope;
        if !(next > 0.0 && next <= 1.0) {
            break;
        }
        m = next;
    }
    m
}

fn low_temperature(theta0: f64) -> Result<f64> {
    if theta0 > 1.0 && theta0.is_finite() {
        Ok(solve_m(theta0))
    } else {
        Err(Error::domain(format!(
            "low-temperature constants need theta0 > 1, got {theta0}"
        )))
    }
}

/// `sigma^2 = (1 - m^2) / (1 - theta (1 - m^2))`.
pub fn sigma_sq(theta0: f64) -> Result<f64> {
    let m = low_temperature(theta0)?;
    let a = 1.0 - m * m;
    Ok(a / (1.0 - theta0 * a))
}

/// `dm/dtheta = m sigma^2`.
pub fn m_prime(theta0: f64) -> Result<f64> {
    Ok(solve_m(theta0) * sigma_sq(theta0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `theta0 > 1`.
    Low,
    /// `theta0 = 1`.
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeTheory {
    pub theta0: f64,
    pub regime: Regime,
    pub m: f64,
    /// Present in the low-temperature regime only.
    pub sigma_sq: Option<f64>,
    /// `R = m^2 sigma^2`.
    pub r_info: f64,
}

impl RegimeTheory {
    /// Classifies `theta0`. Values below 1 are outside the supported regimes.
    pub fn new(theta0: f64) -> Result<Self> {
        if theta0 == 1.0 {
            return Ok(Self {
                theta0,
                regime: Regime::Critical,
                m: 0.0,
                sigma_sq: None,
                r_info: 0.0,
            });
        }
        if !(theta0 > 1.0) || !theta0.is_finite() {
            return Err(Error::domain(format!(
                "theta0 = {theta0} is outside the low-temperature and critical regimes"
            )));
        }
        let m = solve_m(theta0);
        let s = sigma_sq(theta0)?;
        Ok(Self {
            theta0,
            regime: Regime::Low,
            m,
            sigma_sq: Some(s),
            r_info: m * m * s,
        })
    }
}
