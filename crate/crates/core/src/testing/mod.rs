//! One-sided tests of `H0: theta = theta0` against larger `theta`: the
//! magnetization test (MS), the likelihood-ratio test (NP) and the
//! pseudo-likelihood test (PL).

mod asymptotic;
mod calibrate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::mple;
use crate::sampler::SpinConfiguration;

pub use asymptotic::{
    asymptotic_critical_value, asymptotic_power, asymptotic_power_curve, AsymptoticOptions,
    AsymptoticPower, PlMethod,
};
pub use calibrate::{
    calibrate, calibrate_from_null, empirical_power, rejection_rate, simulate_statistics,
    ModelSampler, PowerEstimate, Replicate,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Ms,
    Np,
    Pl,
}

impl TestKind {
    pub const ALL: [TestKind; 3] = [TestKind::Ms, TestKind::Np, TestKind::Pl];

    pub fn name(&self) -> &'static str {
        match self {
            TestKind::Ms => "ms",
            TestKind::Np => "np",
            TestKind::Pl => "pl",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ms" => Ok(TestKind::Ms),
            "np" => Ok(TestKind::Np),
            "pl" => Ok(TestKind::Pl),
            other => Err(Error::param(format!("unknown test kind `{other}`"))),
        }
    }

    pub(crate) fn index(&self) -> usize {
        match self {
            TestKind::Ms => 0,
            TestKind::Np => 1,
            TestKind::Pl => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Calibration {
    MonteCarloNull { reps: usize, seed: u64 },
    Asymptotic,
}

/// Treatment of null mass sitting exactly on the critical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Reject only above the critical value; the level is at most `alpha`.
    Conservative,
    /// Reject on the critical value with probability `gamma`, chosen so the
    /// calibrated level is `alpha`.
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub kind: TestKind,
    pub theta0: f64,
    pub alpha: f64,
    pub n: usize,
    pub calibration: Calibration,
    pub boundary: Boundary,
}

impl TestSpec {
    pub fn new(
        kind: TestKind,
        theta0: f64,
        alpha: f64,
        n: usize,
        calibration: Calibration,
    ) -> Self {
        Self {
            kind,
            theta0,
            alpha,
            n,
            calibration,
            boundary: Boundary::Randomized,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(format!(
                "alpha = {} outside (0, 1)",
                self.alpha
            )));
        }
        if self.n < 2 {
            return Err(Error::param("n must be at least 2"));
        }
        if !(self.theta0 >= 1.0) || !self.theta0.is_finite() {
            return Err(Error::Unsupported(format!(
                "theta0 = {} is in neither the low-temperature nor the critical regime",
                self.theta0
            )));
        }
        if let Calibration::MonteCarloNull { reps, .. } = self.calibration {
            if reps < 1000 {
                return Err(Error::param(
                    "Monte Carlo calibration needs at least 1000 reps",
                ));
            }
        }
        Ok(())
    }
}

/// A calibrated critical value `K_n(alpha)` with its boundary rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub kind: TestKind,
    pub value: f64,
    /// Probability of rejecting when the statistic equals `value`.
    pub gamma: f64,
    /// Null probability strictly above `value` (Monte Carlo only).
    pub p_above: Option<f64>,
    /// Null probability on `value` (Monte Carlo only).
    pub p_at: Option<f64>,
    /// Calibrated level with `gamma = 0`.
    pub conservative_level: Option<f64>,
    /// Calibrated level of the rule as configured.
    pub achieved_level: Option<f64>,
    pub sampler: String,
    pub reps: usize,
}

impl CriticalValue {
    pub(crate) fn tie_tolerance(&self) -> f64 {
        1e-9 * self.value.abs().max(1.0)
    }

    /// Decision for `statistic`; `u` is a uniform used only on the boundary.
    pub fn decide(&self, statistic: f64, u: f64) -> bool {
        if !statistic.is_finite() {
            return statistic == f64::INFINITY;
        }
        let tol = self.tie_tolerance();
        if statistic > self.value + tol {
            return true;
        }
        self.gamma > 0.0 && (statistic - self.value).abs() <= tol && u < self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub achieved_level: Option<f64>,
    /// The statistic sat on the critical value and the boundary coin decided.
    pub on_boundary: bool,
}

/// `n Xbar^2` (MS), `x^T Q x` (NP) or the MPLE (PL). A nonexistent MPLE maps
/// to `-inf`, which never rejects.
pub fn test_statistic(kind: TestKind, x: &SpinConfiguration) -> f64 {
    match kind {
        TestKind::Ms => {
            let m = x.mean();
            x.n() as f64 * m * m
        }
        TestKind::Np => x.quadratic_form(),
        TestKind::Pl => {
            let r = mple(x);
            if r.exists {
                r.value
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

pub fn run_test(cv: &CriticalValue, x: &SpinConfiguration, u: f64) -> TestOutcome {
    let statistic = test_statistic(cv.kind, x);
    let reject = cv.decide(statistic, u);
    let on_boundary = statistic.is_finite()
        && cv.gamma > 0.0
        && (statistic - cv.value).abs() <= cv.tie_tolerance();
    TestOutcome {
        statistic,
        critical_value: cv.value,
        reject,
        achieved_level: cv.achieved_level,
        on_boundary,
    }
}
