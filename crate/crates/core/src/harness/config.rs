//! Flat TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::table::Format;
use crate::coupling::Family;
use crate::error::{Error, Result};
use crate::testing::{Boundary, TestKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    EstimatorLaw,
    PowerCurve,
    LimitLawDensity,
    NormalizerCheck,
    SpectrumReport,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::EstimatorLaw => "estimator_law",
            ExperimentKind::PowerCurve => "power_curve",
            ExperimentKind::LimitLawDensity => "limit_law_density",
            ExperimentKind::NormalizerCheck => "normalizer_check",
            ExperimentKind::SpectrumReport => "spectrum_report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    MonteCarlo,
    Asymptotic,
}

/// One experiment. Every key sits at the top level of the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_family")]
    pub family: String,
    /// Class count for `q-partite` and `cyclic`.
    pub q: Option<usize>,
    /// Degree for `random-regular`.
    pub degree: Option<usize>,
    /// Seed of the random regular graph; defaults to `master_seed`.
    pub graph_seed: Option<u64>,
    pub n: Option<usize>,
    pub n_grid: Option<Vec<usize>>,
    #[serde(default = "default_theta0")]
    pub theta0: f64,
    pub h: Option<f64>,
    pub h_grid: Option<Vec<f64>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub reps: Option<usize>,
    #[serde(default)]
    pub master_seed: u64,
    pub output_path: PathBuf,
    #[serde(default = "default_format")]
    pub format: Format,
    #[serde(default = "default_calibration")]
    pub calibration: CalibrationMode,
    #[serde(default = "default_calibration_reps")]
    pub calibration_reps: usize,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    /// Test kinds of a power curve.
    #[serde(default = "default_tests")]
    pub tests: Vec<TestKind>,
    /// Draws from the limit laws (`V_h`, critical PL power).
    #[serde(default = "default_limit_draws")]
    pub limit_draws: usize,
    /// Evaluation points of a density table.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Compute the exact MLE next to the MPLE in an estimator law.
    #[serde(default = "default_true")]
    pub mle: bool,
}

fn default_family() -> String {
    "complete".into()
}
fn default_theta0() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.05
}
fn default_format() -> Format {
    Format::Csv
}
fn default_calibration() -> CalibrationMode {
    CalibrationMode::MonteCarlo
}
fn default_calibration_reps() -> usize {
    10_000
}
fn default_boundary() -> Boundary {
    Boundary::Randomized
}
fn default_tests() -> Vec<TestKind> {
    TestKind::ALL.to_vec()
}
fn default_limit_draws() -> usize {
    1_000_000
}
fn default_grid_points() -> usize {
    401
}
fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("<file>")
                .to_string();
            Error::config(field, e.message().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical JSON encoding of every field.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config encodes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn family(&self) -> Result<Family> {
        Family::parse(&self.family, self.q, self.degree).map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::config("family", other.to_string()),
        })
    }

    /// Sizes in run order: `n_grid` if given, else `[n]`, else the default.
    pub fn sizes(&self) -> Vec<usize> {
        match (&self.n_grid, self.n) {
            (Some(g), _) => g.clone(),
            (None, Some(n)) => vec![n],
            (None, None) if self.experiment == ExperimentKind::NormalizerCheck => {
                vec![1_000, 10_000, 100_000, 1_000_000]
            }
            (None, None) => vec![self.default_n()],
        }
    }

    pub fn h_values(&self) -> Vec<f64> {
        match (&self.h_grid, self.h) {
            (Some(g), _) => g.clone(),
            (None, Some(h)) => vec![h],
            (None, None) => match self.experiment {
                ExperimentKind::PowerCurve => vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
                _ => vec![1.0],
            },
        }
    }

    /// Desk-scale defaults: `n = 1600` at low temperature, `10^4` at criticality.
    pub fn default_n(&self) -> usize {
        match self.experiment {
            ExperimentKind::SpectrumReport => 100,
            _ if self.theta0 > 1.0 => 1600,
            _ => 10_000,
        }
    }

    pub fn replications(&self) -> usize {
        self.reps.unwrap_or(match self.experiment {
            ExperimentKind::EstimatorLaw if self.theta0 > 1.0 => 400,
            ExperimentKind::EstimatorLaw => 2000,
            ExperimentKind::PowerCurve => 1000,
            _ => 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let family = self.family()?;
        if self.n.is_some() && self.n_grid.is_some() {
            return Err(Error::config(
                "n_grid",
                "give either `n` or `n_grid`, not both",
            ));
        }
        if self.h.is_some() && self.h_grid.is_some() {
            return Err(Error::config(
                "h_grid",
                "give either `h` or `h_grid`, not both",
            ));
        }
        let field = if self.n_grid.is_some() { "n_grid" } else { "n" };
        let sizes = self.sizes();
        if sizes.is_empty() {
            return Err(Error::config(field, "no sizes given"));
        }
        if let Some(&n) = sizes.iter().find(|&&n| n < 2) {
            return Err(Error::config(field, format!("n = {n} must be at least 2")));
        }
        if let Family::QPartite { q } | Family::CyclicQPartite { q } = family {
            if let Some(&n) = sizes.iter().find(|&&n| q == 0 || n % q != 0) {
                return Err(Error::config(
                    "q",
                    format!("q = {q} does not divide n = {n}"),
                ));
            }
        }
        if family == Family::Custom {
            return Err(Error::config(
                "family",
                "experiments need a cataloged family",
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(
                "alpha",
                format!("{} is outside (0, 1)", self.alpha),
            ));
        }
        if !self.theta0.is_finite() || self.theta0 < 1.0 {
            return Err(Error::config(
                "theta0",
                format!("{} is below the critical point 1", self.theta0),
            ));
        }
        let hfield = if self.h_grid.is_some() { "h_grid" } else { "h" };
        let hs = self.h_values();
        if hs.is_empty() || hs.iter().any(|h| !h.is_finite()) {
            return Err(Error::config(hfield, "values must be finite and nonempty"));
        }
        if self.experiment == ExperimentKind::PowerCurve && hs.iter().any(|&h| h < 0.0) {
            return Err(Error::config(hfield, "power curves need h >= 0"));
        }
        if self.reps == Some(0) {
            return Err(Error::config("reps", "must be at least 1"));
        }
        if self.calibration == CalibrationMode::MonteCarlo && self.calibration_reps < 1000 {
            return Err(Error::config("calibration_reps", "must be at least 1000"));
        }
        if self.tests.is_empty() {
            return Err(Error::config("tests", "name at least one test"));
        }
        if self.limit_draws == 0 {
            return Err(Error::config("limit_draws", "must be at least 1"));
        }
        if self.grid_points < 2 {
            return Err(Error::config("grid_points", "must be at least 2"));
        }
        if self.experiment == ExperimentKind::NormalizerCheck && family != Family::Complete {
            return Err(Error::config(
                "family",
                "the normalizer check uses the complete family",
            ));
        }
        if self.experiment == ExperimentKind::LimitLawDensity && self.theta0 != 1.0 {
            return Err(Error::config(
                "theta0",
                "limit-law densities are critical-regime only",
            ));
        }
        if self.output_path.as_os_str().is_empty() {
            return Err(Error::config("output_path", "must not be empty"));
        }
        Ok(())
    }
}
