//! Maximum pseudo-likelihood and maximum likelihood estimation of `theta`.

mod mle;
mod mple;

use std::collections::BTreeMap;

use serde::Serialize;

pub use mle::{
    existence_bounds, mle_exact, mle_from_law, mle_stochastic, ExistenceBounds, McConfig,
    TrajectoryPoint,
};
pub use mple::{mple, mple_from_fields, pseudo_score};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MpleNewton,
    MleExact,
    MleStochastic,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::MpleNewton => "mple_newton",
            Method::MleExact => "mle_exact",
            Method::MleStochastic => "mle_stochastic",
        }
    }
}

/// Outcome of an estimator. When the estimate does not exist, `value` is
/// `+inf` or `-inf` according to the side of the violated bound.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateResult {
    pub value: f64,
    pub exists: bool,
    pub method: Method,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub diagnostics: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl EstimateResult {
    fn new(method: Method) -> Self {
        Self {
            value: f64::NAN,
            exists: false,
            method,
            iterations: 0,
            bracket: (f64::NAN, f64::NAN),
            diagnostics: BTreeMap::new(),
            flags: Vec::new(),
            trajectory: Vec::new(),
        }
    }

    fn nonexistent(mut self, upper: bool) -> Self {
        self.exists = false;
        self.value = if upper {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        self
    }

    fn diag(&mut self, key: &str, v: f64) {
        self.diagnostics.insert(key.to_string(), v);
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    /// The residual recorded by the solver, if any.
    pub fn residual(&self) -> Option<f64> {
        self.diagnostics.get("residual").copied()
    }
}
