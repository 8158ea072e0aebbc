//! Exact enumeration, Glauber dynamics and the Curie-Weiss auxiliary-variable
//! sampler.

mod curie_weiss;
mod dump;
mod enumerate;
mod glauber;

use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};

pub use curie_weiss::{cw_aux_sample, cw_log_z, phi_density_grid, CurieWeissSampler, PhiGrid};
pub use dump::{read_spins_csv, write_sample_csv, write_spins_csv, SampleRow};
pub use enumerate::{exact_enumerate, EnumerationResult, StatisticLaw, ENUMERATION_CAP};
pub use glauber::{
    apply_sweep_kernel, conditional_up_probability, configuration_pmf, default_burn_in,
    glauber_sample, GlauberChain, KERNEL_CAP,
};

/// A `+-1` spin vector with its magnetization, local fields and `x^T Q x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
    mean: f64,
    fields: Vec<f64>,
    quadratic: f64,
}

impl SpinConfiguration {
    pub fn new(q: &CouplingMatrix, spins: Vec<i8>) -> Result<Self> {
        if spins.len() != q.n() {
            return Err(Error::Dimension {
                expected: q.n(),
                actual: spins.len(),
            });
        }
        if let Some(i) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::param(format!(
                "spin {i} is {}, expected +-1",
                spins[i]
            )));
        }
        let fields = q.local_fields(&spins)?;
        let quadratic = q.quadratic_form(&spins)?;
        let mean = spins.iter().map(|&s| i64::from(s)).sum::<i64>() as f64 / spins.len() as f64;
        Ok(Self {
            spins,
            mean,
            fields,
            quadratic,
        })
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// `X-bar`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `t_i = sum_j Q(i,j) x_j`.
    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// `x^T Q x`.
    pub fn quadratic_form(&self) -> f64 {
        self.quadratic
    }
}

/// The auxiliary variable drawn alongside a Curie-Weiss configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryMagnetization {
    pub phi: f64,
    pub n: usize,
    pub theta: f64,
}
