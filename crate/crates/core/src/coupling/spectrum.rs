//! Eigenvalues of coupling matrices, their analytic limits, and the
//! regularity / spectral-gap checks.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{CouplingMatrix, Family, Storage};
use crate::error::{Error, Result};

/// Eigenvalues closer than this in absolute value count as tied when sorting.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Sorted by descending `|lambda|`, ties broken toward the positive value.
    pub finite_eigs: Vec<f64>,
    pub frobenius_sq: f64,
    pub limit_eigs: Option<Vec<f64>>,
    pub kappa: Option<f64>,
    pub gamma_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSpectrum {
    /// Nonzero limiting eigenvalues, sorted like [`SpectralSummary::finite_eigs`].
    /// The first entry is the Perron eigenvalue 1.
    pub eigs: Vec<f64>,
    pub kappa: f64,
    pub gamma_sq: f64,
}

impl LimitSpectrum {
    /// The eigenvalues `lambda_j`, `j >= 2`.
    pub fn tail(&self) -> &[f64] {
        &self.eigs[1..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionFlags {
    /// Symmetric, nonnegative, zero diagonal. Always true for a constructed matrix.
    pub well_formed: bool,
    pub regular: bool,
    pub spectral_gap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub row_sum_max_dev: f64,
    pub entry_bound: f64,
    pub spectral_gap: f64,
    pub row_tol: f64,
    pub gap_tol: f64,
    pub passes: AssumptionFlags,
    pub notes: Vec<String>,
}

/// Default row-sum tolerance, loose enough for the `1/n` complete convention.
pub fn default_row_tol(n: usize) -> f64 {
    2.0 / n as f64
}

pub(crate) fn sort_spectrum(eigs: &mut [f64]) {
    eigs.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    for i in 1..eigs.len() {
        let mut k = i;
        while k > 0 && eigs[k - 1].abs() - eigs[k].abs() <= TIE_TOL && eigs[k - 1] < eigs[k] {
            eigs.swap(k - 1, k);
            k -= 1;
        }
    }
}

fn symmetric_eigenvalues(m: DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 1000 * dim.max(1))
        .ok_or_else(|| Error::numeric("symmetric eigensolver did not converge"))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(
            "eigensolver returned a non-finite eigenvalue",
        ));
    }
    Ok(eig.eigenvalues.iter().copied().collect())
}

/// Eigenvalues of the dense matrix via the general symmetric eigensolver.
pub fn dense_eigenvalues(q: &CouplingMatrix) -> Result<Vec<f64>> {
    let n = q.n();
    let m = DMatrix::from_row_slice(n, n, &q.to_dense()?);
    let mut e = symmetric_eigenvalues(m)?;
    sort_spectrum(&mut e);
    Ok(e)
}

/// Eigenvalues of a block matrix from its `q x q` quotient: vectors constant
/// on classes give the eigenvalues of `s W - w_d I`, and vectors summing to
/// zero inside every class give `-w_d` with multiplicity `n - q`.
fn block_eigenvalues(q: &CouplingMatrix) -> Result<Option<Vec<f64>>> {
    let Storage::Blocks(b) = q.storage() else {
        return Ok(None);
    };
    let wd = b.weight(0, 0);
    if (0..b.classes).any(|a| b.weight(a, a) != wd) {
        return Ok(None);
    }
    let s = b.class_size as f64;
    let quotient = DMatrix::from_fn(b.classes, b.classes, |a, c| {
        s * b.weight(a, c) - if a == c { wd } else { 0.0 }
    });
    let mut e = symmetric_eigenvalues(quotient)?;
    e.extend(std::iter::repeat_n(-wd, q.n() - b.classes));
    sort_spectrum(&mut e);
    Ok(Some(e))
}

/// Full spectrum of `Q` plus the analytic limit for cataloged families.
pub fn spectrum(q: &CouplingMatrix) -> Result<SpectralSummary> {
    let finite_eigs = match block_eigenvalues(q)? {
        Some(e) => e,
        None => dense_eigenvalues(q)?,
    };
    let frobenius_sq = q.frobenius_sq();
    let eig_sq: f64 = finite_eigs.iter().map(|v| v * v).sum();
    if (eig_sq - frobenius_sq).abs() > 1e-10 * frobenius_sq.max(f64::MIN_POSITIVE) {
        return Err(Error::numeric(format!(
            "eigenvalue squares {eig_sq} disagree with Frobenius norm {frobenius_sq}"
        )));
    }
    let limit = match q.family() {
        Family::Custom => None,
        family => Some(limiting_spectrum(family, q.n())?),
    };
    Ok(SpectralSummary {
        finite_eigs,
        frobenius_sq,
        gamma_sq: limit.as_ref().map(|l| l.gamma_sq),
        kappa: limit.as_ref().map(|l| l.kappa),
        limit_eigs: limit.map(|l| l.eigs),
    })
}

/// Analytic limiting eigenvalues, `gamma^2` and `kappa` for a family. `n` is
/// only used by the random regular family, whose limit depends on `d/n`.
pub fn limiting_spectrum(family: Family, n: usize) -> Result<LimitSpectrum> {
    let (mut eigs, gamma_sq) = match family {
        Family::Complete => (vec![1.0], 1.0),
        Family::Bipartite => (vec![1.0, -1.0], 2.0),
        Family::QPartite { q } => {
            if q < 2 {
                return Err(Error::param("q-partite family needs q >= 2"));
            }
            let mut e = vec![1.0];
            e.extend(std::iter::repeat_n(-1.0 / (q as f64 - 1.0), q - 1));
            let g = 1.0 + 1.0 / (q as f64 - 1.0);
            (e, g)
        }
        Family::CyclicQPartite { q } => {
            if q < 3 {
                return Err(Error::param("cyclic q-partite family needs q >= 3"));
            }
            let e: Vec<f64> = (0..q)
                .map(|a| (2.0 * std::f64::consts::PI * a as f64 / q as f64).cos())
                .filter(|v| v.abs() > 1e-14)
                .collect();
            (e, q as f64 / 2.0)
        }
        Family::RandomRegular { d } => {
            if d == 0 || d >= n {
                return Err(Error::param("random regular limit needs 1 <= d < n"));
            }
            (vec![1.0], n as f64 / d as f64)
        }
        Family::Custom => {
            return Err(Error::Unsupported(
                "custom matrices have no cataloged limiting spectrum".into(),
            ))
        }
    };
    sort_spectrum(&mut eigs);
    let norm_sq: f64 = eigs.iter().map(|v| v * v).sum();
    let kappa = gamma_sq - norm_sq;
    Ok(LimitSpectrum {
        eigs,
        kappa: if kappa.abs() < 1e-12 { 0.0 } else { kappa },
        gamma_sq,
    })
}

/// Regularity, entry bound and signed spectral gap.
pub fn validate_assumptions(q: &CouplingMatrix, row_tol: f64, gap_tol: f64) -> ValidationReport {
    let row_sum_max_dev = q
        .row_sums()
        .iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max);
    let entry_bound = q.n() as f64 * q.max_entry();
    let mut notes = Vec::new();
    let spectral_gap = match spectrum(q) {
        Ok(s) => {
            let mut signed = s.finite_eigs;
            signed.sort_by(|a, b| b.total_cmp(a));
            signed[0] - signed[1]
        }
        Err(e) => {
            notes.push(format!("spectral gap unavailable: {e}"));
            f64::NAN
        }
    };
    if q.family() == Family::Complete {
        notes.push(format!(
            "complete family uses 1/n off-diagonal entries, so row sums are (n-1)/n = {}",
            (q.n() as f64 - 1.0) / q.n() as f64
        ));
    }
    ValidationReport {
        row_sum_max_dev,
        entry_bound,
        spectral_gap,
        row_tol,
        gap_tol,
        passes: AssumptionFlags {
            well_formed: true,
            regular: row_sum_max_dev <= row_tol,
            spectral_gap: spectral_gap > gap_tol,
        },
        notes,
    }
}
