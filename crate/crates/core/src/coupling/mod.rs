//! Coupling matrices: construction, storage, and the linear algebra the rest
//! of the crate needs (local fields, quadratic forms, centered forms).
//!
//! The block families (complete, bipartite, complete q-partite and cyclic
//! q-partite) are stored as a `q x q` table of block weights, so local
//! fields and quadratic forms cost `O(n + q^2)` and no `n x n` array is ever
//! allocated unless a caller asks for one. Random regular and custom
//! matrices are stored densely.

mod io;
mod regular;
mod spectrum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{read_text, write_text};
pub use spectrum::{
    default_row_tol, limiting_spectrum, spectrum, validate_assumptions, AssumptionFlags,
    LimitSpectrum, SpectralSummary, ValidationReport,
};

/// Largest `n` for which a dense `n x n` array may be materialized.
pub const DENSE_LIMIT: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// Off-diagonal entries `1/n`.
    Complete,
    /// Complete bipartite graph `K_{n/2,n/2}` scaled by `2/n`.
    Bipartite,
    /// Complete q-partite graph with `q` classes of size `n/q`.
    QPartite {
        q: usize,
    },
    /// Consecutive classes (mod q) fully connected, weight `q/(2n)`.
    CyclicQPartite {
        q: usize,
    },
    /// Random `d`-regular simple graph scaled by `1/d`.
    RandomRegular {
        d: usize,
    },
    Custom,
}

impl Family {
    pub fn name(&self) -> String {
        match self {
            Family::Complete => "complete".into(),
            Family::Bipartite => "bipartite".into(),
            Family::QPartite { q } => format!("q-partite({q})"),
            Family::CyclicQPartite { q } => format!("cyclic({q})"),
            Family::RandomRegular { d } => format!("random-regular({d})"),
            Family::Custom => "custom".into(),
        }
    }

    /// Parses `complete`, `bipartite`, `q-partite`, `cyclic`, `random-regular`
    /// with the integer parameter supplied separately.
    pub fn parse(name: &str, q: Option<usize>, degree: Option<usize>) -> Result<Self> {
        let need = |v: Option<usize>, what: &str| {
            v.ok_or_else(|| Error::config(what, format!("family `{name}` needs `{what}`")))
        };
        Ok(match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "complete" | "curie-weiss" | "cw" => Family::Complete,
            "bipartite" => Family::Bipartite,
            "q-partite" | "qpartite" => Family::QPartite { q: need(q, "q")? },
            "cyclic" | "cyclic-q-partite" => Family::CyclicQPartite { q: need(q, "q")? },
            "random-regular" | "regular" => Family::RandomRegular {
                d: need(degree, "degree")?,
            },
            "custom" => Family::Custom,
            other => return Err(Error::config("family", format!("unknown family `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Blocks {
    pub classes: usize,
    pub class_size: usize,
    /// Row-major `classes x classes` weights between distinct vertices.
    pub weights: Vec<f64>,
}

impl Blocks {
    #[inline]
    pub fn class_of(&self, i: usize) -> usize {
        i / self.class_size
    }

    #[inline]
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.classes + b]
    }

    pub fn class_sums(&self, x: &[f64]) -> Vec<f64> {
        x.chunks(self.class_size).map(|c| c.iter().sum()).collect()
    }

    /// `sum_b W[a][b] s_b` for every class `a`.
    pub fn mixed_sums(&self, sums: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|a| (0..self.classes).map(|b| self.weight(a, b) * sums[b]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Storage {
    Blocks(Blocks),
    Dense(Vec<f64>),
}

/// A symmetric, nonnegative coupling matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    family: Family,
    storage: Storage,
}

/// `x^T B x` and `x^T B^2 x` for the centered matrix `B = Q - 11^T/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenteredForms {
    pub xbx: f64,
    pub xb2x: f64,
}

impl CouplingMatrix {
    /// Builds one of the cataloged families. `seed` is required for
    /// [`Family::RandomRegular`] and ignored otherwise.
    pub fn build(family: Family, n: usize, seed: Option<u64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("n must be at least 2, got {n}")));
        }
        let nf = n as f64;
        let blocks = |classes: usize, weight: &dyn Fn(usize, usize) -> f64| {
            let mut weights = vec![0.0; classes * classes];
            for a in 0..classes {
                for b in 0..classes {
                    weights[a * classes + b] = weight(a, b);
                }
            }
            Storage::Blocks(Blocks {
                classes,
                class_size: n / classes,
                weights,
            })
        };
        let storage = match family {
            Family::Complete => blocks(1, &|_, _| 1.0 / nf),
            Family::Bipartite => {
                if !n.is_multiple_of(2) {
                    return Err(Error::param(format!(
                        "bipartite family needs even n, got {n}"
                    )));
                }
                blocks(2, &|a, b| if a != b { 2.0 / nf } else { 0.0 })
            }
            Family::QPartite { q } => {
                if q < 2 || !n.is_multiple_of(q) {
                    return Err(Error::param(format!(
                        "q-partite family needs q >= 2 dividing n (q = {q}, n = {n})"
                    )));
                }
                let w = q as f64 / (nf * (q as f64 - 1.0));
                blocks(q, &|a, b| if a != b { w } else { 0.0 })
            }
            Family::CyclicQPartite { q } => {
                if q < 3 || !n.is_multiple_of(q) {
                    return Err(Error::param(format!(
                        "cyclic q-partite family needs q >= 3 dividing n (q = {q}, n = {n})"
                    )));
                }
                let w = q as f64 / (2.0 * nf);
                blocks(q, &|a, b| {
                    let gap = (a + q - b) % q;
                    if gap == 1 || gap == q - 1 {
                        w
                    } else {
                        0.0
                    }
                })
            }
            Family::RandomRegular { d } => {
                let seed = seed.ok_or_else(|| {
                    Error::param("random regular construction needs an explicit seed")
                })?;
                Storage::Dense(regular::scaled_adjacency(n, d, seed)?)
            }
            Family::Custom => {
                return Err(Error::param(
                    "custom matrices are created with CouplingMatrix::from_dense",
                ))
            }
        };
        Ok(Self { n, family, storage })
    }

    /// Wraps a row-major dense array, checking symmetry, a zero diagonal and
    /// nonnegativity.
    pub fn from_dense(n: usize, entries: Vec<f64>) -> Result<Self> {
        Self::from_dense_with_family(n, entries, Family::Custom)
    }

    pub(crate) fn from_dense_with_family(
        n: usize,
        mut entries: Vec<f64>,
        family: Family,
    ) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                actual: entries.len(),
            });
        }
        if n < 2 {
            return Err(Error::param("n must be at least 2"));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::param(format!("diagonal entry ({i},{i}) is nonzero")));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::param(format!(
                        "entry ({i},{j}) = {v} is not a nonnegative real"
                    )));
                }
                if j > i {
                    let w = entries[j * n + i];
                    if (v - w).abs() > 1e-12 * v.abs().max(w.abs()).max(1e-300) {
                        return Err(Error::param(format!(
                            "matrix is not symmetric at ({i},{j})"
                        )));
                    }
                    entries[j * n + i] = v;
                }
            }
        }
        Ok(Self {
            n,
            family,
            storage: Storage::Dense(entries),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub(crate) fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Blocks(b) => {
                if i == j {
                    0.0
                } else {
                    b.weight(b.class_of(i), b.class_of(j))
                }
            }
            Storage::Dense(d) => d[i * self.n + j],
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Blocks(b) => {
                let size = b.class_size as f64;
                (0..self.n)
                    .map(|i| {
                        let a = b.class_of(i);
                        (0..b.classes).map(|c| b.weight(a, c) * size).sum::<f64>() - b.weight(a, a)
                    })
                    .collect()
            }
            Storage::Dense(d) => d.chunks(self.n).map(|r| r.iter().sum()).collect(),
        }
    }

    pub fn max_entry(&self) -> f64 {
        match &self.storage {
            Storage::Blocks(b) => {
                let mut m = 0.0f64;
                for a in 0..b.classes {
                    for c in 0..b.classes {
                        if a != c || b.class_size > 1 {
                            m = m.max(b.weight(a, c));
                        }
                    }
                }
                m
            }
            Storage::Dense(d) => d.iter().copied().fold(0.0, f64::max),
        }
    }

    /// `||Q||_F^2` from the entries.
    pub fn frobenius_sq(&self) -> f64 {
        match &self.storage {
            Storage::Blocks(b) => {
                let size = b.class_size as f64;
                let mut s = 0.0;
                for a in 0..b.classes {
                    for c in 0..b.classes {
                        let pairs = if a == c {
                            size * (size - 1.0)
                        } else {
                            size * size
                        };
                        s += b.weight(a, c).powi(2) * pairs;
                    }
                }
                s
            }
            Storage::Dense(d) => d.iter().map(|v| v * v).sum(),
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        if self.n > DENSE_LIMIT {
            return Err(Error::Capacity {
                n: self.n,
                cap: DENSE_LIMIT,
            });
        }
        Ok(match &self.storage {
            Storage::Dense(d) => d.clone(),
            Storage::Blocks(_) => {
                let mut out = vec![0.0; self.n * self.n];
                for i in 0..self.n {
                    for j in 0..self.n {
                        out[i * self.n + j] = self.entry(i, j);
                    }
                }
                out
            }
        })
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.n,
                actual: len,
            })
        }
    }

    /// `Q v`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        Ok(match &self.storage {
            Storage::Blocks(b) => {
                let mixed = b.mixed_sums(&b.class_sums(v));
                v.iter()
                    .enumerate()
                    .map(|(i, &vi)| {
                        let a = b.class_of(i);
                        mixed[a] - b.weight(a, a) * vi
                    })
                    .collect()
            }
            Storage::Dense(d) => d
                .chunks(self.n)
                .map(|row| row.iter().zip(v).map(|(q, x)| q * x).sum())
                .collect(),
        })
    }

    /// Local fields `t_i = sum_j Q(i,j) x_j`.
    pub fn local_fields(&self, spins: &[i8]) -> Result<Vec<f64>> {
        let x: Vec<f64> = spins.iter().map(|&s| f64::from(s)).collect();
        self.mul_vec(&x)
    }

    /// `x^T Q x`. For block storage this depends only on the class sums, so
    /// configurations with equal class sums give bit-identical values.
    pub fn quadratic_form(&self, spins: &[i8]) -> Result<f64> {
        self.check_len(spins.len())?;
        Ok(match &self.storage {
            Storage::Blocks(b) => {
                let sums: Vec<f64> = spins
                    .chunks(b.class_size)
                    .map(|c| c.iter().map(|&s| i64::from(s)).sum::<i64>() as f64)
                    .collect();
                block_quadratic(b, &sums)
            }
            Storage::Dense(_) => {
                let t = self.local_fields(spins)?;
                spins.iter().zip(&t).map(|(&s, t)| f64::from(s) * t).sum()
            }
        })
    }

    /// `x^T B x` and `x^T B^2 x` with `B = Q - 11^T/n`, without forming `B`.
    pub fn centered_quadratic_forms(&self, spins: &[i8]) -> Result<CenteredForms> {
        self.check_len(spins.len())?;
        let n = self.n as f64;
        let xbar = spins.iter().map(|&s| f64::from(s)).sum::<f64>() / n;
        let qx = self.local_fields(spins)?;
        let xqx = self.quadratic_form(spins)?;
        let qx_sq: f64 = qx.iter().map(|v| v * v).sum();
        let one_qx: f64 = qx.iter().sum();
        Ok(CenteredForms {
            xbx: xqx - n * xbar * xbar,
            xb2x: qx_sq - 2.0 * xbar * one_qx + n * xbar * xbar,
        })
    }
}

pub(crate) fn block_quadratic(b: &Blocks, sums: &[f64]) -> f64 {
    let mut s = 0.0;
    for a in 0..b.classes {
        for c in 0..b.classes {
            s += b.weight(a, c) * sums[a] * sums[c];
        }
    }
    let diag: f64 = (0..b.classes)
        .map(|a| b.weight(a, a) * b.class_size as f64)
        .sum();
    s - diag
}
