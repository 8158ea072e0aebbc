//! CSV dumps of sampled configurations.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::SpinConfiguration;
use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};

/// One replication summary: `seed, n, theta, xbar, xqx, xbx, xb2x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub seed: u64,
    pub n: usize,
    pub theta: f64,
    pub xbar: f64,
    pub xqx: f64,
    pub xbx: f64,
    pub xb2x: f64,
}

impl SampleRow {
    pub fn new(q: &CouplingMatrix, x: &SpinConfiguration, seed: u64, theta: f64) -> Result<Self> {
        let forms = q.centered_quadratic_forms(x.spins())?;
        Ok(Self {
            seed,
            n: x.n(),
            theta,
            xbar: x.mean(),
            xqx: x.quadratic_form(),
            xbx: forms.xbx,
            xb2x: forms.xb2x,
        })
    }
}

pub fn write_sample_csv<W: Write>(rows: &[SampleRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "seed,n,theta,xbar,xqx,xbx,xb2x")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.seed, r.n, r.theta, r.xbar, r.xqx, r.xbx, r.xb2x
        )?;
    }
    Ok(())
}

/// One configuration per line: the seed, then `n` spins as `1` / `-1`.
pub fn write_spins_csv<W: Write>(rows: &[(u64, Vec<i8>)], mut w: W) -> std::io::Result<()> {
    for (seed, spins) in rows {
        write!(w, "{seed}")?;
        for s in spins {
            write!(w, ",{s}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_spins_csv<R: BufRead>(r: R) -> Result<Vec<(u64, Vec<i8>)>> {
    let mut out = Vec::new();
    for (ln, line) in r.lines().enumerate() {
        let err = |message: String| Error::Parse {
            line: ln + 1,
            message,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let seed = fields
            .next()
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| err("first column must be an unsigned seed".into()))?;
        let spins = fields
            .map(|f| match f.trim() {
                "1" | "+1" => Ok(1),
                "-1" => Ok(-1),
                other => Err(err(format!("bad spin `{other}`"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        out.push((seed, spins));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spins_round_trip() {
        let rows = vec![(3u64, vec![1i8, -1, 1]), (9, vec![-1, -1, 1])];
        let mut buf = Vec::new();
        write_spins_csv(&rows, &mut buf).unwrap();
        assert_eq!(read_spins_csv(buf.as_slice()).unwrap(), rows);
        assert!(read_spins_csv("1,1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn sample_csv_header() {
        let mut buf = Vec::new();
        write_sample_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "seed,n,theta,xbar,xqx,xbx,xb2x\n"
        );
    }
}
