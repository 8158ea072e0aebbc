//! Plain-text matrix format: a line holding `n`, then `n` rows of `n`
//! space-separated decimals.

use std::io::{BufRead, Write};

use super::CouplingMatrix;
use crate::error::{Error, Result};

pub fn write_text<W: Write>(q: &CouplingMatrix, mut w: W) -> std::io::Result<()> {
    let n = q.n();
    writeln!(w, "{n}")?;
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for j in 0..n {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&q.entry(i, j).to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Reads a matrix as a [`super::Family::Custom`] coupling.
pub fn read_text<R: BufRead>(r: R) -> Result<CouplingMatrix> {
    let mut lines = r
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let parse_err = |line: usize, message: String| Error::Parse {
        line: line + 1,
        message,
    };
    let (ln, first) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty matrix file".into()))?;
    let first = first.map_err(|e| parse_err(ln, e.to_string()))?;
    let n: usize = first.trim().parse().map_err(|_| {
        parse_err(
            ln,
            format!("expected the dimension, found `{}`", first.trim()),
        )
    })?;
    let mut entries = Vec::with_capacity(n * n);
    for row in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(ln + row + 1, format!("missing row {row}")))?;
        let line = line.map_err(|e| parse_err(ln, e.to_string()))?;
        let before = entries.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(ln, format!("bad number `{tok}`")))?;
            entries.push(v);
        }
        if entries.len() - before != n {
            return Err(parse_err(
                ln,
                format!("expected {n} entries, found {}", entries.len() - before),
            ));
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing data after the last row".into()));
    }
    CouplingMatrix::from_dense(n, entries)
}
