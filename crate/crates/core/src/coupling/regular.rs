//! Random `d`-regular simple graphs for dense `d`.
//!
//! Starts from a circulant `d`-regular graph and randomizes it with
//! degree-preserving double-edge switches.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Switch attempts per edge.
const SWITCHES_PER_EDGE: usize = 10;

/// Row-major `n x n` matrix with `1/d` on the edges of a random `d`-regular graph.
pub(crate) fn scaled_adjacency(n: usize, d: usize, seed: u64) -> Result<Vec<f64>> {
    if d == 0 || d >= n {
        return Err(Error::param(format!(
            "degree must satisfy 1 <= d < n (d = {d}, n = {n})"
        )));
    }
    if !(d * n).is_multiple_of(2) {
        return Err(Error::param(format!(
            "d * n must be even (d = {d}, n = {n})"
        )));
    }
    let mut adj = vec![false; n * n];
    let mut edges = Vec::with_capacity(n * d / 2);
    let connect = |adj: &mut Vec<bool>, edges: &mut Vec<(usize, usize)>, a: usize, b: usize| {
        if !adj[a * n + b] {
            adj[a * n + b] = true;
            adj[b * n + a] = true;
            edges.push((a.min(b), a.max(b)));
        }
    };
    for i in 0..n {
        for k in 1..=d / 2 {
            connect(&mut adj, &mut edges, i, (i + k) % n);
        }
        if d % 2 == 1 {
            connect(&mut adj, &mut edges, i, (i + n / 2) % n);
        }
    }

    let mut rng = rng_from_seed(seed);
    let m = edges.len();
    for _ in 0..SWITCHES_PER_EDGE * m {
        let e1 = rng.random_range(0..m);
        let e2 = rng.random_range(0..m);
        if e1 == e2 {
            continue;
        }
        let (a, b) = edges[e1];
        let (mut c, mut e) = edges[e2];
        if rng.random::<bool>() {
            std::mem::swap(&mut c, &mut e);
        }
        // (a,b),(c,e) -> (a,c),(b,e)
        if a == c || b == e || a == e || b == c {
            continue;
        }
        if adj[a * n + c] || adj[b * n + e] {
            continue;
        }
        adj[a * n + b] = false;
        adj[b * n + a] = false;
        adj[c * n + e] = false;
        adj[e * n + c] = false;
        adj[a * n + c] = true;
        adj[c * n + a] = true;
        adj[b * n + e] = true;
        adj[e * n + b] = true;
        edges[e1] = (a.min(c), a.max(c));
        edges[e2] = (b.min(e), b.max(e));
    }

    for i in 0..n {
        let degree = adj[i * n..(i + 1) * n].iter().filter(|&&x| x).count();
        if degree != d || adj[i * n + i] {
            return Err(Error::Construction(format!(
                "vertex {i} has degree {degree} after switching, expected {d}"
            )));
        }
    }
    let w = 1.0 / d as f64;
    Ok(adj.into_iter().map(|x| if x { w } else { 0.0 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_simple_and_seeded() {
        for (n, d) in [(10, 3), (12, 6), (40, 20), (9, 8)] {
            let q = scaled_adjacency(n, d, 5).unwrap();
            for i in 0..n {
                assert_eq!(q[i * n + i], 0.0);
                let s: f64 = q[i * n..(i + 1) * n].iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
                for j in 0..n {
                    assert_eq!(q[i * n + j], q[j * n + i]);
                }
            }
        }
        assert_eq!(
            scaled_adjacency(30, 10, 1).unwrap(),
            scaled_adjacency(30, 10, 1).unwrap()
        );
        assert_ne!(
            scaled_adjacency(30, 10, 1).unwrap(),
            scaled_adjacency(30, 10, 2).unwrap()
        );
    }
}
