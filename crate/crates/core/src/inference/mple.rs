//! The MPLE solves `x^T Q x = sum_i t_i tanh(theta t_i)`.

use super::{EstimateResult, Method};
use crate::sampler::SpinConfiguration;

const RELATIVE_TOL: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 1100;
const MAX_NEWTON: usize = 500;

/// Distinct local-field values with multiplicities.
fn group_fields(t: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<f64> = t.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for v in sorted {
        match groups.last_mut() {
            Some(g) if g.0 == v => g.1 += 1.0,
            _ => groups.push((v, 1.0)),
        }
    }
    groups
}

/// `sum_i t_i tanh(theta t_i)` and its derivative in `theta`.
fn score(groups: &[(f64, f64)], theta: f64) -> (f64, f64) {
    let mut f = 0.0;
    let mut df = 0.0;
    for &(t, c) in groups {
        let th = (theta * t).tanh();
        f += c * t * th;
        df += c * t * t * (1.0 - th * th);
    }
    (f, df)
}

/// `sum_i t_i tanh(theta t_i)`.
pub fn pseudo_score(t: &[f64], theta: f64) -> f64 {
    t.iter().map(|&ti| ti * (theta * ti).tanh()).sum()
}

pub fn mple(x: &SpinConfiguration) -> EstimateResult {
    let mut r = mple_from_fields(x.fields(), x.quadratic_form());
    let support: Vec<i8> = x
        .fields()
        .iter()
        .zip(x.spins())
        .filter(|(t, _)| **t != 0.0)
        .map(|(_, &s)| s)
        .collect();
    let statement_exists = !(support.iter().all(|&s| s == 1) || support.iter().all(|&s| s == -1));
    if statement_exists != r.exists && !r.has_flag("degenerate") {
        log::debug!(
            "sign-pattern and boundary existence criteria disagree (boundary says exists = {})",
            r.exists
        );
        r.flags.push("criteria_disagree".into());
    }
    r
}

/// MPLE from local fields and `x^T Q x`. Exists iff
/// `-sum|t_i| < x^T Q x < sum|t_i|`.
pub fn mple_from_fields(t: &[f64], xqx: f64) -> EstimateResult {
    let mut r = EstimateResult::new(Method::MpleNewton);
    let groups = group_fields(t);
    let sum_abs: f64 = groups.iter().map(|(t, c)| c * t.abs()).sum();
    r.diag("sum_abs_t", sum_abs);
    r.diag("xqx", xqx);
    if sum_abs == 0.0 {
        r.flags.push("degenerate".into());
        return r.nonexistent(false);
    }
    let edge = RELATIVE_TOL * sum_abs;
    if xqx >= sum_abs - edge {
        return r.nonexistent(true);
    }
    if xqx <= -sum_abs + edge {
        return r.nonexistent(false);
    }
    let g = |theta: f64| {
        let (f, df) = score(&groups, theta);
        (f - xqx, df)
    };
    let tol = RELATIVE_TOL * sum_abs;

    let (mut lo, mut hi);
    let (g1, _) = g(1.0);
    if g1 == 0.0 {
        lo = 1.0;
        hi = 1.0;
    } else if g1 < 0.0 {
        lo = 1.0;
        let mut step = 1.0;
        hi = 2.0;
        let mut k = 0;
        while g(hi).0 < 0.0 && k < MAX_DOUBLINGS {
            lo = hi;
            step *= 2.0;
            hi = 1.0 + step;
            k += 1;
        }
        r.iterations += k;
    } else {
        hi = 1.0;
        let mut step = 1.0;
        lo = 0.0;
        let mut k = 0;
        while g(lo).0 > 0.0 && k < MAX_DOUBLINGS {
            hi = lo;
            step *= 2.0;
            lo = 1.0 - step;
            k += 1;
        }
        r.iterations += k;
    }
    r.bracket = (lo, hi);

    let mut theta = if (lo..=hi).contains(&1.0) {
        1.0
    } else {
        0.5 * (lo + hi)
    };
    let mut last = g(theta);
    for _ in 0..MAX_NEWTON {
        r.iterations += 1;
        let (f, df) = last;
        if f.abs() <= tol || lo == hi {
            break;
        }
        if f < 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        let newton = theta - f / df;
        let next = if df > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == theta || hi - lo <= 4.0 * f64::EPSILON * theta.abs().max(1.0) {
            break;
        }
        theta = next;
        last = g(theta);
    }
    debug_assert!(theta >= r.bracket.0 && theta <= r.bracket.1);
    r.value = theta;
    r.exists = true;
    r.diag("residual", last.0.abs());
    r.diag("gradient", last.1);
    if last.0.abs() > tol {
        r.flags.push("residual_above_tolerance".into());
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{CouplingMatrix, Family};

    fn config(family: Family, spins: Vec<i8>) -> SpinConfiguration {
        let q = CouplingMatrix::build(family, spins.len(), Some(1)).unwrap();
        SpinConfiguration::new(&q, spins).unwrap()
    }

    #[test]
    fn zero_statistic_gives_zero() {
        let r = mple(&config(Family::Complete, vec![1, 1, 1, -1]));
        assert!(r.exists);
        assert!(r.value.abs() < 1e-10);
    }

    #[test]
    fn all_ones_is_an_upper_boundary() {
        for family in [
            Family::Complete,
            Family::Bipartite,
            Family::QPartite { q: 3 },
        ] {
            let r = mple(&config(family, vec![1; 6]));
            assert!(!r.exists);
            assert_eq!(r.value, f64::INFINITY);
        }
    }

    #[test]
    fn two_up_two_down_complete_is_a_lower_boundary() {
        let r = mple(&config(Family::Complete, vec![1, 1, -1, -1]));
        assert!(!r.exists);
        assert_eq!(r.value, f64::NEG_INFINITY);
        assert!(r.has_flag("criteria_disagree"));
    }

    #[test]
    fn degenerate_fields() {
        let r = mple_from_fields(&[0.0, 0.0], 0.0);
        assert!(!r.exists && r.has_flag("degenerate"));
    }

    #[test]
    fn residual_and_bracket_on_interior_point() {
        let t = [0.3, -0.1, 0.45, 0.2, 0.2];
        let xqx = 0.5 * pseudo_score(&t, 2.5);
        let r = mple_from_fields(&t, xqx);
        assert!(r.exists);
        assert!(r.residual().unwrap() < 1e-12 * 1.25);
        assert!(r.value >= r.bracket.0 && r.value <= r.bracket.1);
        assert!((pseudo_score(&t, r.value) - xqx).abs() < 1e-12);
    }

    #[test]
    fn large_and_negative_roots() {
        let t = [0.5, 0.5, -0.25];
        let sum_abs = 1.25;
        for target in [sum_abs * (1.0 - 1e-9), -sum_abs * (1.0 - 1e-9), -0.3] {
            let r = mple_from_fields(&t, target);
            assert!(r.exists, "{target}");
            assert!((pseudo_score(&t, r.value) - target).abs() < 1e-11);
        }
    }
}
