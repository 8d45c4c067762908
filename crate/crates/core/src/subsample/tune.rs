//! Bisection on a coarsening factor to reach a target node count.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuned {
    pub factor: f64,
    pub count: usize,
}

/// Searches `factor` in `[lo, hi]` so that `count_for(factor)` lands within
/// `rel_tol * target` of `target`. `count_for` must be (roughly) non-increasing in
/// the factor. Returns the closest factor found if the tolerance is never met.
pub fn fit_factor<F>(
    target: usize,
    rel_tol: f64,
    mut lo: f64,
    mut hi: f64,
    max_iter: usize,
    mut count_for: F,
) -> Result<Tuned>
where
    F: FnMut(f64) -> Result<usize>,
{
    if !(lo < hi) {
        return Err(Error::Validation(format!("empty search interval [{lo}, {hi}]")));
    }
    let slack = (rel_tol * target as f64).max(0.0);
    let mut best: Option<Tuned> = None;
    let consider = |factor: f64, count: usize, best: &mut Option<Tuned>| {
        let gap = (count as f64 - target as f64).abs();
        if best.map_or(true, |b| gap < (b.count as f64 - target as f64).abs()) {
            *best = Some(Tuned { factor, count });
        }
        gap <= slack
    };
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let count = count_for(mid)?;
        if consider(mid, count, &mut best) {
            break;
        }
        if count > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.ok_or_else(|| Error::Validation("factor search did not run".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_monotone_target() {
        let t = fit_factor(250, 0.0, 1.0, 10.0, 60, |c| Ok((1000.0 / c) as usize)).unwrap();
        assert_eq!(t.count, 250);
        assert!(t.factor > 1000.0 / 251.0 && t.factor <= 4.0);
    }
}
