//! Local regularity statistics and comparative local regularity (CLR).
//!
//! For every node the distances to its `k` nearest neighbours give a mean
//! `delta_bar` and a population standard deviation `sigma`. CLR compares these
//! statistics between a fine set and one of its subsamples at the shared nodes:
//! both distributions are min-max normalised to `[0, 1]` and the Euclidean norm of
//! their difference is reported. Lower is better; values are only comparable
//! between equally sized subsamples of the same fine set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodeset::{collocate, KdTree, NodeSet, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalRegularity {
    pub k: usize,
    pub delta_bar: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClrReport {
    pub k: usize,
    pub clr_avg: f64,
    pub clr_sd: f64,
    /// Position in the fine set of every coarse node.
    #[serde(skip)]
    pub coarse_to_fine: Vec<usize>,
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyInput("local regularity of an empty node set"));
    }
    if k == 0 || k >= n {
        return Err(Error::Size {
            what: "regularity k must be in 1..N",
            requested: k,
            available: n,
        });
    }
    Ok(())
}

fn stats_at(tree: &KdTree, queries: &[Point], k: usize) -> (Vec<f64>, Vec<f64>) {
    queries
        .par_iter()
        .map(|&q| {
            let nb = tree.nearest(q, k + 1);
            let d: Vec<f64> = nb[1..].iter().map(|n| n.distance).collect();
            let mean = d.iter().sum::<f64>() / k as f64;
            let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / k as f64;
            (mean, var.sqrt())
        })
        .unzip()
}

pub fn local_regularity(nodes: &NodeSet, k: usize) -> Result<LocalRegularity> {
    check_k(k, nodes.len())?;
    let tree = KdTree::new(nodes.coords());
    let (delta_bar, sigma) = stats_at(&tree, nodes.coords(), k);
    Ok(LocalRegularity { k, delta_bar, sigma })
}

/// Min-max normalisation; a constant distribution maps to all zeros.
pub fn normalize_min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / range).collect()
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    // sequential in index order so results are reproducible
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += (x - y) * (x - y);
    }
    s.sqrt()
}

/// Comparative local regularity of `coarse` against `fine`. Every coarse node must
/// be present in `fine` with identical coordinates.
pub fn clr(fine: &NodeSet, coarse: &NodeSet, k: usize) -> Result<ClrReport> {
    check_k(k, coarse.len())?;
    let coarse_to_fine = collocate(fine, coarse)?;
    let fine_tree = KdTree::new(fine.coords());
    let (fine_avg, fine_sd) = stats_at(&fine_tree, coarse.coords(), k);
    let coarse_reg = local_regularity(coarse, k)?;
    let clr_avg = l2_diff(&normalize_min_max(&fine_avg), &normalize_min_max(&coarse_reg.delta_bar));
    let clr_sd = l2_diff(&normalize_min_max(&fine_sd), &normalize_min_max(&coarse_reg.sigma));
    Ok(ClrReport {
        k,
        clr_avg,
        clr_sd,
        coarse_to_fine,
    })
}

/// CLR for every `k` in `ks`.
pub fn clr_sweep(fine: &NodeSet, coarse: &NodeSet, ks: impl IntoIterator<Item = usize>) -> Result<Vec<ClrReport>> {
    ks.into_iter().map(|k| clr(fine, coarse, k)).collect()
}
