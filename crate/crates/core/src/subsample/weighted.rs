//! Greedy weighted sample elimination adapted to variable density.
//!
//! Node `i` carries the weight
//!
//! ```text
//! w_i = sum over surviving j in kNN(i) of max(0, 1 - d_ij / r_i)^alpha,
//! r_i = radius_factor * (nearest-neighbour distance of i in the fine set)
//! ```
//!
//! and the heaviest node is removed until `target_count` nodes remain. Normalising
//! by the local nearest-neighbour distance keeps the elimination density-relative.
//! This weight is a reconstruction; only the greedy removal structure is fixed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodeset::{knn, NeighborTable, NodeSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedParams {
    pub target_count: usize,
    pub k: usize,
    pub alpha: f64,
    pub radius_factor: f64,
}

impl WeightedParams {
    pub fn new(target_count: usize) -> Self {
        WeightedParams {
            target_count,
            k: 10,
            alpha: 8.0,
            radius_factor: 3.44,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_count < 1 {
            return Err(Error::Validation("weighted target_count must be at least 1".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Validation(format!(
                "weight exponent must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.radius_factor > 0.0) {
            return Err(Error::Validation(format!(
                "radius factor must be positive, got {}",
                self.radius_factor
            )));
        }
        if self.k < 1 {
            return Err(Error::Validation("weighted k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, PartialEq)]
struct Entry {
    weight: f64,
    index: usize,
    version: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    // max-heap on weight, then smaller index
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight.total_cmp(&other.weight).then(other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn node_weight(table: &NeighborTable, alive: &[bool], i: usize, radius: f64, alpha: f64) -> f64 {
    let mut w = 0.0;
    for (&j, &d) in table.indices(i)[1..].iter().zip(&table.distances(i)[1..]) {
        if alive[j] {
            w += (1.0 - d / radius).max(0.0).powf(alpha);
        }
    }
    w
}

/// Returns the survivors in input order.
pub fn weighted(nodes: &NodeSet, params: &WeightedParams) -> Result<NodeSet> {
    let kept = weighted_indices(nodes, params)?;
    Ok(nodes.select(&kept))
}

pub fn weighted_indices(nodes: &NodeSet, params: &WeightedParams) -> Result<Vec<usize>> {
    params.validate()?;
    let n = nodes.len();
    if params.target_count > n {
        return Err(Error::Size {
            what: "weighted target_count exceeds the node count",
            requested: params.target_count,
            available: n,
        });
    }
    if params.target_count == n {
        return Ok((0..n).collect());
    }
    let k = params.k.min(n - 1);
    let table = knn(nodes, k)?;
    let radius: Vec<f64> = (0..n)
        .map(|i| params.radius_factor * table.nearest_distance(i))
        .collect();

    // reverse[j] = nodes that have j among their neighbours
    let mut reverse_start = vec![0usize; n + 1];
    for i in 0..n {
        for &j in &table.indices(i)[1..] {
            reverse_start[j + 1] += 1;
        }
    }
    for j in 0..n {
        reverse_start[j + 1] += reverse_start[j];
    }
    let mut fill = reverse_start.clone();
    let mut reverse = vec![0usize; reverse_start[n]];
    for i in 0..n {
        for &j in &table.indices(i)[1..] {
            reverse[fill[j]] = i;
            fill[j] += 1;
        }
    }

    let mut alive = vec![true; n];
    let mut version = vec![0u32; n];
    let mut heap: BinaryHeap<Entry> = (0..n)
        .map(|i| Entry {
            weight: node_weight(&table, &alive, i, radius[i], params.alpha),
            index: i,
            version: 0,
        })
        .collect();

    let mut remaining = n;
    while remaining > params.target_count {
        let Some(top) = heap.pop() else { break };
        if !alive[top.index] || top.version != version[top.index] {
            continue;
        }
        alive[top.index] = false;
        remaining -= 1;
        for &i in &reverse[reverse_start[top.index]..reverse_start[top.index + 1]] {
            if alive[i] {
                version[i] += 1;
                heap.push(Entry {
                    weight: node_weight(&table, &alive, i, radius[i], params.alpha),
                    index: i,
                    version: version[i],
                });
            }
        }
    }
    Ok((0..n).filter(|&i| alive[i]).collect())
}
