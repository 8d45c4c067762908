//! Boundary-aware coarsening.
//!
//! `Separate` mode coarsens the boundary as a closed curve first, clears domain
//! nodes that crowd the surviving boundary nodes, then coarsens what is left of the
//! domain. `Naive` mode mixes boundary and domain into one sweep and exists mainly
//! to show how that thins the boundary unevenly.

use serde::{Deserialize, Serialize};

use super::moving_front::{moving_front_indices, MovingFrontParams};
use crate::error::{Error, Result};
use crate::nodeset::{distance, KdTree, NodeSet, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    Naive,
    #[default]
    Separate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPipelineParams {
    pub mode: BoundaryMode,
    /// Domain nodes closer than this multiple of the local coarse boundary spacing
    /// to a surviving boundary node are removed.
    pub clearance_factor: f64,
    /// Reverse the sweep direction between successive coarsening passes.
    pub alternate_direction: bool,
}

impl Default for BoundaryPipelineParams {
    fn default() -> Self {
        BoundaryPipelineParams {
            mode: BoundaryMode::Separate,
            clearance_factor: 0.7,
            alternate_direction: false,
        }
    }
}

impl BoundaryPipelineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.clearance_factor > 0.0) || !self.clearance_factor.is_finite() {
            return Err(Error::Validation(format!(
                "clearance factor must be positive, got {}",
                self.clearance_factor
            )));
        }
        Ok(())
    }
}

/// Moving front along a closed curve given in traversal order. The sweep follows
/// the traversal order and each node's neighbours are its two curve-adjacent nodes.
/// Returns surviving positions in traversal order.
pub fn moving_front_curve(curve: &NodeSet, c: f64) -> Vec<usize> {
    let n = curve.len();
    if n <= 1 {
        return (0..n).collect();
    }
    let p = curve.coords();
    let mut marked = vec![false; n];
    for i in 0..n {
        if marked[i] {
            continue;
        }
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        let d_prev = distance(p[i], p[prev]);
        let d_next = distance(p[i], p[next]);
        let reach = c * d_prev.min(d_next);
        for (j, d) in [(next, d_next), (prev, d_prev)] {
            if j > i && d < reach {
                marked[j] = true;
            }
        }
    }
    (0..n).filter(|&i| !marked[i]).collect()
}

/// Distance from each node of a closed curve to its nearer curve neighbour.
pub(crate) fn curve_spacing(curve: &NodeSet) -> Vec<f64> {
    let n = curve.len();
    let p = curve.coords();
    (0..n)
        .map(|i| {
            if n == 1 {
                return 0.0;
            }
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            distance(p[i], p[prev]).min(distance(p[i], p[next]))
        })
        .collect()
}

/// Survivor positions from one boundary-aware pass: indices into `domain` (sweep
/// order) and into `boundary` (traversal order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassSelection {
    pub domain: Vec<usize>,
    pub boundary: Vec<usize>,
}

pub fn subsample_with_boundary_indices(
    domain: &NodeSet,
    boundary: &NodeSet,
    params: &BoundaryPipelineParams,
    mf: &MovingFrontParams,
) -> Result<PassSelection> {
    params.validate()?;
    mf.validate()?;
    match params.mode {
        BoundaryMode::Separate => {
            if boundary.is_empty() {
                return Err(Error::Validation(
                    "separate boundary handling needs a non-empty boundary".into(),
                ));
            }
            let kept_b = moving_front_curve(boundary, mf.c);
            let coarse_b = boundary.select(&kept_b);
            let spacing = curve_spacing(&coarse_b);

            let mut cleared = vec![false; domain.len()];
            if !domain.is_empty() {
                let tree = KdTree::new(domain.coords());
                for (b, s) in coarse_b.coords().iter().zip(&spacing) {
                    for nb in tree.within(*b, params.clearance_factor * s) {
                        cleared[nb.index] = true;
                    }
                }
            }
            let remaining: Vec<usize> = (0..domain.len()).filter(|&i| !cleared[i]).collect();
            let kept_d = coarsen_small(&domain.select(&remaining), mf)?
                .into_iter()
                .map(|i| remaining[i])
                .collect();
            Ok(PassSelection {
                domain: kept_d,
                boundary: kept_b,
            })
        }
        BoundaryMode::Naive => {
            let merged = domain
                .with_all_roles(Role::Interior)
                .concat(&boundary.with_all_roles(Role::Boundary))?;
            let kept = coarsen_small(&merged, mf)?;
            let split = domain.len();
            Ok(PassSelection {
                domain: kept.iter().copied().filter(|&i| i < split).collect(),
                boundary: kept.iter().filter(|&&i| i >= split).map(|&i| i - split).collect(),
            })
        }
    }
}

/// Moving front that tolerates sets too small for the requested `k`.
fn coarsen_small(nodes: &NodeSet, mf: &MovingFrontParams) -> Result<Vec<usize>> {
    match nodes.len() {
        0 | 1 => Ok((0..nodes.len()).collect()),
        n => {
            let mut p = *mf;
            p.k = p.k.min(n - 1);
            moving_front_indices(nodes, &p)
        }
    }
}

/// One boundary-aware coarsening pass. Returns (coarse domain, coarse boundary).
pub fn subsample_with_boundary(
    domain: &NodeSet,
    boundary: &NodeSet,
    params: &BoundaryPipelineParams,
    mf: &MovingFrontParams,
) -> Result<(NodeSet, NodeSet)> {
    let sel = subsample_with_boundary_indices(domain, boundary, params, mf)?;
    Ok((
        domain.select(&sel.domain).with_all_roles(Role::Interior),
        boundary.select(&sel.boundary).with_all_roles(Role::Boundary),
    ))
}
