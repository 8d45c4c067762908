use serde::{Deserialize, Serialize};

use super::boundary::{subsample_with_boundary_indices, BoundaryMode, BoundaryPipelineParams};
use super::moving_front::MovingFrontParams;
use crate::error::{Error, Result};
use crate::nodeset::{collocate, NodeSet, Role};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyParams {
    /// Minimum boundary node count on the coarsest level.
    pub n_min: usize,
    pub mf: MovingFrontParams,
    pub boundary: BoundaryPipelineParams,
    /// Per-pass override of `mf.c`; pass `j` (0-based) uses `level_c[j]` when present.
    #[serde(default)]
    pub level_c: Vec<f64>,
}

impl HierarchyParams {
    pub fn new(n_min: usize) -> Self {
        HierarchyParams {
            n_min,
            mf: MovingFrontParams::default(),
            boundary: BoundaryPipelineParams::default(),
            level_c: Vec::new(),
        }
    }
}

/// Nested node sets, finest first. Every level stores its interior nodes first and
/// its boundary nodes after them, boundary in curve order.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelHierarchy {
    levels: Vec<NodeSet>,
    inject: Vec<Vec<usize>>,
}

impl LevelHierarchy {
    /// Assembles a hierarchy from explicit levels, deriving the injection maps by
    /// coordinate identity.
    pub fn from_levels(levels: Vec<NodeSet>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::EmptyInput("hierarchy needs at least one level"));
        }
        let inject = levels
            .windows(2)
            .map(|w| collocate(&w[0], &w[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(LevelHierarchy { levels, inject })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[NodeSet] {
        &self.levels
    }

    pub fn level(&self, j: usize) -> &NodeSet {
        &self.levels[j]
    }

    /// Position in level `j` of each node of level `j + 1`.
    pub fn inject(&self, j: usize) -> &[usize] {
        &self.inject[j]
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(NodeSet::len).collect()
    }

    /// Position in the finest level of each node of level `j`, composed from the
    /// injection maps.
    pub fn finest_indices(&self, j: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.levels[j].len()).collect();
        for l in (0..j).rev() {
            let map = &self.inject[l];
            for v in idx.iter_mut() {
                *v = map[*v];
            }
        }
        idx
    }
}

fn split_roles(nodes: &NodeSet) -> (NodeSet, NodeSet) {
    let (d, b): (Vec<usize>, Vec<usize>) = (0..nodes.len()).partition(|&i| nodes.role(i) == Role::Interior);
    (nodes.select(&d), nodes.select(&b))
}

/// Builds the multilevel node hierarchy by repeated boundary-aware moving-front
/// coarsening. Stops before any level whose boundary would fall below `n_min`
/// nodes, or when a pass no longer removes anything.
pub fn mlmfsub(domain: &NodeSet, boundary: &NodeSet, params: &HierarchyParams) -> Result<LevelHierarchy> {
    if boundary.len() < params.n_min {
        return Err(Error::Validation(format!(
            "boundary has {} nodes, fewer than n_min = {}",
            boundary.len(),
            params.n_min
        )));
    }
    let pipeline = BoundaryPipelineParams {
        mode: BoundaryMode::Separate,
        ..params.boundary
    };
    let finest = domain
        .with_all_roles(Role::Interior)
        .concat(&boundary.with_all_roles(Role::Boundary))?;
    let mut levels = vec![finest];
    let mut cur_domain = domain.with_all_roles(Role::Interior);
    let mut cur_boundary = boundary.with_all_roles(Role::Boundary);
    let mut order = params.mf.order;

    loop {
        let pass = levels.len() - 1;
        let c = params.level_c.get(pass).copied().unwrap_or(params.mf.c);
        let mf = params.mf.with_c(c).with_order(order);
        let sel = subsample_with_boundary_indices(&cur_domain, &cur_boundary, &pipeline, &mf)?;
        if sel.boundary.len() < params.n_min {
            break;
        }
        if sel.domain.len() + sel.boundary.len() == cur_domain.len() + cur_boundary.len() {
            break;
        }
        cur_domain = cur_domain.select(&sel.domain);
        cur_boundary = cur_boundary.select(&sel.boundary);
        levels.push(cur_domain.concat(&cur_boundary)?);
        if params.boundary.alternate_direction {
            order = order.reversed();
        }
    }
    LevelHierarchy::from_levels(levels)
}

/// Splits a level back into (interior, boundary) node sets.
pub fn split_level(level: &NodeSet) -> (NodeSet, NodeSet) {
    split_roles(level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn ring(n: usize, r: f64) -> Vec<[f64; 2]> {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                [r * t.cos(), r * t.sin()]
            })
            .collect()
    }

    fn disk() -> (NodeSet, NodeSet) {
        let mut interior = Vec::new();
        let h = 0.02;
        let m = (0.5 / h) as i64;
        for i in -m..=m {
            for j in -m..=m {
                let p = [i as f64 * h + 0.003 * ((i * j) % 3) as f64, j as f64 * h];
                if (p[0] * p[0] + p[1] * p[1]).sqrt() < 0.5 - h {
                    interior.push(p);
                }
            }
        }
        (
            NodeSet::interior(interior).unwrap(),
            NodeSet::boundary(ring(160, 0.5)).unwrap(),
        )
    }

    #[test]
    fn boundary_at_n_min_gives_single_level() {
        let (d, b) = disk();
        let h = mlmfsub(&d, &b, &HierarchyParams::new(b.len())).unwrap();
        assert_eq!(h.depth(), 1);
        assert_eq!(h.level(0).len(), d.len() + b.len());
    }

    #[test]
    fn too_few_boundary_nodes_is_an_error() {
        let (d, b) = disk();
        assert!(matches!(
            mlmfsub(&d, &b, &HierarchyParams::new(b.len() + 1)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn levels_shrink_and_respect_n_min() {
        let (d, b) = disk();
        let h = mlmfsub(&d, &b, &HierarchyParams::new(20)).unwrap();
        assert!(h.depth() >= 3, "{:?}", h.level_sizes());
        for w in h.level_sizes().windows(2) {
            assert!(w[1] < w[0]);
        }
        for l in h.levels() {
            assert!(l.count_role(Role::Boundary) >= 20);
        }
        // injection law and composition
        for j in 0..h.depth() - 1 {
            let gathered = h.level(j).select(h.inject(j));
            assert_eq!(&gathered, h.level(j + 1));
        }
        let last = h.depth() - 1;
        let gathered = h.level(0).select(&h.finest_indices(last));
        assert_eq!(&gathered, h.level(last));
    }
}
