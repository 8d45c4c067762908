//! Node sets, nearest-neighbour queries and directional sorting.
//!
//! A [`NodeSet`] is an ordered list of distinct, finite 2-D points, each tagged as
//! interior or boundary. Everything else in the crate consumes and produces node sets.

mod io;
mod kdtree;

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use io::write_atomic;
pub use io::{format_nodes, parse_nodes, read_nodes, write_nodes};
pub use kdtree::{KdTree, Neighbor};

pub type Point = [f64; 2];

/// Euclidean distance. Every distance in the crate goes through this formula so
/// that independently computed tables agree bit for bit.
#[inline]
pub fn distance(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Interior,
    Boundary,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Interior => "interior",
            Role::Boundary => "boundary",
        }
    }
}

/// Hashable identity of a coordinate pair. `-0.0` and `0.0` map to the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoordKey(u64, u64);

impl CoordKey {
    pub fn of(p: Point) -> Self {
        CoordKey((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeSet {
    coords: Vec<Point>,
    roles: Vec<Role>,
}

impl NodeSet {
    /// Builds a validated node set: coordinates must be finite and pairwise distinct.
    pub fn new(coords: Vec<Point>, roles: Vec<Role>) -> Result<Self> {
        if coords.len() != roles.len() {
            return Err(Error::Validation(format!(
                "{} coordinates but {} roles",
                coords.len(),
                roles.len()
            )));
        }
        let mut seen = HashMap::with_capacity(coords.len());
        for (i, p) in coords.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::Validation(format!("node {i} has non-finite coordinates")));
            }
            if let Some(j) = seen.insert(CoordKey::of(*p), i) {
                return Err(Error::Validation(format!(
                    "nodes {j} and {i} share coordinates ({}, {})",
                    p[0], p[1]
                )));
            }
        }
        Ok(NodeSet { coords, roles })
    }

    pub fn with_role(coords: Vec<Point>, role: Role) -> Result<Self> {
        let roles = vec![role; coords.len()];
        Self::new(coords, roles)
    }

    pub fn interior(coords: Vec<Point>) -> Result<Self> {
        Self::with_role(coords, Role::Interior)
    }

    pub fn boundary(coords: Vec<Point>) -> Result<Self> {
        Self::with_role(coords, Role::Boundary)
    }

    pub fn empty() -> Self {
        NodeSet::default()
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn point(&self, i: usize) -> Point {
        self.coords[i]
    }

    pub fn role(&self, i: usize) -> Role {
        self.roles[i]
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        self.roles.iter().map(|r| *r == Role::Boundary).collect()
    }

    pub fn count_role(&self, role: Role) -> usize {
        self.roles.iter().filter(|r| **r == role).count()
    }

    /// Subset in the given index order.
    pub fn select(&self, indices: &[usize]) -> NodeSet {
        NodeSet {
            coords: indices.iter().map(|&i| self.coords[i]).collect(),
            roles: indices.iter().map(|&i| self.roles[i]).collect(),
        }
    }

    /// Concatenation; fails if the two sets share a coordinate.
    pub fn concat(&self, other: &NodeSet) -> Result<NodeSet> {
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        let mut roles = self.roles.clone();
        roles.extend_from_slice(&other.roles);
        NodeSet::new(coords, roles)
    }

    pub fn with_all_roles(&self, role: Role) -> NodeSet {
        NodeSet {
            coords: self.coords.clone(),
            roles: vec![role; self.len()],
        }
    }

    pub fn coord_index(&self) -> HashMap<CoordKey, usize> {
        self.coords
            .iter()
            .enumerate()
            .map(|(i, p)| (CoordKey::of(*p), i))
            .collect()
    }
}

/// For each node of `subset`, its position in `superset`, matched by exact
/// coordinate identity.
pub fn collocate(superset: &NodeSet, subset: &NodeSet) -> Result<Vec<usize>> {
    let index = superset.coord_index();
    let mut map = Vec::with_capacity(subset.len());
    let mut missing = Vec::new();
    for (i, p) in subset.coords().iter().enumerate() {
        match index.get(&CoordKey::of(*p)) {
            Some(&j) => map.push(j),
            None => missing.push(i),
        }
    }
    if missing.is_empty() {
        Ok(map)
    } else {
        Err(Error::Collocation { missing })
    }
}

/// Indices and distances of the `k` nearest neighbours of every node.
/// Column 0 of each row is the node itself at distance 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len() / (self.k + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self, i: usize) -> &[usize] {
        let w = self.k + 1;
        &self.indices[i * w..(i + 1) * w]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        let w = self.k + 1;
        &self.distances[i * w..(i + 1) * w]
    }

    /// Distance from node `i` to its nearest other node.
    pub fn nearest_distance(&self, i: usize) -> f64 {
        self.distances(i)[1]
    }
}

/// k-nearest-neighbour table via a kd-tree. Equidistant neighbours are ordered by
/// smaller index, so the result is fully deterministic.
pub fn knn(nodes: &NodeSet, k: usize) -> Result<NeighborTable> {
    if nodes.is_empty() {
        return Err(Error::EmptyInput("knn on an empty node set"));
    }
    if k >= nodes.len() {
        return Err(Error::Size {
            what: "neighbour count k must be below the node count",
            requested: k,
            available: nodes.len(),
        });
    }
    let tree = KdTree::new(nodes.coords());
    let w = k + 1;
    let mut indices = vec![0usize; nodes.len() * w];
    let mut distances = vec![0.0f64; nodes.len() * w];
    indices
        .par_chunks_mut(w)
        .zip(distances.par_chunks_mut(w))
        .enumerate()
        .for_each_init(
            || Vec::with_capacity(w),
            |buf: &mut Vec<Neighbor>, (i, (idx, dist))| {
                tree.nearest_member_bounded_into(i, w, f64::INFINITY, buf);
                for (t, nb) in buf.iter().enumerate() {
                    idx[t] = nb.index;
                    dist[t] = nb.distance;
                }
            },
        );
    Ok(NeighborTable { k, indices, distances })
}

/// A sweep direction for directional sorting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SortOrder {
    direction: [f64; 2],
}

impl SortOrder {
    /// Normalises `direction`; rejects zero or non-finite vectors.
    pub fn new(direction: [f64; 2]) -> Result<Self> {
        let norm = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Validation(format!(
                "sort direction {direction:?} must be a finite non-zero vector"
            )));
        }
        Ok(SortOrder {
            direction: [direction[0] / norm, direction[1] / norm],
        })
    }

    /// Bottom-to-top sweep.
    pub fn upward() -> Self {
        SortOrder { direction: [0.0, 1.0] }
    }

    pub fn direction(&self) -> [f64; 2] {
        self.direction
    }

    pub fn reversed(&self) -> Self {
        SortOrder {
            direction: [-self.direction[0], -self.direction[1]],
        }
    }

    /// (projection onto the direction, orthogonal coordinate). The orthogonal axis is
    /// the direction rotated clockwise, so the upward sweep breaks ties by `x`.
    pub fn key(&self, p: Point) -> (f64, f64) {
        let [dx, dy] = self.direction;
        (p[0] * dx + p[1] * dy, p[0] * dy - p[1] * dx)
    }

    pub fn compare(&self, a: (Point, usize), b: (Point, usize)) -> Ordering {
        let ka = self.key(a.0);
        let kb = self.key(b.0);
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.1.cmp(&b.1))
    }
}

impl Default for SortOrder {
    fn default() -> Self {
        SortOrder::upward()
    }
}

/// Permutation (new position -> old position) that sorts the nodes along `order`.
pub fn sort_permutation(nodes: &NodeSet, order: &SortOrder) -> Vec<usize> {
    let mut keyed: Vec<(f64, f64, usize)> = nodes
        .coords()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let (a, b) = order.key(p);
            (a, b, i)
        })
        .collect();
    keyed.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.cmp(&y.2)));
    keyed.into_iter().map(|t| t.2).collect()
}

pub fn sort_nodes(nodes: &NodeSet, order: &SortOrder) -> (NodeSet, Vec<usize>) {
    let perm = sort_permutation(nodes, order);
    (nodes.select(&perm), perm)
}
