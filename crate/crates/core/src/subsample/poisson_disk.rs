use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodeset::{distance, knn, NodeSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonDiskParams {
    /// Exclusion radius as a multiple of each node's fine-set nearest-neighbour distance.
    pub c: f64,
    pub seed: u64,
}

impl PoissonDiskParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::Validation(format!(
                "Poisson-disk radius factor must be positive, got {}",
                self.c
            )));
        }
        Ok(())
    }
}

/// Exclusion radii `c * r_min(x_i)` for every node of the fine set.
pub fn exclusion_radii(nodes: &NodeSet, c: f64) -> Result<Vec<f64>> {
    match nodes.len() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![0.0]),
        _ => {
            let table = knn(nodes, 1)?;
            Ok((0..nodes.len()).map(|i| c * table.nearest_distance(i)).collect())
        }
    }
}

/// Uniform bucket grid over accepted nodes.
struct AcceptGrid {
    origin: [f64; 2],
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl AcceptGrid {
    fn new(nodes: &NodeSet, cell: f64) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in nodes.coords() {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        // keep the bucket count bounded for pathological spreads
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let max_cells = (4 * nodes.len()).max(16) as f64;
        let cell = cell.max(extent / max_cells.sqrt()).max(f64::MIN_POSITIVE);
        let dims = [
            ((hi[0] - lo[0]) / cell) as usize + 1,
            ((hi[1] - lo[1]) / cell) as usize + 1,
        ];
        AcceptGrid {
            origin: lo,
            cell,
            dims,
            buckets: vec![Vec::new(); dims[0] * dims[1]],
        }
    }

    fn cell_of(&self, p: [f64; 2]) -> [usize; 2] {
        [
            (((p[0] - self.origin[0]) / self.cell) as usize).min(self.dims[0] - 1),
            (((p[1] - self.origin[1]) / self.cell) as usize).min(self.dims[1] - 1),
        ]
    }

    fn insert(&mut self, p: [f64; 2], id: usize) {
        let [cx, cy] = self.cell_of(p);
        self.buckets[cy * self.dims[0] + cx].push(id as u32);
    }
}

/// Poisson-disk subsampling with spatially variable exclusion radii.
///
/// Candidates are visited in a seeded random order; a candidate is accepted when
/// `dist(x_i, a) >= r_i + r_a` holds for every previously accepted `a`.
/// Returns the accepted nodes in input order.
pub fn poisson_disk(nodes: &NodeSet, params: &PoissonDiskParams) -> Result<NodeSet> {
    let kept = poisson_disk_indices(nodes, params)?;
    Ok(nodes.select(&kept))
}

pub fn poisson_disk_indices(nodes: &NodeSet, params: &PoissonDiskParams) -> Result<Vec<usize>> {
    params.validate()?;
    let n = nodes.len();
    if n <= 1 {
        return Ok((0..n).collect());
    }
    let radii = exclusion_radii(nodes, params.c)?;
    let r_max = radii.iter().cloned().fold(0.0, f64::max);

    let mut visit: Vec<usize> = (0..n).collect();
    visit.shuffle(&mut ChaCha8Rng::seed_from_u64(params.seed));

    let pts = nodes.coords();
    let mut grid = AcceptGrid::new(nodes, 2.0 * r_max);
    let mut accepted = vec![false; n];
    for &i in &visit {
        let p = pts[i];
        let reach = radii[i] + r_max;
        let [cx, cy] = grid.cell_of(p);
        let span = (reach / grid.cell).ceil() as usize;
        let mut ok = true;
        'scan: for gy in cy.saturating_sub(span)..=(cy + span).min(grid.dims[1] - 1) {
            for gx in cx.saturating_sub(span)..=(cx + span).min(grid.dims[0] - 1) {
                for &a in &grid.buckets[gy * grid.dims[0] + gx] {
                    let a = a as usize;
                    if distance(p, pts[a]) < radii[i] + radii[a] {
                        ok = false;
                        break 'scan;
                    }
                }
            }
        }
        if ok {
            accepted[i] = true;
            grid.insert(p, i);
        }
    }
    Ok((0..n).filter(|&i| accepted[i]).collect())
}
