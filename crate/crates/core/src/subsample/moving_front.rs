use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodeset::{sort_permutation, KdTree, NodeSet, SortOrder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovingFrontParams {
    /// Coarsening factor: neighbours closer than `c` times the nearest-neighbour
    /// distance are eliminated.
    pub c: f64,
    /// Number of neighbours examined per node.
    pub k: usize,
    pub order: SortOrder,
}

impl Default for MovingFrontParams {
    fn default() -> Self {
        MovingFrontParams {
            c: 1.5,
            k: 10,
            order: SortOrder::upward(),
        }
    }
}

impl MovingFrontParams {
    pub fn new(c: f64, k: usize, order: SortOrder) -> Result<Self> {
        let p = MovingFrontParams { c, k, order };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 1.0) || !self.c.is_finite() {
            return Err(Error::Validation(format!(
                "moving-front factor c must exceed 1, got {}",
                self.c
            )));
        }
        if self.k < 1 {
            return Err(Error::Validation("moving-front k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_order(mut self, order: SortOrder) -> Self {
        self.order = order;
        self
    }
}

/// Moving-front subsampling.
///
/// The nodes are swept along `params.order`. Every node that has not been
/// eliminated eliminates those of its `k` nearest neighbours that lie closer than
/// `c` times its own nearest-neighbour distance and come later in the sweep.
/// Neighbours and nearest distances refer to the full fine set.
///
/// Returns the surviving nodes in sweep order.
pub fn moving_front(nodes: &NodeSet, params: &MovingFrontParams) -> Result<NodeSet> {
    let kept = moving_front_indices(nodes, params)?;
    Ok(nodes.select(&kept))
}

/// Same as [`moving_front`] but returns input indices of the survivors, in sweep order.
pub fn moving_front_indices(nodes: &NodeSet, params: &MovingFrontParams) -> Result<Vec<usize>> {
    params.validate()?;
    if nodes.is_empty() {
        return Ok(Vec::new());
    }
    if params.k >= nodes.len() {
        return Err(Error::Size {
            what: "moving-front k must be below the node count",
            requested: params.k,
            available: nodes.len(),
        });
    }
    let perm = sort_permutation(nodes, &params.order);
    let n = perm.len();
    let mut rank = vec![0usize; n];
    for (r, &i) in perm.iter().enumerate() {
        rank[i] = r;
    }
    // Neighbours are only needed for nodes that survive to their turn in the sweep,
    // and only those closer than c times the nearest distance.
    let tree = KdTree::new(nodes.coords());
    // indexed by sweep position
    let mut marked = vec![false; n];
    let mut nb = Vec::with_capacity(params.k + 1);
    for r in 0..n {
        if marked[r] {
            continue;
        }
        tree.nearest_member_bounded_into(perm[r], params.k + 1, params.c, &mut nb);
        let reach = params.c * nb[1].distance;
        for e in &nb[1..] {
            if e.distance >= reach {
                break;
            }
            let re = rank[e.index];
            if re > r {
                marked[re] = true;
            }
        }
    }
    Ok((0..n).filter(|&r| !marked[r]).map(|r| perm[r]).collect())
}
