use rayon::prelude::*;

use super::sparse::SparseOperator;
use super::stencil::{stencil_weights, Operator, StencilConfig};
use crate::error::{Error, Result};
use crate::nodeset::{KdTree, NodeSet, Point};

fn with_row(e: Error, row: usize) -> Error {
    match e {
        Error::Conditioning { point, rcond, .. } => Error::Conditioning {
            point,
            row: Some(row),
            rcond,
        },
        other => other,
    }
}

fn stencil_row(
    center: Point,
    tree: &KdTree,
    coords: &[Point],
    config: &StencilConfig,
    op: Operator,
) -> Result<Vec<(usize, f64)>> {
    let nb = tree.nearest(center, config.n_stencil);
    let pts: Vec<Point> = nb.iter().map(|n| coords[n.index]).collect();
    let w = stencil_weights(center, &pts, config, op)?;
    Ok(nb.iter().map(|n| n.index).zip(w).collect())
}

/// Discrete Laplacian on `nodes`: stencils of the `n_stencil` nearest nodes (self
/// included) at interior rows, identity rows where `boundary_mask` is set.
#[allow(non_snake_case)]
pub fn assemble_L(nodes: &NodeSet, boundary_mask: &[bool], config: &StencilConfig) -> Result<SparseOperator> {
    config.validate()?;
    if boundary_mask.len() != nodes.len() {
        return Err(Error::Validation(format!(
            "boundary mask has {} entries for {} nodes",
            boundary_mask.len(),
            nodes.len()
        )));
    }
    if config.n_stencil > nodes.len() {
        return Err(Error::Size {
            what: "stencil size exceeds the node count",
            requested: config.n_stencil,
            available: nodes.len(),
        });
    }
    let tree = KdTree::new(nodes.coords());
    let rows = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            if boundary_mask[i] {
                Ok(vec![(i, 1.0)])
            } else {
                stencil_row(nodes.point(i), &tree, nodes.coords(), config, Operator::Laplacian)
                    .map_err(|e| with_row(e, i))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    SparseOperator::from_rows(nodes.len(), rows)
}

/// Interpolation from `coarse` to `fine`. Fine nodes that coincide with a coarse
/// node copy its value.
#[allow(non_snake_case)]
pub fn assemble_I(coarse: &NodeSet, fine: &NodeSet, config: &StencilConfig) -> Result<SparseOperator> {
    config.validate()?;
    if config.n_stencil > coarse.len() {
        return Err(Error::Size {
            what: "interpolation stencil exceeds the coarse node count",
            requested: config.n_stencil,
            available: coarse.len(),
        });
    }
    let index = coarse.coord_index();
    let tree = KdTree::new(coarse.coords());
    let rows = (0..fine.len())
        .into_par_iter()
        .map(|i| {
            let p = fine.point(i);
            match index.get(&crate::nodeset::CoordKey::of(p)) {
                Some(&j) => Ok(vec![(j, 1.0)]),
                None => stencil_row(p, &tree, coarse.coords(), config, Operator::Identity).map_err(|e| with_row(e, i)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    SparseOperator::from_rows(coarse.len(), rows)
}

/// Injection: row `i` selects fine entry `inject[i]`.
#[allow(non_snake_case)]
pub fn assemble_R(inject: &[usize], fine_len: usize) -> Result<SparseOperator> {
    SparseOperator::from_rows(fine_len, inject.iter().map(|&j| vec![(j, 1.0)]).collect())
}
