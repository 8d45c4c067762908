//! Node-set coarsening: moving front, weighted elimination, Poisson disk, the
//! boundary-aware pipeline and the multilevel hierarchy builder.

mod boundary;
mod hierarchy;
mod moving_front;
mod poisson_disk;
mod tune;
mod weighted;

pub use boundary::{
    moving_front_curve, subsample_with_boundary, subsample_with_boundary_indices, BoundaryMode, BoundaryPipelineParams,
    PassSelection,
};
pub use hierarchy::{mlmfsub, split_level, HierarchyParams, LevelHierarchy};
pub use moving_front::{moving_front, moving_front_indices, MovingFrontParams};
pub use poisson_disk::{exclusion_radii, poisson_disk, poisson_disk_indices, PoissonDiskParams};
pub use tune::{fit_factor, Tuned};
pub use weighted::{weighted, weighted_indices, WeightedParams};
