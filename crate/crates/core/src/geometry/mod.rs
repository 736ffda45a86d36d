//! Point samples and the multiscale occupancy index built over them.

mod index;
mod pointset;

pub use index::{level_cap, MultiScaleIndex, MAX_DIM};
pub use pointset::{Ball, Cube, PointSet};
pub(crate) use pointset::dist_sq;
