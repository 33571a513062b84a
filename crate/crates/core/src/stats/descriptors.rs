//! Alternative per-cell spatial descriptors: nearest-neighbour distance and
//! local density, over the same patch used by the K-vectors.

use super::kvector::PatchIndex;
use crate::error::Result;
use crate::pattern::PointPattern;

pub fn nn_distance_vector(pattern: &PointPattern, cell_index: usize, patch_size: f64) -> Result<Vec<f64>> {
    pattern.check_index(cell_index)?;
    PatchIndex::new(pattern, patch_size, patch_size / 2.0)?.nn_distances(cell_index)
}

pub fn density_vector(
    pattern: &PointPattern,
    cell_index: usize,
    patch_size: f64,
    n_max: f64,
) -> Result<Vec<f64>> {
    pattern.check_index(cell_index)?;
    PatchIndex::new(pattern, patch_size, patch_size / 2.0)?.densities(cell_index, n_max)
}
