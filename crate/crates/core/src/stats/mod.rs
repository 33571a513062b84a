//! Spatial statistics over multi-class point patterns.

mod curves;
mod descriptors;
mod distance;
mod kvector;
mod ripley;

pub use curves::{average_k_curves, AverageCurves};
pub use descriptors::{density_vector, nn_distance_vector};
pub use distance::{ks_distance, ks_distance_slices, l1_distance, l1_distance_slices, SampledCurve};
pub use kvector::{cell_k_vector, data_max_neighbors, k_vector_field, KVector, PatchIndex};
pub use ripley::{csr_envelope, ripley_k, EdgeCorrection, Envelope, KCurve};
