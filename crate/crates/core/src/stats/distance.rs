//! Distances between sampled K-curves: sup norm (Kolmogorov–Smirnov style)
//! and its L1 surrogate.

use super::kvector::KVector;
use super::ripley::KCurve;
use crate::error::{Error, Result};
use crate::radii::RadiiGrid;

/// Anything holding K values sampled on a radii grid.
pub trait SampledCurve {
    fn radii(&self) -> &RadiiGrid;
    fn values(&self) -> &[f64];
}

impl SampledCurve for KVector {
    fn radii(&self) -> &RadiiGrid {
        &self.radii
    }

    fn values(&self) -> &[f64] {
        &self.values
    }
}

impl SampledCurve for KCurve {
    fn radii(&self) -> &RadiiGrid {
        &self.radii
    }

    fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_same_shape<T: SampledCurve>(a: &T, b: &T) -> Result<()> {
    if a.radii() != b.radii() {
        return Err(Error::invalid("curves are sampled on different radii"));
    }
    check_len(a.values(), b.values())
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("shape mismatch: {} vs {} entries", a.len(), b.len())));
    }
    Ok(())
}

pub fn ks_distance<T: SampledCurve>(a: &T, b: &T) -> Result<f64> {
    check_same_shape(a, b)?;
    ks_distance_slices(a.values(), b.values())
}

pub fn l1_distance<T: SampledCurve>(a: &T, b: &T) -> Result<f64> {
    check_same_shape(a, b)?;
    l1_distance_slices(a.values(), b.values())
}

pub fn ks_distance_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

pub fn l1_distance_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}
