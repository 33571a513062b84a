//! Reference loss functions for the training targets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{RasterData, RasterMap};

/// Soft DICE loss `1 - (2·Σ p·g + smooth) / (Σ p + Σ g + smooth)`, averaged
/// over channels. Accumulation is in f64.
pub fn dice_loss(pred: &RasterMap, gt: &RasterMap, smooth: f64) -> Result<f64> {
    if pred.shape() != gt.shape() {
        return Err(Error::invalid(format!(
            "dice shapes differ: {:?} vs {:?}",
            pred.shape(),
            gt.shape()
        )));
    }
    if !(smooth >= 0.0) {
        return Err(Error::invalid("smooth must be non-negative"));
    }
    let channels = pred.channels();
    if channels == 0 {
        return Err(Error::invalid("dice needs at least one channel"));
    }
    let mut inter = vec![0.0; channels];
    let mut sum_p = vec![0.0; channels];
    let mut sum_g = vec![0.0; channels];
    let pv = values(pred);
    let gv = values(gt);
    for (i, (p, g)) in pv.zip(gv).enumerate() {
        let c = i % channels;
        inter[c] += p * g;
        sum_p[c] += p;
        sum_g[c] += g;
    }
    let mut total = 0.0;
    for c in 0..channels {
        let denom = sum_p[c] + sum_g[c] + smooth;
        // 0/0 (empty channels, no smoothing) counts as a perfect match.
        let coeff = if denom == 0.0 { 1.0 } else { (2.0 * inter[c] + smooth) / denom };
        total += 1.0 - coeff;
    }
    Ok(total / channels as f64)
}

fn values(map: &RasterMap) -> Box<dyn Iterator<Item = f64> + '_> {
    match map.data() {
        RasterData::U8(v) => Box::new(v.iter().map(|&x| x as f64)),
        RasterData::F32(v) => Box::new(v.iter().map(|&x| x as f64)),
    }
}

/// Weights of the detection, classification, spatial and clustering losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights(pub [f64; 4]);

impl Default for LossWeights {
    fn default() -> Self {
        Self([1.0; 4])
    }
}

pub fn combined_loss(det: f64, cls: f64, spatial: f64, cluster: f64, weights: LossWeights) -> Result<f64> {
    let terms = [det, cls, spatial, cluster];
    if terms.iter().chain(&weights.0).any(|v| !v.is_finite()) {
        return Err(Error::invalid("loss terms and weights must be finite"));
    }
    Ok(terms.iter().zip(&weights.0).map(|(l, w)| w * l).sum())
}
