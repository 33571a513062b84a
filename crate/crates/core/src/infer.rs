//! Network output maps → predicted cells.

use serde::{Deserialize, Serialize};

use crate::components::label_components;
use crate::error::{Error, Result};
use crate::pattern::Point;
use crate::raster::{RasterData, RasterMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub x: f64,
    pub y: f64,
    pub class: usize,
    pub size: usize,
}

impl Prediction {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

fn is_float(map: &RasterMap) -> bool {
    matches!(map.data(), RasterData::F32(_))
}

/// Threshold the likelihood (`>= threshold`), drop components smaller than
/// `min_size` pixels, and emit one prediction per remaining component at its
/// centroid. The class is the argmax of `class_map` at the centroid pixel
/// (halves round up; ties go to the lower channel).
pub fn extract_cells(
    likelihood: &RasterMap,
    class_map: &RasterMap,
    threshold: f64,
    min_size: usize,
) -> Result<Vec<Prediction>> {
    if likelihood.channels() != 1 || !is_float(likelihood) {
        return Err(Error::invalid("likelihood must be a single-channel f32 map"));
    }
    if class_map.channels() == 0 {
        return Err(Error::invalid("class map has no channels"));
    }
    if (likelihood.height(), likelihood.width()) != (class_map.height(), class_map.width()) {
        return Err(Error::invalid(format!(
            "likelihood is {}x{} but class map is {}x{}",
            likelihood.height(),
            likelihood.width(),
            class_map.height(),
            class_map.width()
        )));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let binary = RasterMap::new(
        likelihood.height(),
        likelihood.width(),
        1,
        RasterData::U8(
            likelihood
                .as_f32()
                .unwrap()
                .iter()
                .map(|&v| u8::from(v as f64 >= threshold))
                .collect(),
        ),
    )?;
    let labeling = label_components(&binary)?;
    let (h, w) = (likelihood.height(), likelihood.width());
    let mut out = Vec::new();
    for (centroid, &size) in labeling.centroids.iter().zip(&labeling.sizes) {
        if size < min_size {
            continue;
        }
        let row = ((centroid.y + 0.5).floor() as usize).min(h - 1);
        let col = ((centroid.x + 0.5).floor() as usize).min(w - 1);
        let mut class = 0;
        let mut best = f64::NEG_INFINITY;
        for c in 0..class_map.channels() {
            let v = class_map.get(row, col, c);
            if v > best {
                best = v;
                class = c;
            }
        }
        out.push(Prediction {
            x: centroid.x,
            y: centroid.y,
            class,
            size,
        });
    }
    Ok(out)
}
