//! Training targets built from point annotations: the dilated detection
//! mask, per-class masks, and the per-pixel K-vector map.
//!
//! Raster pixel `(row, col)` sits at coordinates `(x, y) = (col, row)`.
//! Annotations map to the nearest pixel (halves round up) and are clamped
//! into the raster.

use crate::components::{label_components, ComponentLabeling};
use crate::error::{Error, Result};
use crate::grid::GridIndex;
use crate::pattern::{Point, PointPattern, Window};
use crate::raster::RasterMap;
use crate::stats::KVector;

/// Raster `(height, width)` covering a window anchored at the origin.
pub fn raster_shape_for(window: &Window) -> (usize, usize) {
    (
        window.y1().ceil().max(1.0) as usize,
        window.x1().ceil().max(1.0) as usize,
    )
}

/// Pixel `(row, col)` holding a point.
pub fn pixel_of(p: Point, height: usize, width: usize) -> (usize, usize) {
    let snap = |v: f64, n: usize| ((v + 0.5).floor().max(0.0) as usize).min(n.saturating_sub(1));
    (snap(p.y, height), snap(p.x, width))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMask {
    /// Single-channel u8 mask, 1 on dilated cells.
    pub mask: RasterMap,
    /// Square half-width used for each annotation.
    pub halfwidths: Vec<u32>,
    /// Chebyshev pixel distance to the nearest other annotation, when it is
    /// close enough to constrain the dilation.
    pub nearest: Vec<Option<u32>>,
}

/// Dilate each annotation into a filled square of half-width
/// `h = min(max_halfwidth, floor((d - 1 - min_gap) / 2))`, where `d` is the
/// Chebyshev pixel distance to the nearest other annotation. Any two squares
/// are then separated by at least `min_gap` background pixels, so with
/// `min_gap >= 1` every square is its own 8-connected component. Pairs
/// closer than `min_gap + 1` pixels cannot be separated and are rejected.
pub fn generate_detection_mask(
    pattern: &PointPattern,
    shape: (usize, usize),
    max_halfwidth: u32,
    min_gap: u32,
) -> Result<DetectionMask> {
    if pattern.is_empty() {
        return Err(Error::EmptyPattern("detection mask needs annotations".into()));
    }
    if max_halfwidth < 1 {
        return Err(Error::invalid("max_halfwidth must be at least 1"));
    }
    let (height, width) = shape;
    if height == 0 || width == 0 {
        return Err(Error::invalid("raster shape must be nonzero"));
    }
    let pixels: Vec<(usize, usize)> = pattern
        .points()
        .iter()
        .map(|&p| pixel_of(p, height, width))
        .collect();

    // Distances at or beyond `reach` leave the half-width at its maximum.
    let reach = 2 * max_halfwidth + 1 + min_gap;
    let centres = PointPattern::new(
        pixels.iter().map(|&(r, c)| Point::new(c as f64, r as f64)).collect(),
        vec![0; pixels.len()],
        Window::new(0.0, 0.0, width as f64, height as f64)?,
        1,
    )?;
    let index = GridIndex::new(&centres, reach as f64)?;
    let mut nearest = Vec::with_capacity(pixels.len());
    let mut halfwidths = Vec::with_capacity(pixels.len());
    for (i, &(row, col)) in pixels.iter().enumerate() {
        let mut best: Option<(u32, usize)> = None;
        index.for_each_candidate(centres.point(i), reach as f64, |t| {
            if t.index == i {
                return;
            }
            let (r, c) = pixels[t.index];
            let d = r.abs_diff(row).max(c.abs_diff(col)) as u32;
            if d < reach && best.is_none_or(|(bd, bj)| (d, t.index) < (bd, bj)) {
                best = Some((d, t.index));
            }
        });
        if let Some((0, j)) = best {
            return Err(Error::CoincidentPoints {
                first: i.min(j),
                second: i.max(j),
            });
        }
        if let Some((d, j)) = best {
            if d <= min_gap {
                return Err(Error::inconsistent(format!(
                    "annotations {} and {} are {d} px apart; squares cannot keep a {min_gap} px gap",
                    i.min(j),
                    i.max(j)
                )));
            }
        }
        let d = best.map(|(d, _)| d);
        nearest.push(d);
        halfwidths.push(match d {
            Some(d) => (d.saturating_sub(1 + min_gap) / 2).min(max_halfwidth),
            None => max_halfwidth,
        });
    }

    let mut mask = RasterMap::zeros_u8(height, width, 1);
    let data = mask.u8_mut();
    for (&(row, col), &h) in pixels.iter().zip(&halfwidths) {
        let h = h as usize;
        let (r0, r1) = (row.saturating_sub(h), (row + h).min(height - 1));
        let (c0, c1) = (col.saturating_sub(h), (col + h).min(width - 1));
        for r in r0..=r1 {
            data[r * width + c0..=r * width + c1].fill(1);
        }
    }
    Ok(DetectionMask {
        mask,
        halfwidths,
        nearest,
    })
}

/// Label the mask and pair every component with the single annotation it
/// contains. Returns the labelling and the component label of each point.
pub fn assign_components(pattern: &PointPattern, mask: &RasterMap) -> Result<(ComponentLabeling, Vec<u32>)> {
    let labeling = label_components(mask)?;
    let mut owner: Vec<Option<usize>> = vec![None; labeling.n_components];
    let mut of_point = Vec::with_capacity(pattern.len());
    for (i, &p) in pattern.points().iter().enumerate() {
        let (row, col) = pixel_of(p, labeling.height, labeling.width);
        let label = labeling.label_at(row, col);
        if label == 0 {
            return Err(Error::inconsistent(format!("annotation {i} lies on background")));
        }
        if let Some(j) = owner[label as usize - 1].replace(i) {
            return Err(Error::inconsistent(format!(
                "annotations {j} and {i} share mask component {label}"
            )));
        }
        of_point.push(label);
    }
    if let Some(c) = owner.iter().position(Option::is_none) {
        return Err(Error::inconsistent(format!("mask component {} has no annotation", c + 1)));
    }
    Ok((labeling, of_point))
}

/// Paint component pixels into a `channels`-channel u8 map; component of
/// point `i` goes to channel `channel_of[i]`.
pub(crate) fn paint_components(
    labeling: &ComponentLabeling,
    component_of_point: &[u32],
    channel_of_point: &[usize],
    channels: usize,
) -> RasterMap {
    let mut channel_of_label = vec![usize::MAX; labeling.n_components + 1];
    for (&label, &ch) in component_of_point.iter().zip(channel_of_point) {
        channel_of_label[label as usize] = ch;
    }
    let mut out = RasterMap::zeros_u8(labeling.height, labeling.width, channels);
    let data = out.u8_mut();
    for (px, &label) in labeling.labels.iter().enumerate() {
        if label != 0 {
            data[px * channels + channel_of_label[label as usize]] = 1;
        }
    }
    out
}

/// One binary channel per class: the components whose annotation has that class.
pub fn generate_class_masks(pattern: &PointPattern, detection: &RasterMap) -> Result<RasterMap> {
    let (labeling, components) = assign_components(pattern, detection)?;
    Ok(paint_components(
        &labeling,
        &components,
        pattern.labels(),
        pattern.n_classes(),
    ))
}

/// Every pixel of cell `i`'s component carries `k_vectors[i]`; background is
/// zero. Also returns the single-channel validity mask of positive pixels.
pub fn generate_kvector_map(
    pattern: &PointPattern,
    detection: &RasterMap,
    k_vectors: &[KVector],
) -> Result<(RasterMap, RasterMap)> {
    if k_vectors.len() != pattern.len() {
        return Err(Error::inconsistent(format!(
            "{} K-vectors for {} annotations",
            k_vectors.len(),
            pattern.len()
        )));
    }
    let dim = k_vectors.first().map_or(0, KVector::dim);
    for (i, v) in k_vectors.iter().enumerate() {
        if v.cell_index != i || v.dim() != dim {
            return Err(Error::inconsistent(format!("K-vector {i} does not match its cell")));
        }
    }
    let (h, w) = (detection.height(), detection.width());
    if pattern.is_empty() {
        // Nothing to pair; an empty annotation set must come with an empty mask.
        let labeling = label_components(detection)?;
        if labeling.n_components > 0 {
            return Err(Error::inconsistent("mask has components but there are no annotations"));
        }
        let channels = pattern.n_classes() * crate::radii::RadiiGrid::default().len();
        return Ok((RasterMap::zeros_f32(h, w, channels), RasterMap::zeros_u8(h, w, 1)));
    }
    let (labeling, components) = assign_components(pattern, detection)?;
    let mut cell_of_label = vec![usize::MAX; labeling.n_components + 1];
    for (i, &label) in components.iter().enumerate() {
        cell_of_label[label as usize] = i;
    }
    let mut map = RasterMap::zeros_f32(h, w, dim);
    let mut valid = RasterMap::zeros_u8(h, w, 1);
    let values = map.f32_mut();
    let flags = valid.u8_mut();
    for (px, &label) in labeling.labels.iter().enumerate() {
        if label == 0 {
            continue;
        }
        let v = &k_vectors[cell_of_label[label as usize]].values;
        for (dst, &src) in values[px * dim..(px + 1) * dim].iter_mut().zip(v) {
            *dst = src as f32;
        }
        flags[px] = 1;
    }
    Ok((map, valid))
}
