//! Per-class k-means pseudo-labels with warm starts across epochs.
//!
//! Cells of each class are clustered separately into `k` sub-classes; the
//! global sub-class id of a cell of class `c` with local cluster `j` is
//! `c * k + j`. Members are always processed in ascending cell-index order,
//! so results do not depend on input row order or on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundtruth::{assign_components, paint_components};
use crate::pattern::PointPattern;
use crate::raster::RasterMap;
use crate::stats::KVector;

/// Fixed-dimension feature vectors keyed by cell index, with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    cell_indices: Vec<usize>,
    labels: Vec<usize>,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureTable {
    pub fn new(cell_indices: Vec<usize>, labels: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if cell_indices.len() != labels.len() || labels.len() != rows.len() {
            return Err(Error::inconsistent("feature table columns have different lengths"));
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::inconsistent(format!(
                    "feature row {i} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("feature row {i} is not finite")));
            }
            data.extend_from_slice(row);
        }
        let mut sorted = cell_indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::inconsistent("duplicate cell index in feature table"));
        }
        Ok(Self {
            cell_indices,
            labels,
            dim,
            data,
        })
    }

    /// Raw K-vectors as features, labelled by the pattern's classes.
    pub fn from_k_vectors(pattern: &PointPattern, field: &[KVector]) -> Result<Self> {
        if field.len() != pattern.len() {
            return Err(Error::inconsistent("one K-vector per cell is required"));
        }
        Self::new(
            field.iter().map(|v| v.cell_index).collect(),
            field.iter().map(|v| pattern.label(v.cell_index)).collect(),
            field.iter().map(|v| v.values.clone()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_index(&self, row: usize) -> usize {
        self.cell_indices[row]
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Rows of `class`, ordered by cell index.
    fn members(&self, class: usize) -> Vec<usize> {
        let mut rows: Vec<usize> = (0..self.len()).filter(|&r| self.labels[r] == class).collect();
        rows.sort_unstable_by_key(|&r| self.cell_indices[r]);
        rows
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// k-means++ seeding drawn from the fit's seed.
    KMeansPlusPlus,
    /// Start from given centroids (`k` rows of the feature dimension).
    Warm(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub max_iters: usize,
    /// Converged once no centroid moves by this much or more.
    pub tol: f64,
    /// Standardise each feature within the class before clustering.
    pub normalize: bool,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-4,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    /// Member cell indices, ascending.
    pub cells: Vec<usize>,
    /// Local cluster of each member, parallel to `cells`.
    pub assignments: Vec<usize>,
    /// Lloyd update steps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Inertia after the initial assignment and after every update.
    pub inertia_history: Vec<f64>,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        *self.inertia_history.last().unwrap()
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>, f64) {
    let pairs: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(p, centroids)).collect();
    let inertia = pairs.iter().map(|p| p.1).sum();
    let (labels, dists) = pairs.into_iter().unzip();
    (labels, dists, inertia)
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InsufficientPoints {
                needed: k,
                got: count_distinct(points),
            });
        }
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap();
        for (i, &d) in d2.iter().enumerate() {
            acc += d;
            if acc > target && d > 0.0 {
                pick = i;
                break;
            }
        }
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    Ok(centroids)
}

fn count_distinct(points: &[Vec<f64>]) -> usize {
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

fn standardize(points: &mut [Vec<f64>]) {
    let n = points.len() as f64;
    let dim = points.first().map_or(0, Vec::len);
    for d in 0..dim {
        let mean = points.iter().map(|p| p[d]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / n;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        for p in points.iter_mut() {
            p[d] = (p[d] - mean) / scale;
        }
    }
}

/// Lloyd's k-means over the cells of one class.
///
/// Empty clusters are re-seeded at the member farthest from its assigned
/// centroid (distinct members for several empty clusters).
pub fn kmeans_fit(
    features: &FeatureTable,
    class: usize,
    k: usize,
    init: &Init,
    params: &KMeansParams,
    seed: u64,
) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let rows = features.members(class);
    if rows.is_empty() {
        return Err(Error::EmptyClass(class));
    }
    let cells: Vec<usize> = rows.iter().map(|&r| features.cell_index(r)).collect();
    let mut points: Vec<Vec<f64>> = rows.iter().map(|&r| features.row(r).to_vec()).collect();
    if params.normalize {
        standardize(&mut points);
    }

    let mut centroids = match init {
        Init::KMeansPlusPlus => {
            if points.len() < k {
                return Err(Error::InsufficientPoints {
                    needed: k,
                    got: points.len(),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(class as u64);
            kmeans_plus_plus(&points, k, &mut rng)?
        }
        Init::Warm(c) => {
            if c.len() != k || c.iter().any(|row| row.len() != features.dim()) {
                return Err(Error::InconsistentModel(format!(
                    "warm start needs {k} centroids of dimension {}",
                    features.dim()
                )));
            }
            if c.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InconsistentModel("warm-start centroid is not finite".into()));
            }
            c.clone()
        }
    };

    let dim = features.dim();
    let (mut labels, mut dists, inertia) = assign(&points, &centroids);
    let mut inertia_history = vec![inertia];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iters {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &j) in points.iter().zip(&labels) {
            counts[j] += 1;
            for (s, x) in sums[j].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &n), old)| {
                if n == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|v| v / n as f64).collect()
                }
            })
            .collect();

        let mut taken = vec![false; points.len()];
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let far = (0..points.len())
                .filter(|&i| !taken[i] && dists[i] > 0.0)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                taken[i] = true;
                next[j] = points[i].clone();
            }
        }

        let movement = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        iterations += 1;
        let (l, d, inertia) = assign(&points, &centroids);
        labels = l;
        dists = d;
        inertia_history.push(inertia);
        if movement < params.tol {
            converged = true;
            break;
        }
    }

    Ok(KMeansFit {
        centroids,
        cells,
        assignments: labels,
        iterations,
        converged,
        inertia_history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub cell_index: usize,
    pub class: usize,
    pub subclass: usize,
}

/// Per-class centroids and cell → sub-class assignments for one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub n_classes: usize,
    pub dim: usize,
    pub epoch: u64,
    pub seed: u64,
    pub params: KMeansParams,
    /// `k` centroids per class; `None` for classes never seen.
    pub centroids: Vec<Option<Vec<Vec<f64>>>>,
    /// Sorted by cell index.
    pub assignments: Vec<Assignment>,
}

impl ClusterModel {
    pub fn subclass_of(&self, cell_index: usize) -> Option<usize> {
        self.assignments
            .binary_search_by_key(&cell_index, |a| a.cell_index)
            .ok()
            .map(|i| self.assignments[i].subclass)
    }

    pub fn n_subclasses(&self) -> usize {
        self.n_classes * self.k
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ClusterModel = serde_json::from_str(text)?;
        for (c, cents) in model.centroids.iter().enumerate() {
            if let Some(cents) = cents {
                if cents.len() != model.k || cents.iter().any(|r| r.len() != model.dim) {
                    return Err(Error::InconsistentModel(format!("class {c} centroids have the wrong shape")));
                }
                if cents.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InconsistentModel(format!("class {c} centroids are not finite")));
                }
            }
        }
        Ok(model)
    }
}

/// Regenerate pseudo-labels for an epoch, warm-starting every class that has
/// centroids in `previous`.
pub fn update_pseudo_labels(
    features: &FeatureTable,
    previous: Option<&ClusterModel>,
    k: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<ClusterModel> {
    let mut n_classes = features.n_classes();
    if let Some(prev) = previous {
        if prev.k != k {
            return Err(Error::InconsistentModel(format!("model has k={}, requested k={k}", prev.k)));
        }
        if prev.dim != features.dim() {
            return Err(Error::InconsistentModel(format!(
                "model centroids have dimension {}, features have {}",
                prev.dim,
                features.dim()
            )));
        }
        n_classes = n_classes.max(prev.n_classes);
    }
    let mut centroids = Vec::with_capacity(n_classes);
    let mut assignments = Vec::with_capacity(features.len());
    for class in 0..n_classes {
        let prior = previous.and_then(|m| m.centroids.get(class).cloned().flatten());
        if features.members(class).is_empty() {
            centroids.push(prior);
            continue;
        }
        let init = match prior {
            Some(c) => Init::Warm(c),
            None => Init::KMeansPlusPlus,
        };
        let fit = kmeans_fit(features, class, k, &init, params, seed)?;
        for (&cell, &j) in fit.cells.iter().zip(&fit.assignments) {
            assignments.push(Assignment {
                cell_index: cell,
                class,
                subclass: class * k + j,
            });
        }
        centroids.push(Some(fit.centroids));
    }
    assignments.sort_unstable_by_key(|a| a.cell_index);
    Ok(ClusterModel {
        k,
        n_classes,
        dim: features.dim(),
        epoch: previous.map_or(1, |m| m.epoch + 1),
        seed,
        params: *params,
        centroids,
        assignments,
    })
}

/// One binary channel per sub-class holding the detection-mask components
/// of that sub-class's cells.
pub fn pseudo_label_masks(model: &ClusterModel, detection: &RasterMap, pattern: &PointPattern) -> Result<RasterMap> {
    let (labeling, components) = assign_components(pattern, detection)?;
    let mut channel_of = Vec::with_capacity(pattern.len());
    for i in 0..pattern.len() {
        let sub = model
            .subclass_of(i)
            .ok_or_else(|| Error::inconsistent(format!("cell {i} has no pseudo-label")))?;
        if sub / model.k != pattern.label(i) || sub >= model.n_subclasses() {
            return Err(Error::inconsistent(format!("cell {i} has a pseudo-label outside its class block")));
        }
        channel_of.push(sub);
    }
    Ok(paint_components(&labeling, &components, &channel_of, model.n_subclasses()))
}
