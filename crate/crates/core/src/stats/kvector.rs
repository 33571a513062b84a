//! Cell-specific K-function vectors.
//!
//! For a source cell `s`, class `c` and radius `r` the entry is
//! `|{t in patch(s) : label(t) = c, t != s, d(s, t) < r}| / n_max`, where
//! `patch(s)` is the closed axis-aligned square of side `patch_size`
//! centred on `s`. The patch is clipped to the window implicitly, since
//! every point lies inside it. No edge correction is applied.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridIndex, Slot};
use crate::parallel::with_workers;
use crate::pattern::PointPattern;
use crate::radii::RadiiGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct KVector {
    pub cell_index: usize,
    pub radii: RadiiGrid,
    pub n_classes: usize,
    /// Row-major `n_classes × radii.len()`.
    pub values: Vec<f64>,
    pub n_max: f64,
}

impl KVector {
    pub fn row(&self, class: usize) -> &[f64] {
        let n = self.radii.len();
        &self.values[class * n..(class + 1) * n]
    }

    /// Flattened length, `n_classes × radii.len()`.
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Grid index plus patch geometry, shared by the per-cell descriptors.
#[derive(Debug, Clone)]
pub struct PatchIndex<'a> {
    index: GridIndex<'a>,
    patch_size: f64,
}

impl<'a> PatchIndex<'a> {
    pub fn new(pattern: &'a PointPattern, patch_size: f64, cell_size: f64) -> Result<Self> {
        if !(patch_size > 0.0) || !patch_size.is_finite() {
            return Err(Error::invalid(format!("patch_size must be positive, got {patch_size}")));
        }
        Ok(Self {
            index: GridIndex::new(pattern, cell_size)?,
            patch_size,
        })
    }

    pub fn pattern(&self) -> &'a PointPattern {
        self.index.pattern()
    }

    pub fn patch_size(&self) -> f64 {
        self.patch_size
    }

    /// Visit every other point inside the patch of `cell`, optionally also
    /// limited to the box of half-width `reach`.
    #[inline]
    pub(crate) fn for_each_in_patch(&self, cell: usize, reach: f64, mut f: impl FnMut(&Slot)) {
        let center = self.pattern().point(cell);
        let half = self.patch_size / 2.0;
        self.index.for_each_candidate(center, half.min(reach), |t| {
            if t.index != cell && (t.x - center.x).abs() <= half && (t.y - center.y).abs() <= half {
                f(t);
            }
        });
    }

    pub fn k_vector(&self, cell: usize, radii: &RadiiGrid, n_max: f64) -> Result<KVector> {
        let pattern = self.pattern();
        pattern.check_index(cell)?;
        check_n_max(n_max)?;
        let n_r = radii.len();
        let r2: Vec<f64> = radii.as_slice().iter().map(|r| r * r).collect();
        let center = pattern.point(cell);
        let mut counts = vec![0u64; pattern.n_classes() * n_r];
        self.for_each_in_patch(cell, radii.max(), |t| {
            let d2 = t.point().dist_sq(center);
            if let Some(bin) = r2.iter().position(|&r2| d2 < r2) {
                counts[t.label * n_r + bin] += 1;
            }
        });
        for row in counts.chunks_mut(n_r) {
            for j in 1..n_r {
                row[j] += row[j - 1];
            }
        }
        Ok(KVector {
            cell_index: cell,
            radii: radii.clone(),
            n_classes: pattern.n_classes(),
            values: counts.into_iter().map(|c| c as f64 / n_max).collect(),
            n_max,
        })
    }

    /// K-vectors of every cell in point order, computed in parallel on the
    /// current pool.
    pub fn k_vector_field(&self, radii: &RadiiGrid, n_max: f64) -> Result<Vec<KVector>> {
        check_n_max(n_max)?;
        (0..self.pattern().len())
            .into_par_iter()
            .map(|i| self.k_vector(i, radii, n_max))
            .collect()
    }

    /// Per-class distance to the nearest other point in the patch; absent
    /// classes get `patch_size · √2`.
    pub fn nn_distances(&self, cell: usize) -> Result<Vec<f64>> {
        let pattern = self.pattern();
        pattern.check_index(cell)?;
        let center = pattern.point(cell);
        let mut best = vec![f64::INFINITY; pattern.n_classes()];
        self.for_each_in_patch(cell, f64::INFINITY, |t| {
            let d2 = t.point().dist_sq(center);
            if d2 < best[t.label] {
                best[t.label] = d2;
            }
        });
        let sentinel = self.patch_size * std::f64::consts::SQRT_2;
        Ok(best
            .into_iter()
            .map(|d2| if d2.is_finite() { d2.sqrt() } else { sentinel })
            .collect())
    }

    /// Per-class count of other points in the patch, divided by `n_max`.
    pub fn densities(&self, cell: usize, n_max: f64) -> Result<Vec<f64>> {
        let pattern = self.pattern();
        pattern.check_index(cell)?;
        check_n_max(n_max)?;
        let mut counts = vec![0u64; pattern.n_classes()];
        self.for_each_in_patch(cell, f64::INFINITY, |t| counts[t.label] += 1);
        Ok(counts.into_iter().map(|c| c as f64 / n_max).collect())
    }

    /// Largest number of other cells found in any cell's patch. This is the
    /// data-derived alternative to a constant `n_max`.
    pub fn max_neighbors(&self) -> usize {
        (0..self.pattern().len())
            .map(|i| {
                let mut n = 0;
                self.for_each_in_patch(i, f64::INFINITY, |_| n += 1);
                n
            })
            .max()
            .unwrap_or(0)
    }
}

fn check_n_max(n_max: f64) -> Result<()> {
    if !(n_max > 0.0) || !n_max.is_finite() {
        return Err(Error::invalid(format!("n_max must be positive, got {n_max}")));
    }
    Ok(())
}

fn default_cell_size(radii: &RadiiGrid, patch_size: f64) -> f64 {
    radii.max().min(patch_size / 2.0).max(f64::MIN_POSITIVE)
}

pub fn cell_k_vector(
    pattern: &PointPattern,
    cell_index: usize,
    radii: &RadiiGrid,
    patch_size: f64,
    n_max: f64,
) -> Result<KVector> {
    pattern.check_index(cell_index)?;
    PatchIndex::new(pattern, patch_size, default_cell_size(radii, patch_size))?
        .k_vector(cell_index, radii, n_max)
}

/// K-vectors for every cell in point order using `workers` threads. The
/// output is identical for any worker count.
pub fn k_vector_field(
    pattern: &PointPattern,
    radii: &RadiiGrid,
    patch_size: f64,
    n_max: f64,
    workers: usize,
) -> Result<Vec<KVector>> {
    let index = PatchIndex::new(pattern, patch_size, default_cell_size(radii, patch_size))?;
    with_workers(workers, || index.k_vector_field(radii, n_max))?
}

/// Data-derived normaliser: maximum over cells of the number of other cells
/// in the patch.
pub fn data_max_neighbors(pattern: &PointPattern, patch_size: f64) -> Result<usize> {
    Ok(PatchIndex::new(pattern, patch_size, patch_size / 2.0)?.max_neighbors())
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::pattern::{Point, Window};

    /// O(n) per cell: apply the patch and distance predicates to every point.
    fn brute_k_vector(p: &PointPattern, s: usize, radii: &RadiiGrid, patch: f64, n_max: f64) -> Vec<f64> {
        let c = p.point(s);
        let mut out = Vec::new();
        for class in 0..p.n_classes() {
            for &r in radii.as_slice() {
                let mut n = 0u64;
                for t in 0..p.len() {
                    let q = p.point(t);
                    if t != s
                        && p.label(t) == class
                        && (q.x - c.x).abs() <= patch / 2.0
                        && (q.y - c.y).abs() <= patch / 2.0
                        && q.dist_sq(c) < r * r
                    {
                        n += 1;
                    }
                }
                out.push(n as f64 / n_max);
            }
        }
        out
    }

    fn random_pattern(n: usize, side: f64, seed: u64) -> PointPattern {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| Point::new(rng.gen_range(0.0..=side), rng.gen_range(0.0..=side)))
            .collect();
        let labels = (0..n).map(|_| rng.gen_range(0..3)).collect();
        PointPattern::new(pts, labels, Window::new(0.0, 0.0, side, side).unwrap(), 3).unwrap()
    }

    fn window() -> Window {
        Window::new(0.0, 0.0, 500.0, 500.0).unwrap()
    }

    #[test]
    fn isolated_cell_is_all_zero() {
        let p = PointPattern::new(vec![Point::new(100.0, 100.0)], vec![0], window(), 3).unwrap();
        let v = cell_k_vector(&p, 0, &RadiiGrid::default(), 180.0, 100.0).unwrap();
        assert_eq!(v.dim(), 18);
        assert!(v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_neighbour_inside_all_radii() {
        let p = PointPattern::new(
            vec![Point::new(100.0, 100.0), Point::new(110.0, 100.0)],
            vec![0, 1],
            window(),
            3,
        )
        .unwrap();
        let v = cell_k_vector(&p, 0, &RadiiGrid::default(), 180.0, 100.0).unwrap();
        assert_eq!(v.row(1), &[0.01; 6]);
        assert!(v.row(0).iter().chain(v.row(2)).all(|&x| x == 0.0));
    }

    #[test]
    fn invalid_index_is_out_of_range() {
        let p = PointPattern::new(vec![Point::new(1.0, 1.0)], vec![0], window(), 1).unwrap();
        assert!(matches!(
            cell_k_vector(&p, 1, &RadiiGrid::default(), 180.0, 100.0),
            Err(Error::OutOfRange { index: 1, len: 1 })
        ));
        assert!(matches!(
            cell_k_vector(&p, 0, &RadiiGrid::default(), 180.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn patch_limits_large_radii() {
        // Radius 120 reaches past the 180-pixel patch along the axis.
        let p = PointPattern::new(
            vec![Point::new(200.0, 200.0), Point::new(300.0, 200.0), Point::new(260.0, 260.0)],
            vec![0, 1, 1],
            window(),
            2,
        )
        .unwrap();
        let radii = RadiiGrid::new(vec![60.0, 120.0]).unwrap();
        let v = cell_k_vector(&p, 0, &radii, 180.0, 1.0).unwrap();
        assert_eq!(v.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn matches_brute_force_on_random_cells() {
        let p = random_pattern(500, 400.0, 21);
        let radii = RadiiGrid::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let i = rng.gen_range(0..p.len());
            let v = cell_k_vector(&p, i, &radii, 180.0, 100.0).unwrap();
            assert_eq!(v.values, brute_k_vector(&p, i, &radii, 180.0, 100.0));
        }
    }

    #[test]
    fn field_is_worker_count_independent() {
        let p = random_pattern(2000, 1000.0, 5);
        let radii = RadiiGrid::default();
        let one = k_vector_field(&p, &radii, 180.0, 100.0, 1).unwrap();
        let eight = k_vector_field(&p, &radii, 180.0, 100.0, 8).unwrap();
        assert_eq!(one, eight);
        for (i, v) in one.iter().enumerate().step_by(97) {
            assert_eq!(v.cell_index, i);
            assert_eq!(*v, cell_k_vector(&p, i, &radii, 180.0, 100.0).unwrap());
        }
    }

    #[test]
    fn empty_field() {
        let p = PointPattern::empty(window(), 3).unwrap();
        assert!(k_vector_field(&p, &RadiiGrid::default(), 180.0, 100.0, 2).unwrap().is_empty());
    }

    #[test]
    fn data_max_neighbors_counts_patch_members() {
        let p = PointPattern::new(
            vec![Point::new(10.0, 10.0), Point::new(20.0, 10.0), Point::new(30.0, 10.0), Point::new(400.0, 400.0)],
            vec![0, 1, 2, 0],
            window(),
            3,
        )
        .unwrap();
        assert_eq!(data_max_neighbors(&p, 180.0).unwrap(), 2);
    }
}
