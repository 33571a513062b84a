use super::kvector::{k_vector_field, KVector};
use crate::error::{Error, Result};
use crate::pattern::PointPattern;
use crate::radii::RadiiGrid;

/// Mean K-vector row for every (source class, target class) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageCurves {
    pub radii: RadiiGrid,
    pub n_classes: usize,
    /// `means[(src * n_classes + tgt) * radii.len() + j]`.
    pub means: Vec<f64>,
    /// Number of source cells per class; zero marks an absent class.
    pub cell_counts: Vec<usize>,
}

impl AverageCurves {
    pub fn from_field(pattern: &PointPattern, field: &[KVector]) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::EmptyPattern("average curves need at least one cell".into()));
        }
        if field.len() != pattern.len() {
            return Err(Error::inconsistent(format!(
                "{} K-vectors for {} cells",
                field.len(),
                pattern.len()
            )));
        }
        let n_classes = pattern.n_classes();
        let radii = field[0].radii.clone();
        let n_r = radii.len();
        let stride = n_classes * n_r;
        let mut sums = vec![0.0; n_classes * stride];
        let mut cell_counts = vec![0usize; n_classes];
        for (v, &src) in field.iter().zip(pattern.labels()) {
            if v.radii != radii || v.values.len() != stride {
                return Err(Error::inconsistent("K-vectors have mixed shapes"));
            }
            cell_counts[src] += 1;
            for (s, x) in sums[src * stride..(src + 1) * stride].iter_mut().zip(&v.values) {
                *s += x;
            }
        }
        for (src, &n) in cell_counts.iter().enumerate() {
            if n > 0 {
                sums[src * stride..(src + 1) * stride]
                    .iter_mut()
                    .for_each(|s| *s /= n as f64);
            }
        }
        Ok(Self {
            radii,
            n_classes,
            means: sums,
            cell_counts,
        })
    }

    pub fn present(&self, source_class: usize) -> bool {
        self.cell_counts[source_class] > 0
    }

    pub fn curve(&self, source_class: usize, target_class: usize) -> &[f64] {
        let n_r = self.radii.len();
        let at = (source_class * self.n_classes + target_class) * n_r;
        &self.means[at..at + n_r]
    }
}

pub fn average_k_curves(
    pattern: &PointPattern,
    radii: &RadiiGrid,
    patch_size: f64,
    n_max: f64,
) -> Result<AverageCurves> {
    if pattern.is_empty() {
        return Err(Error::EmptyPattern("average curves need at least one cell".into()));
    }
    let field = k_vector_field(pattern, radii, patch_size, n_max, 1)?;
    AverageCurves::from_field(pattern, &field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{Point, Window};

    #[test]
    fn symmetric_triangle() {
        let h = 10.0 * 3f64.sqrt() / 2.0;
        let p = PointPattern::new(
            vec![Point::new(100.0, 100.0), Point::new(110.0, 100.0), Point::new(105.0, 100.0 + h)],
            vec![0, 1, 2],
            Window::new(0.0, 0.0, 300.0, 300.0).unwrap(),
            3,
        )
        .unwrap();
        let avg = average_k_curves(&p, &RadiiGrid::default(), 180.0, 100.0).unwrap();
        for s in 0..3 {
            for t in 0..3 {
                let expected = if s == t { [0.0; 6] } else { [0.01; 6] };
                assert_eq!(avg.curve(s, t), &expected);
            }
        }
    }

    #[test]
    fn empty_class_flagged_absent() {
        let p = PointPattern::new(
            vec![Point::new(10.0, 10.0), Point::new(20.0, 10.0)],
            vec![0, 2],
            Window::new(0.0, 0.0, 100.0, 100.0).unwrap(),
            3,
        )
        .unwrap();
        let avg = average_k_curves(&p, &RadiiGrid::default(), 180.0, 100.0).unwrap();
        assert!(avg.present(0) && !avg.present(1) && avg.present(2));
        assert!(avg.curve(1, 0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn equals_mean_of_field_rows() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let n = 300;
        let pts = (0..n)
            .map(|_| Point::new(rng.gen_range(0.0..400.0), rng.gen_range(0.0..400.0)))
            .collect();
        let labels = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let p = PointPattern::new(pts, labels, Window::new(0.0, 0.0, 400.0, 400.0).unwrap(), 3).unwrap();
        let radii = RadiiGrid::default();
        let avg = average_k_curves(&p, &radii, 180.0, 100.0).unwrap();
        let field = k_vector_field(&p, &radii, 180.0, 100.0, 2).unwrap();
        for s in 0..3 {
            let members: Vec<&KVector> = field.iter().filter(|v| p.label(v.cell_index) == s).collect();
            for t in 0..3 {
                for j in 0..6 {
                    let mean = members.iter().map(|v| v.row(t)[j]).sum::<f64>() / members.len() as f64;
                    assert!((avg.curve(s, t)[j] - mean).abs() < 1e-12);
                }
            }
        }
    }
}
