//! Population K and K-cross functions, and CSR simulation envelopes.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridIndex;
use crate::pattern::{Point, PointPattern, Window};
use crate::radii::RadiiGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeCorrection {
    None,
    /// Only sources at least `r` from the window boundary contribute at `r`.
    #[default]
    Border,
}

impl FromStr for EdgeCorrection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "border" => Ok(Self::Border),
            other => Err(Error::invalid(format!("unknown edge correction '{other}'"))),
        }
    }
}

/// A K-function sampled on a radii grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KCurve {
    pub radii: RadiiGrid,
    pub values: Vec<f64>,
    pub source_class: usize,
    pub target_class: usize,
}

/// Homogeneous Ripley K (or K-cross when the classes differ).
///
/// With `n_s` sources, `n_t` targets (`n_t - 1` when the classes coincide)
/// and window area `A`, the estimate at `r` is
/// `A / (n_s · n_t) · Σ_s Σ_{t≠s} [d(s, t) < r]`, i.e. neighbour counts
/// normalised by the target intensity `n_t / A` and averaged over sources.
/// Border correction averages over the sources retained at each radius.
pub fn ripley_k(
    pattern: &PointPattern,
    source_class: usize,
    target_class: usize,
    radii: &RadiiGrid,
    correction: EdgeCorrection,
) -> Result<KCurve> {
    pattern.check_class(source_class)?;
    pattern.check_class(target_class)?;
    let counts = pattern.class_counts();
    let same = source_class == target_class;
    let n_src = counts[source_class];
    let n_tgt = if same {
        counts[target_class].saturating_sub(1)
    } else {
        counts[target_class]
    };
    if n_src == 0 || n_tgt == 0 {
        return Err(Error::EmptyPattern(format!(
            "K({source_class}, {target_class}) needs {} but the pattern has {n_src} source and {} target points",
            if same { "at least 2 points of the class" } else { "at least 1 source and 1 target point" },
            counts[target_class]
        )));
    }

    let window = pattern.window();
    let r2: Vec<f64> = radii.as_slice().iter().map(|r| r * r).collect();
    let n_r = r2.len();
    let index = GridIndex::new(pattern, radii.max() / 2.0)?;

    let mut total = vec![0u64; n_r];
    let mut retained = vec![0u64; n_r];
    let mut hist = vec![0u64; n_r];
    for (s, &label) in pattern.labels().iter().enumerate() {
        if label != source_class {
            continue;
        }
        let center = pattern.point(s);
        hist.iter_mut().for_each(|h| *h = 0);
        index.for_each_candidate(center, radii.max(), |t| {
            if t.label == target_class && t.index != s {
                let d2 = t.point().dist_sq(center);
                if let Some(bin) = r2.iter().position(|&r2| d2 < r2) {
                    hist[bin] += 1;
                }
            }
        });
        let boundary = window.boundary_distance(center);
        let mut cumulative = 0;
        for j in 0..n_r {
            cumulative += hist[j];
            if correction == EdgeCorrection::None || boundary >= radii.as_slice()[j] {
                total[j] += cumulative;
                retained[j] += 1;
            }
        }
    }

    let area = window.area();
    let mut values = Vec::with_capacity(n_r);
    for j in 0..n_r {
        if retained[j] == 0 {
            return Err(Error::EmptyPattern(format!(
                "no source point lies at least {} from the window boundary",
                radii.as_slice()[j]
            )));
        }
        values.push(area * total[j] as f64 / (retained[j] as f64 * n_tgt as f64));
    }
    Ok(KCurve {
        radii: radii.clone(),
        values,
        source_class,
        target_class,
    })
}

/// Pointwise rank envelope of K under complete spatial randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub radii: RadiiGrid,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Theoretical CSR value `π r²`.
    pub baseline: Vec<f64>,
    pub n_simulations: usize,
    pub rank: usize,
}

impl Envelope {
    /// Per-radius flags: `true` where `curve` leaves the band.
    pub fn escapes(&self, curve: &KCurve) -> Vec<bool> {
        curve
            .values
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| v < lo || v > hi)
            .collect()
    }
}

/// Simulate `n_sims` binomial CSR patterns with the observed per-class counts
/// in the same window and take the `rank`-th smallest/largest K at each radius.
///
/// Simulation `i` draws from a ChaCha8 stream `i` keyed by `seed`, so the
/// result does not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn csr_envelope(
    pattern: &PointPattern,
    source_class: usize,
    target_class: usize,
    radii: &RadiiGrid,
    n_sims: usize,
    rank: usize,
    seed: u64,
    correction: EdgeCorrection,
) -> Result<Envelope> {
    if rank == 0 || n_sims < 2 * rank {
        return Err(Error::invalid(format!(
            "envelope needs rank >= 1 and n_sims >= 2 * rank, got n_sims={n_sims}, rank={rank}"
        )));
    }
    pattern.check_class(source_class)?;
    pattern.check_class(target_class)?;
    let counts = pattern.class_counts();
    let window = *pattern.window();
    let n_classes = pattern.n_classes();

    let sims: Vec<Vec<f64>> = (0..n_sims)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sim = simulate_csr(&window, n_classes, &counts, source_class, target_class, &mut rng)?;
            ripley_k(&sim, source_class, target_class, radii, correction).map(|k| k.values)
        })
        .collect::<Result<_>>()?;

    let n_r = radii.len();
    let mut lower = Vec::with_capacity(n_r);
    let mut upper = Vec::with_capacity(n_r);
    let mut column = vec![0.0; n_sims];
    for j in 0..n_r {
        for (slot, sim) in column.iter_mut().zip(&sims) {
            *slot = sim[j];
        }
        column.sort_by(f64::total_cmp);
        lower.push(column[rank - 1]);
        upper.push(column[n_sims - rank]);
    }
    Ok(Envelope {
        radii: radii.clone(),
        lower,
        upper,
        baseline: radii.as_slice().iter().map(|r| PI * r * r).collect(),
        n_simulations: n_sims,
        rank,
    })
}

/// Uniform points for the source and target classes only; other classes do
/// not enter K for this pair.
fn simulate_csr(
    window: &Window,
    n_classes: usize,
    counts: &[usize],
    source_class: usize,
    target_class: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PointPattern> {
    let mut classes = vec![source_class];
    if target_class != source_class {
        classes.push(target_class);
    }
    let total: usize = classes.iter().map(|&c| counts[c]).sum();
    let mut points = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for &c in &classes {
        for _ in 0..counts[c] {
            let x = window.x0 + window.width * rng.gen::<f64>();
            let y = window.y0 + window.height * rng.gen::<f64>();
            points.push(Point::new(x, y));
            labels.push(c);
        }
    }
    PointPattern::new(points, labels, *window, n_classes)
}
