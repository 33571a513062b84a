//! Uniform-grid bucket index for exact fixed-radius range counting.
//!
//! Points are bucketed by `(floor(x / cell_size), floor(y / cell_size))`.
//! Buckets are stored densely over the occupied bounding range with a
//! counting sort, so a bucket is a contiguous slice and point indices within
//! it are ascending. Queries visit every bucket overlapping the query's
//! bounding box and apply the exact predicate to each candidate.

use crate::error::{Error, Result};
use crate::pattern::{Point, PointPattern};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Slot {
    pub x: f64,
    pub y: f64,
    pub label: usize,
    pub index: usize,
}

impl Slot {
    #[inline]
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone)]
pub struct GridIndex<'a> {
    pattern: &'a PointPattern,
    cell_size: f64,
    gx0: i64,
    gy0: i64,
    nx: usize,
    ny: usize,
    /// `starts[b]..starts[b + 1]` is bucket `b` within `slots`.
    starts: Vec<usize>,
    slots: Vec<Slot>,
}

impl<'a> GridIndex<'a> {
    pub fn new(pattern: &'a PointPattern, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::invalid(format!(
                "cell_size must be positive and finite, got {cell_size}"
            )));
        }
        let keys: Vec<(i64, i64)> = pattern
            .points()
            .iter()
            .map(|p| bucket_key(*p, cell_size))
            .collect();
        if keys.is_empty() {
            return Ok(Self {
                pattern,
                cell_size,
                gx0: 0,
                gy0: 0,
                nx: 0,
                ny: 0,
                starts: vec![0],
                slots: Vec::new(),
            });
        }
        let gx0 = keys.iter().map(|k| k.0).min().unwrap();
        let gy0 = keys.iter().map(|k| k.1).min().unwrap();
        let nx = (keys.iter().map(|k| k.0).max().unwrap() - gx0 + 1) as usize;
        let ny = (keys.iter().map(|k| k.1).max().unwrap() - gy0 + 1) as usize;
        let n_buckets = nx
            .checked_mul(ny)
            .filter(|&n| n <= 1 << 28)
            .ok_or_else(|| Error::invalid("cell_size too small for the pattern extent"))?;

        let flat = |k: (i64, i64)| (k.1 - gy0) as usize * nx + (k.0 - gx0) as usize;
        let mut starts = vec![0usize; n_buckets + 1];
        for &k in &keys {
            starts[flat(k) + 1] += 1;
        }
        for b in 0..n_buckets {
            starts[b + 1] += starts[b];
        }
        let mut fill = starts.clone();
        let mut slots = vec![
            Slot {
                x: 0.0,
                y: 0.0,
                label: 0,
                index: 0,
            };
            keys.len()
        ];
        for (i, &k) in keys.iter().enumerate() {
            let b = flat(k);
            let p = pattern.point(i);
            slots[fill[b]] = Slot {
                x: p.x,
                y: p.y,
                label: pattern.label(i),
                index: i,
            };
            fill[b] += 1;
        }
        Ok(Self {
            pattern,
            cell_size,
            gx0,
            gy0,
            nx,
            ny,
            starts,
            slots,
        })
    }

    pub fn pattern(&self) -> &'a PointPattern {
        self.pattern
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn bucket_of(&self, p: Point) -> (i64, i64) {
        bucket_key(p, self.cell_size)
    }

    /// Point indices stored in the bucket at grid coordinates `(gx, gy)`.
    pub fn bucket(&self, gx: i64, gy: i64) -> Vec<usize> {
        self.bucket_slots(gx, gy).iter().map(|s| s.index).collect()
    }

    /// Nonempty buckets with their grid coordinates, in row-major order.
    pub fn buckets(&self) -> impl Iterator<Item = ((i64, i64), Vec<usize>)> + '_ {
        (0..self.nx * self.ny).filter_map(move |b| {
            let slots = &self.slots[self.starts[b]..self.starts[b + 1]];
            if slots.is_empty() {
                return None;
            }
            let key = (self.gx0 + (b % self.nx) as i64, self.gy0 + (b / self.nx) as i64);
            Some((key, slots.iter().map(|s| s.index).collect()))
        })
    }

    pub fn n_buckets(&self) -> usize {
        (0..self.nx * self.ny)
            .filter(|&b| self.starts[b + 1] > self.starts[b])
            .count()
    }

    fn bucket_slots(&self, gx: i64, gy: i64) -> &[Slot] {
        let (cx, cy) = (gx - self.gx0, gy - self.gy0);
        if cx < 0 || cy < 0 || cx as usize >= self.nx || cy as usize >= self.ny {
            return &[];
        }
        let b = cy as usize * self.nx + cx as usize;
        &self.slots[self.starts[b]..self.starts[b + 1]]
    }

    /// Visit every stored point whose bucket overlaps the closed box
    /// `[cx - half, cx + half] × [cy - half, cy + half]`. Candidates outside
    /// the box may be visited; callers apply their own exact predicate.
    #[inline]
    pub(crate) fn for_each_candidate(&self, center: Point, half: f64, mut f: impl FnMut(&Slot)) {
        if self.slots.is_empty() {
            return;
        }
        // Slack keeps the bucket range conservative under rounding.
        let slack = (center.x.abs().max(center.y.abs()) + half) * 1e-12 + f64::MIN_POSITIVE;
        let reach = half + slack;
        let lo_x = (((center.x - reach) / self.cell_size).floor() as i64).max(self.gx0);
        let hi_x = (((center.x + reach) / self.cell_size).floor() as i64).min(self.gx0 + self.nx as i64 - 1);
        let lo_y = (((center.y - reach) / self.cell_size).floor() as i64).max(self.gy0);
        let hi_y = (((center.y + reach) / self.cell_size).floor() as i64).min(self.gy0 + self.ny as i64 - 1);
        if lo_x > hi_x || lo_y > hi_y {
            return;
        }
        for gy in lo_y..=hi_y {
            let row = (gy - self.gy0) as usize * self.nx;
            let first = row + (lo_x - self.gx0) as usize;
            let last = row + (hi_x - self.gx0) as usize;
            // Buckets of one grid row are contiguous in `slots`.
            for slot in &self.slots[self.starts[first]..self.starts[last + 1]] {
                f(slot);
            }
        }
    }

    /// Number of points of `target_class` at Euclidean distance strictly less
    /// than `radius` from `center`, skipping the point `exclude`.
    pub fn count_in_disk(
        &self,
        center: Point,
        radius: f64,
        target_class: usize,
        exclude: Option<usize>,
    ) -> usize {
        if !(radius > 0.0) {
            return 0;
        }
        let r2 = radius * radius;
        let mut count = 0;
        self.for_each_candidate(center, radius, |s| {
            if s.label == target_class && Some(s.index) != exclude && s.point().dist_sq(center) < r2 {
                count += 1;
            }
        });
        count
    }
}

#[inline]
fn bucket_key(p: Point, cell_size: f64) -> (i64, i64) {
    ((p.x / cell_size).floor() as i64, (p.y / cell_size).floor() as i64)
}
