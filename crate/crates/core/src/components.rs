//! 8-connected component labelling of single-channel masks.

use crate::error::{Error, Result};
use crate::pattern::Point;
use crate::raster::RasterMap;

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLabeling {
    pub height: usize,
    pub width: usize,
    /// Row-major labels; 0 is background, components are `1..=n_components`
    /// numbered in raster order of their first pixel.
    pub labels: Vec<u32>,
    pub n_components: usize,
    /// `(mean column, mean row)` of each component, indexed by `label - 1`.
    pub centroids: Vec<Point>,
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn label_at(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Two-pass union-find labelling. Any nonzero value is foreground.
pub fn label_components(mask: &RasterMap) -> Result<ComponentLabeling> {
    if mask.channels() != 1 {
        return Err(Error::invalid(format!(
            "component labelling needs a single-channel mask, got {} channels",
            mask.channels()
        )));
    }
    let (h, w) = (mask.height(), mask.width());
    let fg: Vec<bool> = match mask.data() {
        crate::raster::RasterData::U8(v) => v.iter().map(|&x| x != 0).collect(),
        crate::raster::RasterData::F32(v) => v.iter().map(|&x| x != 0.0).collect(),
    };

    // Provisional labels are 1-based; set 0 is a dummy background entry.
    let mut sets = DisjointSet { parent: vec![0] };
    let mut provisional = vec![0u32; h * w];
    for row in 0..h {
        for col in 0..w {
            let at = row * w + col;
            if !fg[at] {
                continue;
            }
            let mut label = 0u32;
            let mut visit = |r: usize, c: usize, label: &mut u32| {
                let n = provisional[r * w + c];
                if n != 0 {
                    *label = if *label == 0 { sets.find(n) } else { sets.union(*label, n) };
                }
            };
            // Already-visited 8-neighbours: W, NW, N, NE.
            if col > 0 {
                visit(row, col - 1, &mut label);
            }
            if row > 0 {
                if col > 0 {
                    visit(row - 1, col - 1, &mut label);
                }
                visit(row - 1, col, &mut label);
                if col + 1 < w {
                    visit(row - 1, col + 1, &mut label);
                }
            }
            provisional[at] = if label == 0 { sets.make() } else { label };
        }
    }

    let mut final_label = vec![0u32; sets.parent.len()];
    let mut labels = vec![0u32; h * w];
    let mut sums: Vec<(f64, f64, usize)> = Vec::new();
    for row in 0..h {
        for col in 0..w {
            let at = row * w + col;
            if provisional[at] == 0 {
                continue;
            }
            let root = sets.find(provisional[at]) as usize;
            if final_label[root] == 0 {
                sums.push((0.0, 0.0, 0));
                final_label[root] = sums.len() as u32;
            }
            let l = final_label[root];
            labels[at] = l;
            let s = &mut sums[l as usize - 1];
            s.0 += col as f64;
            s.1 += row as f64;
            s.2 += 1;
        }
    }
    Ok(ComponentLabeling {
        height: h,
        width: w,
        labels,
        n_components: sums.len(),
        centroids: sums
            .iter()
            .map(|&(sx, sy, n)| Point::new(sx / n as f64, sy / n as f64))
            .collect(),
        sizes: sums.iter().map(|s| s.2).collect(),
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::raster::RasterData;

    fn mask(h: usize, w: usize, on: &[(usize, usize)]) -> RasterMap {
        let mut m = RasterMap::zeros_u8(h, w, 1);
        for &(r, c) in on {
            m.u8_mut()[r * w + c] = 1;
        }
        m
    }

    /// Stack-based flood fill; returns sorted component sizes.
    fn flood_fill_sizes(fg: &[bool], h: usize, w: usize) -> Vec<usize> {
        let mut seen = vec![false; h * w];
        let mut sizes = Vec::new();
        for start in 0..h * w {
            if !fg[start] || seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut n = 0;
            while let Some(at) = stack.pop() {
                n += 1;
                let (r, c) = ((at / w) as i64, (at % w) as i64);
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (nr, nc) = (r + dr, c + dc);
                        if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                            continue;
                        }
                        let j = nr as usize * w + nc as usize;
                        if fg[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            sizes.push(n);
        }
        sizes.sort_unstable();
        sizes
    }

    #[test]
    fn all_zero() {
        let l = label_components(&RasterMap::zeros_u8(5, 7, 1)).unwrap();
        assert_eq!(l.n_components, 0);
        assert!(l.labels.iter().all(|&x| x == 0));
    }

    #[test]
    fn square_centroid() {
        let on: Vec<_> = (20..=22).flat_map(|r| (10..=12).map(move |c| (r, c))).collect();
        let l = label_components(&mask(40, 40, &on)).unwrap();
        assert_eq!(l.n_components, 1);
        assert_eq!(l.centroids[0], Point::new(11.0, 21.0));
        assert_eq!(l.sizes, vec![9]);
    }

    #[test]
    fn diagonal_pixels_join() {
        let l = label_components(&mask(4, 4, &[(0, 0), (1, 1), (2, 2), (0, 3)])).unwrap();
        assert_eq!(l.n_components, 2);
        assert_eq!(l.sizes, vec![3, 1]);
    }

    #[test]
    fn u_shape_merges() {
        // Two arms joined at the bottom; the second arm is first seen as a
        // separate provisional label.
        let l = label_components(&mask(3, 3, &[(0, 0), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1), (2, 2)])).unwrap();
        assert_eq!(l.n_components, 1);
        assert_eq!(l.label_at(0, 2), 1);
    }

    #[test]
    fn multichannel_rejected() {
        assert!(label_components(&RasterMap::zeros_u8(2, 2, 2)).is_err());
    }

    #[test]
    fn random_blobs_match_flood_fill() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..30 {
            let (h, w) = (rng.gen_range(1..40), rng.gen_range(1..40));
            let density = rng.gen_range(0.1..0.7);
            let fg: Vec<bool> = (0..h * w).map(|_| rng.gen_bool(density)).collect();
            let m = RasterMap::new(
                h,
                w,
                1,
                RasterData::F32(fg.iter().map(|&b| if b { 0.7 } else { 0.0 }).collect()),
            )
            .unwrap();
            let l = label_components(&m).unwrap();
            let mut sizes = l.sizes.clone();
            sizes.sort_unstable();
            assert_eq!(sizes, flood_fill_sizes(&fg, h, w));
            let mut per_label = vec![0usize; l.n_components];
            for &x in &l.labels {
                if x > 0 {
                    per_label[x as usize - 1] += 1;
                }
            }
            assert_eq!(per_label, l.sizes);
        }
    }
}
