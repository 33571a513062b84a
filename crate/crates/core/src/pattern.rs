//! Multi-class point patterns and their observation windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, other: Point) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

/// Axis-aligned observation window, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Window {
    pub fn new(x0: f64, y0: f64, width: f64, height: f64) -> Result<Self> {
        let finite = [x0, y0, width, height].iter().all(|v| v.is_finite());
        if !finite || width <= 0.0 || height <= 0.0 {
            return Err(Error::invalid(format!(
                "window must have finite origin and positive size, got ({x0}, {y0}, {width}, {height})"
            )));
        }
        Ok(Self {
            x0,
            y0,
            width,
            height,
        })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.width
    }

    pub fn y1(&self) -> f64 {
        self.y0 + self.height
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1() && p.y >= self.y0 && p.y <= self.y1()
    }

    /// Distance from an interior point to the nearest window edge.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        (p.x - self.x0)
            .min(self.x1() - p.x)
            .min(p.y - self.y0)
            .min(self.y1() - p.y)
    }

    /// Smallest window holding every point, padded to a non-degenerate size.
    pub fn bounding(points: &[Point]) -> Self {
        if points.is_empty() {
            return Self {
                x0: 0.0,
                y0: 0.0,
                width: 1.0,
                height: 1.0,
            };
        }
        let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
        let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            xmin = xmin.min(p.x);
            ymin = ymin.min(p.y);
            xmax = xmax.max(p.x);
            ymax = ymax.max(p.y);
        }
        Self {
            x0: xmin,
            y0: ymin,
            width: (xmax - xmin).max(1.0),
            height: (ymax - ymin).max(1.0),
        }
    }
}

/// A 2D point set with integer class labels, observed inside a rectangular window.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    points: Vec<Point>,
    labels: Vec<usize>,
    window: Window,
    n_classes: usize,
}

impl PointPattern {
    pub fn new(
        points: Vec<Point>,
        labels: Vec<usize>,
        window: Window,
        n_classes: usize,
    ) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::invalid("n_classes must be positive"));
        }
        if points.len() != labels.len() {
            return Err(Error::inconsistent(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        for (i, (p, &c)) in points.iter().zip(&labels).enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::invalid(format!("point {i} has non-finite coordinates")));
            }
            if !window.contains(*p) {
                return Err(Error::invalid(format!(
                    "point {i} at ({}, {}) lies outside the window",
                    p.x, p.y
                )));
            }
            if c >= n_classes {
                return Err(Error::invalid(format!(
                    "point {i} has class {c}, but n_classes is {n_classes}"
                )));
            }
        }
        Ok(Self {
            points,
            labels,
            window,
            n_classes,
        })
    }

    pub fn empty(window: Window, n_classes: usize) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), window, n_classes)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &c in &self.labels {
            counts[c] += 1;
        }
        counts
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            return Err(Error::OutOfRange {
                index,
                len: self.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_class(&self, class: usize) -> Result<()> {
        if class >= self.n_classes {
            return Err(Error::invalid(format!(
                "unknown class {class} (n_classes = {})",
                self.n_classes
            )));
        }
        Ok(())
    }
}
