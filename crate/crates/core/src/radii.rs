use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing sampling radii, in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RadiiGrid(Vec<f64>);

impl RadiiGrid {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::invalid("radii grid must be nonempty"));
        }
        if radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::invalid("radii must be finite and positive"));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("radii must be strictly increasing"));
        }
        Ok(Self(radii))
    }

    /// `step, 2·step, …` up to and including `max`.
    pub fn stepped(step: f64, max: f64) -> Result<Self> {
        if !(step > 0.0) || !(max >= step) {
            return Err(Error::invalid(format!("bad radius range step={step} max={max}")));
        }
        let n = (max / step + 1e-9).floor() as usize;
        Self::new((1..=n).map(|i| step * i as f64).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max(&self) -> f64 {
        *self.0.last().unwrap()
    }
}

impl Default for RadiiGrid {
    /// 15, 30, …, 90 pixels.
    fn default() -> Self {
        Self((1..=6).map(|i| 15.0 * i as f64).collect())
    }
}

impl TryFrom<Vec<f64>> for RadiiGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RadiiGrid> for Vec<f64> {
    fn from(r: RadiiGrid) -> Self {
        r.0
    }
}
