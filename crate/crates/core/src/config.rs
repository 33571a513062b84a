//! Run configuration: defaults, an optional flat TOML file, then flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radii::RadiiGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub radii: RadiiGrid,
    pub patch_size: f64,
    pub n_max: f64,
    pub k: usize,
    pub max_halfwidth: u32,
    pub min_gap: u32,
    pub threshold: f64,
    pub min_size: usize,
    pub match_radius: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            radii: RadiiGrid::default(),
            patch_size: 180.0,
            n_max: 100.0,
            k: 5,
            max_halfwidth: 4,
            min_gap: 1,
            threshold: 0.5,
            min_size: 5,
            match_radius: 6.0,
            seed: 0,
            workers: 1,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() as u64 + 1);
            Error::parse(line, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("patch_size", self.patch_size),
            ("n_max", self.n_max),
            ("match_radius", self.match_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.k == 0 || self.max_halfwidth == 0 || self.workers == 0 || self.min_size == 0 {
            return Err(Error::invalid("k, max_halfwidth, min_size and workers must be positive"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        Ok(())
    }
}
