//! Flat TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::spectral::{SpaceParams, DEFAULT_ENUMERATION_CAP};

pub const DEFAULT_C_HEAD: f64 = 0.05;
pub const DEFAULT_M_FACTOR: usize = 8;

fn default_c_head() -> f64 {
    DEFAULT_C_HEAD
}

fn default_m_factor() -> usize {
    DEFAULT_M_FACTOR
}

fn default_trials() -> usize {
    1
}

/// One experiment run.
///
/// ```toml
/// d = 1
/// s = 1.0
/// n_grid = [512, 2048]
/// c_head = 0.05
/// m_factor = 8
/// trials = 50
/// seed = 7
/// out = "claims.csv"
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub s: f64,
    /// Sample counts; the `beta` subcommand reads these as head sizes `k`.
    pub n_grid: Vec<usize>,
    #[serde(default = "default_c_head")]
    pub c_head: f64,
    #[serde(default = "default_m_factor")]
    pub m_factor: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn space(&self) -> Result<SpaceParams> {
        SpaceParams::new(self.d, self.s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the fields shared by every subcommand.
    pub fn validate_common(&self) -> Result<()> {
        self.space()?;
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.c_head.is_finite() && self.c_head > 0.0) {
            return Err(Error::Config(format!(
                "c_head must be positive, got {}",
                self.c_head
            )));
        }
        if self.m_factor < 2 {
            return Err(Error::Config(format!(
                "m_factor must be at least 2, got {}",
                self.m_factor
            )));
        }
        Ok(())
    }

    /// `(k, m)` for sample count `n`, validated.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize)> {
        let k = head_size(n, self.c_head);
        let m = k.saturating_mul(self.m_factor);
        if k == 0 {
            return Err(Error::Config(format!(
                "c_head = {} gives k = 0 at n = {n}",
                self.c_head
            )));
        }
        if k > n {
            return Err(Error::Config(format!(
                "c_head = {} gives k = {k} > n = {n}",
                self.c_head
            )));
        }
        if m >= DEFAULT_ENUMERATION_CAP {
            return Err(Error::Config(format!(
                "m = {m} exceeds the enumeration cap {DEFAULT_ENUMERATION_CAP}"
            )));
        }
        Ok((k, m))
    }

    /// Validates the config for the sampling subcommands.
    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        for &n in &self.n_grid {
            self.sizes(n)?;
        }
        Ok(())
    }

    /// Largest `m` over the grid.
    pub fn max_m(&self) -> Result<usize> {
        let mut best = 0;
        for &n in &self.n_grid {
            best = best.max(self.sizes(n)?.1);
        }
        Ok(best)
    }
}

/// `k = ⌊c·n / ln n⌋`, zero for `n < 2`.
pub fn head_size(n: usize, c: f64) -> usize {
    if n < 2 {
        return 0;
    }
    let nf = n as f64;
    (c * nf / nf.ln()).floor() as usize
}
