//! Normalisation and positivity of the sampling density on each grid size.

use std::fmt;

use super::config::ExperimentConfig;
use super::output::{real, CsvRow};
use super::{derive_seed, Workspace};
use crate::error::Result;
use crate::sampler::{density_eval, density_selfcheck, sample_points, DensityParams};

pub const INTEGRAL_TOLERANCE: f64 = 1e-10;
pub const CACHE_TOLERANCE: f64 = 1e-12;

const DENSITY_STREAM: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    /// Quadrature grid resolution per axis.
    pub q: usize,
    pub integral: f64,
    /// Smallest cached density over `n` sampled points.
    pub min_density: f64,
    /// The guaranteed floor `1/(2k)`.
    pub floor: f64,
    /// Largest gap between cached densities and fresh evaluation.
    pub cache_error: f64,
}

impl DensityRow {
    pub fn passed(&self) -> bool {
        (self.integral - 1.0).abs() <= INTEGRAL_TOLERANCE
            && self.min_density >= self.floor * (1.0 - 1e-12)
            && self.cache_error <= CACHE_TOLERANCE
    }
}

impl CsvRow for DensityRow {
    const HEADER: &'static [&'static str] = &[
        "n",
        "k",
        "m",
        "q",
        "integral",
        "min_density",
        "floor",
        "cache_error",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.k.to_string(),
            self.m.to_string(),
            self.q.to_string(),
            real(self.integral),
            real(self.min_density),
            real(self.floor),
            real(self.cache_error),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub rows: Vec<DensityRow>,
}

impl DensityReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(DensityRow::passed)
    }
}

pub fn run_density_check(config: &ExperimentConfig) -> Result<DensityReport> {
    config.validate()?;
    let ws = Workspace::new(config, config.max_m()?)?;
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let (k, m) = config.sizes(n)?;
        let params = DensityParams::new(&ws.basis, k, m)?;
        let q = (4 * ws.basis.max_frequency(m) as usize).max(8);
        let integral = density_selfcheck(&params, q)?;
        let seed = derive_seed(config.seed, &[DENSITY_STREAM, n as u64]);
        let pts = sample_points(&params, n, seed)?;
        let mut cache_error: f64 = 0.0;
        for (x, &rho) in pts.points().zip(pts.densities()) {
            cache_error = cache_error.max((density_eval(&params, x)? - rho).abs());
        }
        rows.push(DensityRow {
            n,
            k,
            m,
            q,
            integral,
            min_density: pts
                .densities()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
            floor: 0.5 / k as f64,
            cache_error,
        });
    }
    Ok(DensityReport { rows })
}

impl fmt::Display for DensityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "density-check: quadrature integral and lower bound 1/(2k)"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "  n = {:>6}  k = {:>5}  m = {:>6}  Q = {:>5}  |integral - 1| = {:.3e}  min/floor = {:.4}  {}",
                r.n,
                r.k,
                r.m,
                r.q,
                (r.integral - 1.0).abs(),
                r.min_density / r.floor,
                if r.passed() { "ok" } else { "FAILED" }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_pass_in_one_and_two_dimensions() {
        for text in [
            "d = 1\ns = 1.0\nn_grid = [512, 4096]",
            "d = 2\ns = 1.0\nn_grid = [1024]\nc_head = 0.1",
        ] {
            let report = run_density_check(&ExperimentConfig::from_toml(text).unwrap()).unwrap();
            assert!(report.passed(), "{report}");
        }
    }
}
