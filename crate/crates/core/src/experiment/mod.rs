//! Seeded experiment runs: concentration of `G` and `Γ`, error rates, the
//! `β_k` comparison and density normalisation.
//!
//! Every run is a pure function of its configuration and master seed. Trials
//! execute in parallel and are collected in trial order before any reduction.

pub mod beta;
pub mod claims;
pub mod config;
pub mod density;
pub mod output;
pub mod rates;

use std::fmt;

use crate::error::Result;
use crate::lstsq::{build_matrices, InfoMatrices, PseudoInverse};
use crate::sampler::{sample_points, DensityParams, PointSet};
use crate::spectral::{ordered_basis, spectral_sums, OrderedBasis, SpectrumSummary};

pub use beta::{run_beta_lemma, BetaReport, BetaRow};
pub use claims::{claim2_threshold, run_claims, ClaimsReport, ClaimsRow, ThresholdSweep};
pub use config::{head_size, ExperimentConfig};
pub use density::{run_density_check, DensityReport, DensityRow};
pub use rates::{run_rates, RatesReport, RatesRow};

/// One step of the SplitMix64 sequence.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one draw, mixed from the master seed and the draw's coordinates.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Median of the finite values; `NaN` when there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Basis and spectral sums long enough for every `(k, m)` of a run.
pub(crate) struct Workspace {
    pub basis: OrderedBasis,
    pub summary: SpectrumSummary,
}

impl Workspace {
    /// Holds `a_0, …, a_{len−1}`.
    pub fn new(config: &ExperimentConfig, len: usize) -> Result<Self> {
        let params = config.space()?;
        let basis = ordered_basis(params, len)?;
        let summary = spectral_sums(&params, &basis)?;
        Ok(Self { basis, summary })
    }
}

/// A sampled instance with its information matrices and fit operator.
pub(crate) struct Draw {
    pub pts: PointSet,
    pub info: InfoMatrices,
    pub pinv: PseudoInverse,
}

pub(crate) fn draw(basis: &OrderedBasis, n: usize, k: usize, m: usize, seed: u64) -> Result<Draw> {
    let density = DensityParams::new(basis, k, m)?;
    let pts = sample_points(&density, n, seed)?;
    let info = build_matrices(&pts, basis, k, m)?;
    let pinv = PseudoInverse::new(info.g())?;
    Ok(Draw { pts, info, pinv })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Claims,
    Rates,
    Beta,
    DensityCheck,
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Claims => "claims",
            Self::Rates => "rates",
            Self::Beta => "beta",
            Self::DensityCheck => "density-check",
        })
    }
}

/// Text report, CSV bytes and whether every built-in check passed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: String,
    pub csv: Vec<u8>,
    pub checks_passed: bool,
}

pub fn run(sub: Subcommand, config: &ExperimentConfig) -> Result<RunOutput> {
    match sub {
        Subcommand::Claims => {
            let r = run_claims(config)?;
            Ok(RunOutput {
                report: r.to_string(),
                csv: output::to_csv(&r.rows)?,
                checks_passed: true,
            })
        }
        Subcommand::Rates => {
            let r = run_rates(config)?;
            Ok(RunOutput {
                report: r.to_string(),
                csv: output::to_csv(&r.rows)?,
                checks_passed: true,
            })
        }
        Subcommand::Beta => {
            let r = run_beta_lemma(config)?;
            Ok(RunOutput {
                report: r.to_string(),
                csv: output::to_csv(&r.rows)?,
                checks_passed: true,
            })
        }
        Subcommand::DensityCheck => {
            let r = run_density_check(config)?;
            Ok(RunOutput {
                report: r.to_string(),
                csv: output::to_csv(&r.rows)?,
                checks_passed: r.passed(),
            })
        }
    }
}
