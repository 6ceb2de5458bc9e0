//! Concentration of `s_min(G)` and `s_max(Γ)` over repeated draws.

use std::fmt;

use rayon::prelude::*;

use super::config::{head_size, ExperimentConfig};
use super::output::{real, CsvRow};
use super::{derive_seed, draw, median, Workspace};
use crate::analysis::ErrorReport;
use crate::error::{Error, Result};
use crate::lstsq::{design_matrix, singular_extrema, PseudoInverse};
use crate::sampler::{sample_points, DensityParams};
use crate::spectral::{ordered_basis, OrderedBasis};

/// Threshold multiple of `γ_k √n` tested for `s_max(Γ)`.
pub const CLAIM1_FACTOR: f64 = 3.0;

/// Stop doubling `c` once `k` would exceed this fraction of `n`.
const SWEEP_MAX_K_FRACTION: f64 = 0.5;

const CLAIMS_STREAM: u64 = 1;
const SWEEP_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimsRow {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub trials: usize,
    pub degenerate: usize,
    /// Fraction of draws with `s_min(G) ≥ √n / 2`.
    pub claim2_success: f64,
    /// Distribution of `s_max(Γ) / (γ_k √n)`.
    pub claim1_median: f64,
    pub claim1_min: f64,
    pub claim1_max: f64,
    /// Fraction of draws with `s_max(Γ) ≤ 3 γ_k √n`.
    pub claim1_success: f64,
    pub s_min_median: f64,
    /// Largest `e_trunc / (a_k + s_max(Γ)/s_min(G))` over non-degenerate draws.
    pub eq1_ratio_max: f64,
}

impl CsvRow for ClaimsRow {
    const HEADER: &'static [&'static str] = &[
        "n",
        "k",
        "m",
        "trials",
        "degenerate",
        "claim2_success",
        "claim1_ratio_median",
        "claim1_ratio_min",
        "claim1_ratio_max",
        "claim1_success",
        "s_min_G_median",
        "eq1_ratio_max",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.k.to_string(),
            self.m.to_string(),
            self.trials.to_string(),
            self.degenerate.to_string(),
            real(self.claim2_success),
            real(self.claim1_median),
            real(self.claim1_min),
            real(self.claim1_max),
            real(self.claim1_success),
            real(self.s_min_median),
            real(self.eq1_ratio_max),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdStep {
    pub c_head: f64,
    pub k: usize,
    pub claim2_success: f64,
}

/// `c` doubled from the configured value until the `s_min` success fraction drops below 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    pub n: usize,
    pub steps: Vec<ThresholdStep>,
    /// First `c` with success below 1/2, if reached before `k` grows past `n/2`.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimsReport {
    pub rows: Vec<ClaimsRow>,
    pub sweeps: Vec<ThresholdSweep>,
}

struct Trial {
    s_min_g: f64,
    claim1_ratio: f64,
    eq1_ratio: Option<f64>,
}

pub fn run_claims(config: &ExperimentConfig) -> Result<ClaimsReport> {
    config.validate()?;
    let ws = Workspace::new(config, config.max_m()? + 1)?;
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        rows.push(claims_row(config, &ws, n)?);
    }
    let sweeps = config
        .n_grid
        .iter()
        .map(|&n| claim2_threshold(config, n))
        .collect::<Result<_>>()?;
    Ok(ClaimsReport { rows, sweeps })
}

fn claims_row(config: &ExperimentConfig, ws: &Workspace, n: usize) -> Result<ClaimsRow> {
    let (k, m) = config.sizes(n)?;
    let (_, gamma_k) = ws.summary.beta_gamma(k)?;
    let scale = gamma_k * (n as f64).sqrt();
    let trials: Vec<Trial> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(config.seed, &[CLAIMS_STREAM, n as u64, t as u64]);
            let inst = draw(&ws.basis, n, k, m, seed)?;
            let (_, s_max_gamma) = singular_extrema(inst.info.gamma())?;
            let eq1_ratio = if inst.pinv.rank_ok() {
                let report = ErrorReport::compute(
                    &ws.basis,
                    &ws.summary,
                    &inst.pts,
                    &inst.info,
                    &inst.pinv,
                    1.0,
                )?;
                report.validate().map_err(|e| annotate(e, n, t))?;
                Some(report.eq1_ratio())
            } else {
                None
            };
            Ok(Trial {
                s_min_g: inst.pinv.s_min(),
                claim1_ratio: s_max_gamma / scale,
                eq1_ratio,
            })
        })
        .collect::<Result<_>>()?;

    let count = trials.len() as f64;
    let half_root_n = 0.5 * (n as f64).sqrt();
    let ratios: Vec<f64> = trials.iter().map(|t| t.claim1_ratio).collect();
    let s_mins: Vec<f64> = trials.iter().map(|t| t.s_min_g).collect();
    Ok(ClaimsRow {
        n,
        k,
        m,
        trials: trials.len(),
        degenerate: trials.iter().filter(|t| t.eq1_ratio.is_none()).count(),
        claim2_success: s_mins.iter().filter(|&&s| s >= half_root_n).count() as f64 / count,
        claim1_median: median(&ratios),
        claim1_min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        claim1_max: ratios.iter().copied().fold(0.0, f64::max),
        claim1_success: ratios.iter().filter(|&&r| r <= CLAIM1_FACTOR).count() as f64 / count,
        s_min_median: median(&s_mins),
        eq1_ratio_max: trials
            .iter()
            .filter_map(|t| t.eq1_ratio)
            .fold(f64::NAN, f64::max),
    })
}

fn annotate(e: Error, n: usize, trial: usize) -> Error {
    match e {
        Error::Invariant(msg) => Error::Invariant(format!("n = {n}, trial {trial}: {msg}")),
        other => other,
    }
}

/// Doubles `c_head` until the fraction of draws with `s_min(G) ≥ √n/2` drops below 1/2.
///
/// Only `G` is needed, so `Γ` and the error analysis are skipped.
pub fn claim2_threshold(config: &ExperimentConfig, n: usize) -> Result<ThresholdSweep> {
    config.validate_common()?;
    let params = config.space()?;
    let half_root_n = 0.5 * (n as f64).sqrt();
    let mut steps = Vec::new();
    let mut c = config.c_head;
    let mut basis: Option<OrderedBasis> = None;
    for step in 0u64.. {
        let k = head_size(n, c);
        if k as f64 > SWEEP_MAX_K_FRACTION * n as f64 {
            break;
        }
        if k == 0 {
            c *= 2.0;
            continue;
        }
        let m = k * config.m_factor;
        if basis.as_ref().is_none_or(|b| b.len() < m) {
            basis = Some(ordered_basis(params, m)?);
        }
        let basis_ref = basis.as_ref().expect("basis was just built");
        let density = DensityParams::new(basis_ref, k, m)?;
        let successes = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(config.seed, &[SWEEP_STREAM, n as u64, step, t as u64]);
                let pts = sample_points(&density, n, seed)?;
                let g = design_matrix(&pts, basis_ref, k)?;
                let pinv = PseudoInverse::new(&g)?;
                Ok(usize::from(pinv.s_min() >= half_root_n))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum::<usize>();
        let success = successes as f64 / config.trials as f64;
        steps.push(ThresholdStep {
            c_head: c,
            k,
            claim2_success: success,
        });
        if success < 0.5 {
            return Ok(ThresholdSweep {
                n,
                steps,
                threshold: Some(c),
            });
        }
        c *= 2.0;
    }
    Ok(ThresholdSweep {
        n,
        steps,
        threshold: None,
    })
}

impl fmt::Display for ClaimsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "claims: s_min(G) >= sqrt(n)/2 and s_max(Gamma) <= {CLAIM1_FACTOR} gamma_k sqrt(n)"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "  n = {:>6}  k = {:>5}  m = {:>6}  trials = {}  degenerate = {}",
                r.n, r.k, r.m, r.trials, r.degenerate
            )?;
            writeln!(
                f,
                "    s_min success {:.3}  (median s_min/sqrt(n) = {:.4})",
                r.claim2_success,
                r.s_min_median / (r.n as f64).sqrt()
            )?;
            writeln!(
                f,
                "    s_max(Gamma)/(gamma_k sqrt(n)): median {:.4}  range [{:.4}, {:.4}]  success {:.3}",
                r.claim1_median, r.claim1_min, r.claim1_max, r.claim1_success
            )?;
            writeln!(
                f,
                "    max e_trunc/(a_k + s_max/s_min) = {:.6}",
                r.eq1_ratio_max
            )?;
        }
        for s in &self.sweeps {
            write!(f, "  c_head sweep at n = {}:", s.n)?;
            for step in &s.steps {
                write!(
                    f,
                    " c={}(k={}):{:.2}",
                    step.c_head, step.k, step.claim2_success
                )?;
            }
            match s.threshold {
                Some(c) => writeln!(f, "  -> success drops below 1/2 at c = {c}")?,
                None => writeln!(f, "  -> no drop before k > n/2")?,
            }
        }
        Ok(())
    }
}
