//! Worst-case error against `n`, with the log–log slope over the grid.

use std::fmt;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::output::{real, CsvRow};
use super::{derive_seed, draw, median, Workspace};
use crate::analysis::ErrorReport;
use crate::error::{Error, Result};

const RATES_STREAM: u64 = 3;

/// Medians over the non-degenerate trials at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatesRow {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub a_k: f64,
    pub beta_k: f64,
    pub gamma_k: f64,
    pub s_min_g: f64,
    pub s_max_gamma: f64,
    pub e_trunc: f64,
    pub e_upper: f64,
    /// `e_trunc / (a_k + s_max(Γ)/s_min(G))`.
    pub ratio1: f64,
    /// `e_trunc² k / tail(k)`.
    pub ratio2: f64,
    pub degenerate: usize,
}

impl CsvRow for RatesRow {
    const HEADER: &'static [&'static str] = &[
        "n",
        "k",
        "m",
        "a_k",
        "beta_k",
        "gamma_k",
        "s_min_G",
        "s_max_Gamma",
        "e_trunc",
        "e_upper",
        "ratio1",
        "ratio2",
        "degenerate",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.k.to_string(),
            self.m.to_string(),
            real(self.a_k),
            real(self.beta_k),
            real(self.gamma_k),
            real(self.s_min_g),
            real(self.s_max_gamma),
            real(self.e_trunc),
            real(self.e_upper),
            real(self.ratio1),
            real(self.ratio2),
            self.degenerate.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatesReport {
    pub rows: Vec<RatesRow>,
    pub trials: usize,
    /// Least-squares slope of `ln e_trunc` against `ln n` over rows with a median.
    pub slope: Option<f64>,
    pub reference_slope: f64,
    /// Largest per-trial `e_trunc / (a_k + s_max(Γ)/s_min(G))`.
    pub max_ratio1: f64,
    /// Largest per-trial `e_trunc² k / tail(k)`.
    pub max_ratio2: f64,
    pub degenerate: usize,
}

pub fn run_rates(config: &ExperimentConfig) -> Result<RatesReport> {
    config.validate()?;
    let ws = Workspace::new(config, config.max_m()? + 1)?;
    let mut rows = Vec::with_capacity(config.n_grid.len());
    let mut max_ratio1 = f64::NAN;
    let mut max_ratio2 = f64::NAN;
    for &n in &config.n_grid {
        let (k, m) = config.sizes(n)?;
        let reports: Vec<Option<ErrorReport>> = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(config.seed, &[RATES_STREAM, n as u64, t as u64]);
                let inst = draw(&ws.basis, n, k, m, seed)?;
                if !inst.pinv.rank_ok() {
                    return Ok(None);
                }
                let report = ErrorReport::compute(
                    &ws.basis,
                    &ws.summary,
                    &inst.pts,
                    &inst.info,
                    &inst.pinv,
                    1.0,
                )?;
                report.validate().map_err(|e| match e {
                    Error::Invariant(msg) => Error::Invariant(format!("n = {n}, trial {t}: {msg}")),
                    other => other,
                })?;
                Ok(Some(report))
            })
            .collect::<Result<_>>()?;
        let good: Vec<&ErrorReport> = reports.iter().flatten().collect();
        let med =
            |f: fn(&ErrorReport) -> f64| median(&good.iter().map(|r| f(r)).collect::<Vec<_>>());
        for r in &good {
            max_ratio1 = max_ratio1.max(r.eq1_ratio());
            max_ratio2 = max_ratio2.max(r.theorem_ratio());
        }
        let (beta_k, gamma_k) = ws.summary.beta_gamma(k)?;
        rows.push(RatesRow {
            n,
            k,
            m,
            a_k: ws.summary.approx_number(k)?,
            beta_k,
            gamma_k,
            s_min_g: med(|r| r.s_min_g),
            s_max_gamma: med(|r| r.s_max_gamma),
            e_trunc: med(|r| r.e_trunc),
            e_upper: med(|r| r.e_upper),
            ratio1: med(ErrorReport::eq1_ratio),
            ratio2: med(ErrorReport::theorem_ratio),
            degenerate: reports.len() - good.len(),
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.e_trunc.is_finite() && r.e_trunc > 0.0)
        .map(|r| ((r.n as f64).ln(), r.e_trunc.ln()))
        .collect();
    Ok(RatesReport {
        trials: config.trials,
        slope: loglog_slope(&points),
        reference_slope: -config.s,
        max_ratio1,
        max_ratio2,
        degenerate: rows.iter().map(|r| r.degenerate).sum(),
        rows,
    })
}

/// Ordinary least-squares slope; `None` with fewer than two distinct abscissae.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let len = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / len;
    let my = points.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl fmt::Display for RatesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rates: median over {} trial(s) per n", self.trials)?;
        writeln!(
            f,
            "  {:>6} {:>5} {:>6} {:>12} {:>12} {:>12} {:>10} {:>10}",
            "n", "k", "m", "a_k", "e_trunc", "e_upper", "ratio1", "ratio2"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "  {:>6} {:>5} {:>6} {:>12.5e} {:>12.5e} {:>12.5e} {:>10.6} {:>10.4}",
                r.n, r.k, r.m, r.a_k, r.e_trunc, r.e_upper, r.ratio1, r.ratio2
            )?;
        }
        match self.slope {
            Some(slope) => writeln!(
                f,
                "  log-log slope of e_trunc: {slope:.4} (reference {:.4})",
                self.reference_slope
            )?,
            None => writeln!(f, "  log-log slope: not enough rows")?,
        }
        writeln!(
            f,
            "  max e_trunc/(a_k + s_max/s_min) = {:.12}",
            self.max_ratio1
        )?;
        writeln!(f, "  max e_trunc^2 k / tail(k) = {:.4}", self.max_ratio2)?;
        writeln!(f, "  degenerate draws: {}", self.degenerate)
    }
}
