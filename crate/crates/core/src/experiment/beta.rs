//! `β_k / a_k` and `γ_k / β_{⌊k/2⌋}` over a grid of head sizes.

use std::fmt;

use super::config::ExperimentConfig;
use super::output::{real, CsvRow};
use super::Workspace;
use crate::error::{Error, Result};
use crate::spectral::SpectrumSummary;

#[derive(Debug, Clone, PartialEq)]
pub struct BetaRow {
    pub k: usize,
    pub a_k: f64,
    pub beta_k: f64,
    pub gamma_k: f64,
    /// `β_k / a_k`.
    pub ratio: f64,
    pub beta_half: f64,
    /// `γ_k / β_{⌊k/2⌋}`, zero when `⌊k/2⌋ = 0`.
    pub gamma_over_beta_half: f64,
}

impl CsvRow for BetaRow {
    const HEADER: &'static [&'static str] = &[
        "k",
        "a_k",
        "beta_k",
        "gamma_k",
        "beta_over_a",
        "beta_half",
        "gamma_over_beta_half",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            real(self.a_k),
            real(self.beta_k),
            real(self.gamma_k),
            real(self.ratio),
            real(self.beta_half),
            real(self.gamma_over_beta_half),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaReport {
    pub rows: Vec<BetaRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub max_gamma_over_beta_half: f64,
}

/// Reads `n_grid` as the grid of head sizes `k`.
pub fn run_beta_lemma(config: &ExperimentConfig) -> Result<BetaReport> {
    config.validate_common()?;
    if config.n_grid.contains(&0) {
        return Err(Error::Config(
            "head sizes in n_grid must be at least 1".into(),
        ));
    }
    let max_k = *config.n_grid.iter().max().expect("grid is non-empty");
    let ws = Workspace::new(config, max_k + 1)?;
    beta_table(&ws.summary, &config.n_grid)
}

/// The table for an arbitrary summary, including synthetic sequences.
pub fn beta_table(summary: &SpectrumSummary, ks: &[usize]) -> Result<BetaReport> {
    let rows = ks
        .iter()
        .map(|&k| {
            let (beta_k, gamma_k) = summary.beta_gamma(k)?;
            let a_k = summary.approx_number(k)?;
            let beta_half = summary.beta(k / 2)?;
            Ok(BetaRow {
                k,
                a_k,
                beta_k,
                gamma_k,
                ratio: beta_k / a_k,
                beta_half,
                gamma_over_beta_half: gamma_k / beta_half,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios = rows.iter().map(|r| r.ratio);
    Ok(BetaReport {
        min_ratio: ratios.clone().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.fold(f64::NEG_INFINITY, f64::max),
        max_gamma_over_beta_half: rows
            .iter()
            .map(|r| r.gamma_over_beta_half)
            .fold(f64::NEG_INFINITY, f64::max),
        rows,
    })
}

impl fmt::Display for BetaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "beta: tail statistics against approximation numbers")?;
        writeln!(
            f,
            "  {:>7} {:>12} {:>12} {:>10} {:>12}",
            "k", "a_k", "beta_k", "beta/a", "gamma/beta_h"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "  {:>7} {:>12.5e} {:>12.5e} {:>10.5} {:>12.5}",
                r.k, r.a_k, r.beta_k, r.ratio, r.gamma_over_beta_half
            )?;
        }
        writeln!(
            f,
            "  beta_k/a_k in [{:.5}, {:.5}]; max gamma_k/beta_(k/2) = {:.5}",
            self.min_ratio, self.max_ratio, self.max_gamma_over_beta_half
        )
    }
}
