//! Worst-case errors of the fitted recovery map and certified upper bounds.
//!
//! On `V_m` the map `f ↦ f − A_n f` acts on coefficient vectors as
//! `E = I − [G⁺B; 0]`, and the H-unit ball is the ellipsoid `f = diag(σ) u`,
//! `‖u‖₂ ≤ 1`. The truncated worst-case error is therefore the spectral norm
//! of `E·diag(σ)`. Mass beyond `m` is added back through the pointwise bound
//! `b(x)² ≤ 2^d` and the exact tail sum.

use faer::Mat;

use crate::error::{Error, Result};
use crate::lstsq::{singular_extrema, InfoMatrices, PseudoInverse};
use crate::sampler::PointSet;
use crate::spectral::{CoefVector, OrderedBasis, SpectrumSummary};

/// Absolute slack allowed when checking `e_trunc ≤ a_k + s_max(Γ)/s_min(G)`.
pub const EQ1_SLACK: f64 = 1e-10;

/// The coefficient-space matrix `E·diag(σ_1, …, σ_m)` of `id − A_n` on `V_m`.
pub fn error_operator(
    info: &InfoMatrices,
    pinv: &PseudoInverse,
    basis: &OrderedBasis,
) -> Result<Mat<f64>> {
    let (k, m) = (info.k(), info.m());
    if pinv.nrows() != k || pinv.ncols() != info.n() {
        return Err(Error::Argument(format!(
            "pseudo-inverse is {}×{}, expected {k}×{}",
            pinv.nrows(),
            pinv.ncols(),
            info.n()
        )));
    }
    if basis.len() < m {
        return Err(Error::Argument(format!(
            "basis has {} functions, need {m}",
            basis.len()
        )));
    }
    let recovered = pinv.apply_matrix(info.b());
    let sigma = basis.sigma();
    Ok(Mat::from_fn(m, m, |i, j| {
        let identity = if i == j { 1.0 } else { 0.0 };
        let fitted = if i < k { recovered[(i, j)] } else { 0.0 };
        (identity - fitted) * sigma[j]
    }))
}

/// `sup { ‖f − A_n f‖_{L_2} : f ∈ V_m, ‖f‖_H ≤ 1 }`, computed exactly by SVD.
pub fn worst_case_error_trunc(
    info: &InfoMatrices,
    pinv: &PseudoInverse,
    basis: &OrderedBasis,
) -> Result<f64> {
    if !pinv.rank_ok() {
        return Err(Error::Degenerate {
            s_min: pinv.s_min(),
            tolerance: crate::lstsq::RANK_TOLERANCE * pinv.s_max(),
        });
    }
    let op = error_operator(info, pinv, basis)?;
    Ok(singular_extrema(&op)?.1)
}

/// `‖G⁺‖ · sup_{g ⊥ V_m, ‖g‖_H ≤ 1} ‖N g‖₂ ≤ (Σ_i ϱ(x_i)^{-1} · 2^d · tail(m))^{1/2} / s_min(G)`.
pub fn tail_addend(pts: &PointSet, s_min_g: f64, tail_m: f64) -> f64 {
    let inverse_density_sum: f64 = pts.densities().iter().map(|r| r.recip()).sum();
    let pointwise = 2f64.powi(pts.d() as i32);
    (inverse_density_sum * pointwise * tail_m.max(0.0)).sqrt() / s_min_g
}

/// `e(A_n) ≤ e_trunc + a_m + tail addend`.
pub fn certified_upper_bound(
    e_trunc: f64,
    summary: &SpectrumSummary,
    pts: &PointSet,
    pinv: &PseudoInverse,
    m: usize,
) -> Result<f64> {
    if !pinv.rank_ok() {
        return Err(Error::Degenerate {
            s_min: pinv.s_min(),
            tolerance: crate::lstsq::RANK_TOLERANCE * pinv.s_max(),
        });
    }
    let a_m = summary.approx_number(m)?;
    let tail_m = summary.tail_enclosure(m)?.hi;
    Ok(e_trunc + a_m + tail_addend(pts, pinv.s_min(), tail_m))
}

/// Smallest `m ≥ start` whose tail addend falls below `fraction · e_trunc`.
///
/// `tail` must return an upper bound on `Σ_{j≥m} a_j²` for any `m`; the addend
/// is monotone in `m`, so doubling brackets the threshold and bisection pins it.
pub fn tail_addend_threshold<F>(
    pts: &PointSet,
    s_min_g: f64,
    target: f64,
    start: u64,
    tail: F,
) -> Result<u64>
where
    F: Fn(u64) -> Result<f64>,
{
    let below = |m: u64| -> Result<bool> { Ok(tail_addend(pts, s_min_g, tail(m)?) < target) };
    let mut lo = start.max(1);
    if below(lo)? {
        return Ok(lo);
    }
    let mut hi = lo;
    loop {
        if hi > 1 << 50 {
            return Err(Error::Resource(format!(
                "tail addend stays above {target:e} up to m = {hi}"
            )));
        }
        hi *= 2;
        if below(hi)? {
            break;
        }
        lo = hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `‖f − fitted‖_{L_2}` by Parseval.
pub fn empirical_error(fitted: &CoefVector<'_>, f: &CoefVector<'_>) -> Result<f64> {
    if !std::ptr::eq(fitted.basis(), f.basis()) && fitted.basis() != f.basis() {
        return Err(Error::Argument(
            "functions are expanded in different bases".into(),
        ));
    }
    let len = fitted.len().max(f.len());
    Ok((1..=len)
        .map(|j| (f.coef(j) - fitted.coef(j)).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Error quantities for one drawn instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub k: usize,
    pub m: usize,
    pub e_trunc: f64,
    pub e_upper: f64,
    pub a_k: f64,
    pub beta_k: f64,
    pub gamma_k: f64,
    /// `(C_report · tail(k) / k)^{1/2}`.
    pub theorem_rhs: f64,
    pub c_report: f64,
    pub s_min_g: f64,
    pub s_max_gamma: f64,
    pub tail_k: f64,
}

impl ErrorReport {
    /// Builds the report; fails with [`Error::Degenerate`] when `G` is rank deficient.
    pub fn compute(
        basis: &OrderedBasis,
        summary: &SpectrumSummary,
        pts: &PointSet,
        info: &InfoMatrices,
        pinv: &PseudoInverse,
        c_report: f64,
    ) -> Result<Self> {
        let (k, m) = (info.k(), info.m());
        let e_trunc = worst_case_error_trunc(info, pinv, basis)?;
        let e_upper = certified_upper_bound(e_trunc, summary, pts, pinv, m)?;
        let (beta_k, gamma_k) = summary.beta_gamma(k)?;
        let tail_k = summary.tail(k)?;
        let (_, s_max_gamma) = singular_extrema(info.gamma())?;
        Ok(Self {
            k,
            m,
            e_trunc,
            e_upper,
            a_k: summary.approx_number(k)?,
            beta_k,
            gamma_k,
            theorem_rhs: (c_report * tail_k / k as f64).sqrt(),
            c_report,
            s_min_g: pinv.s_min(),
            s_max_gamma,
            tail_k,
        })
    }

    /// `a_k + s_max(Γ) / s_min(G)`.
    pub fn eq1_rhs(&self) -> f64 {
        self.a_k + self.s_max_gamma / self.s_min_g
    }

    /// `e_trunc / (a_k + s_max(Γ)/s_min(G))`.
    pub fn eq1_ratio(&self) -> f64 {
        self.e_trunc / self.eq1_rhs()
    }

    /// `e_trunc² · k / tail(k)`.
    pub fn theorem_ratio(&self) -> f64 {
        self.e_trunc.powi(2) * self.k as f64 / self.tail_k
    }

    pub fn eq1_holds(&self) -> bool {
        self.e_trunc <= self.eq1_rhs() + EQ1_SLACK
    }

    /// Checks the invariants every emitted row must satisfy.
    pub fn validate(&self) -> Result<()> {
        if !self.eq1_holds() {
            return Err(Error::Invariant(format!(
                "e_trunc = {:e} exceeds a_k + s_max(Γ)/s_min(G) = {:e} (k = {}, m = {})",
                self.e_trunc,
                self.eq1_rhs(),
                self.k,
                self.m
            )));
        }
        if self.e_trunc > self.e_upper {
            return Err(Error::Invariant(format!(
                "e_trunc = {:e} exceeds the certified bound {:e}",
                self.e_trunc, self.e_upper
            )));
        }
        if self.gamma_k < self.a_k {
            return Err(Error::Invariant(format!(
                "γ_k = {:e} below a_k = {:e}",
                self.gamma_k, self.a_k
            )));
        }
        Ok(())
    }
}
