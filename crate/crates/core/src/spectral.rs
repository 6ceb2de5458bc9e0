//! Spectral model of the Sobolev space of dominating mixed smoothness on the
//! torus `[0,1)^d`.
//!
//! The space is diagonal in the real tensor trigonometric basis
//! `b_k = b_{k_1} ⊗ … ⊗ b_{k_d}` with one-dimensional factors
//!
//! ```text
//! b_0 = 1,   b_{2m} = √2 cos(2πmx),   b_{2m-1} = √2 sin(2πmx)
//! ```
//!
//! and squared norm `‖f‖²_H = Σ_k w_k ⟨f, b_k⟩²` with weights
//! `w_k = Π_j (1 + m_j^{2s})`, where `m_j = ⌈k_j / 2⌉` is the frequency of the
//! flat index `k_j`. Sorting the basis by weight gives the singular values of
//! the embedding into `L_2`: `a_n = w_{n+1}^{-1/2}`.

use std::cmp::Ordering;
use std::f64::consts::{PI, SQRT_2};
use std::ops::RangeInclusive;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Maximum number of multi-indices held during hyperbolic-cross enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 10_000_000;

/// Absolute width requested for the one-dimensional series enclosure.
pub const DEFAULT_SERIES_TOLERANCE: f64 = 1e-13;

const MAX_SERIES_TERMS: u64 = 100_000_000;

/// Dimension and smoothness of `H^s_mix(T^d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceParams {
    d: usize,
    s: f64,
}

impl SpaceParams {
    pub fn new(d: usize, s: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Argument("dimension d must be at least 1".into()));
        }
        if !s.is_finite() || s <= 0.5 {
            return Err(Error::Argument(format!(
                "smoothness s must be a finite number above 1/2, got {s}"
            )));
        }
        Ok(Self { d, s })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Frequency of a flat one-dimensional index: `0, 1, 1, 2, 2, 3, …`.
#[inline]
pub fn frequency(k: u32) -> u32 {
    k.div_ceil(2)
}

/// A tuple of flat one-dimensional indices identifying one tensor basis function.
///
/// The derived ordering is lexicographic on the flat indices and is used to
/// break ties between equal weights.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(flat: Vec<u32>) -> Self {
        Self(flat)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn flat(&self) -> &[u32] {
        &self.0
    }

    pub fn frequencies(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|&k| frequency(k))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }
}

impl From<&[u32]> for MultiIndex {
    fn from(flat: &[u32]) -> Self {
        Self(flat.to_vec())
    }
}

/// Evaluates the one-dimensional factor `b_k(x)`.
#[inline]
pub fn basis_eval_1d(k: u32, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    // reduce the phase before scaling by 2π
    let phase = (frequency(k) as f64 * x).fract();
    let arg = 2.0 * PI * phase;
    if k.is_multiple_of(2) {
        SQRT_2 * arg.cos()
    } else {
        SQRT_2 * arg.sin()
    }
}

pub(crate) fn check_point(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::Domain(format!(
            "point has {} coordinates, expected {d}",
            x.len()
        )));
    }
    if let Some(bad) = x.iter().find(|&&xi| !(0.0..1.0).contains(&xi)) {
        return Err(Error::Domain(format!(
            "coordinate {bad} lies outside [0, 1)"
        )));
    }
    Ok(())
}

/// Evaluates the tensor basis function `b_idx` at `x ∈ [0,1)^d`.
pub fn basis_eval(idx: &MultiIndex, x: &[f64]) -> Result<f64> {
    check_point(x, idx.dim())?;
    Ok(idx
        .flat()
        .iter()
        .zip(x)
        .map(|(&k, &xi)| basis_eval_1d(k, xi))
        .product())
}

#[inline]
fn frequency_factor(f: u32, s: f64) -> f64 {
    if f == 0 {
        1.0
    } else {
        1.0 + (f as f64).powf(2.0 * s)
    }
}

/// Squared H-norm of `b_idx`: `Π_j (1 + m_j^{2s})` over the coordinate frequencies.
///
/// Factors are multiplied in ascending frequency order so permuted indices get
/// bit-identical weights.
pub fn hnorm_weight(idx: &MultiIndex, params: &SpaceParams) -> f64 {
    let mut freqs: Vec<u32> = idx.frequencies().collect();
    freqs.sort_unstable();
    freqs
        .into_iter()
        .map(|f| frequency_factor(f, params.s))
        .product()
}

/// The first `m` basis functions in order of nondecreasing H-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedBasis {
    params: SpaceParams,
    indices: Vec<MultiIndex>,
    weights: Vec<f64>,
    sigma: Vec<f64>,
}

impl OrderedBasis {
    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `σ_1, …, σ_m` stored zero-based, so `sigma()[n]` is `a_n`.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Approximation number `a_n = ‖b_{n+1}‖_H^{-1}`.
    pub fn approx_number(&self, n: usize) -> f64 {
        self.sigma[n]
    }

    /// Largest flat index per coordinate among the first `count` entries.
    pub fn max_flat(&self, count: usize) -> Vec<u32> {
        let mut out = vec![0; self.params.d];
        for idx in &self.indices[..count.min(self.len())] {
            for (o, &k) in out.iter_mut().zip(idx.flat()) {
                *o = (*o).max(k);
            }
        }
        out
    }

    /// Largest coordinate frequency among the first `count` entries.
    pub fn max_frequency(&self, count: usize) -> u32 {
        self.max_flat(count)
            .into_iter()
            .map(frequency)
            .max()
            .unwrap_or(0)
    }
}

/// Enumerates the `m` smallest-weight multi-indices with the default memory cap.
pub fn ordered_basis(params: SpaceParams, m: usize) -> Result<OrderedBasis> {
    ordered_basis_with_cap(params, m, DEFAULT_ENUMERATION_CAP)
}

/// Enumerates the `m` smallest-weight multi-indices.
///
/// All indices with weight at most `T` are collected by recursive descent over
/// the coordinates, doubling `T` until at least `m` are found; the result is
/// sorted by `(weight, flat index tuple)` and truncated.
pub fn ordered_basis_with_cap(params: SpaceParams, m: usize, cap: usize) -> Result<OrderedBasis> {
    if m == 0 {
        return Err(Error::Argument("basis size m must be at least 1".into()));
    }
    if m > cap {
        return Err(Error::Resource(format!(
            "requested {m} basis functions, enumeration cap is {cap}"
        )));
    }
    let mut threshold = 1.0_f64;
    let mut entries = loop {
        let entries = hyperbolic_cross(&params, threshold, cap)?;
        if entries.len() >= m {
            break entries;
        }
        threshold *= 2.0;
    };
    entries.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.1.cmp(&b.1))
    });
    entries.truncate(m);
    let (weights, indices): (Vec<f64>, Vec<MultiIndex>) = entries.into_iter().unzip();
    let sigma = weights.iter().map(|w| w.sqrt().recip()).collect();
    Ok(OrderedBasis {
        params,
        indices,
        weights,
        sigma,
    })
}

/// All `(weight, index)` pairs with weight `≤ threshold`.
fn hyperbolic_cross(
    params: &SpaceParams,
    threshold: f64,
    cap: usize,
) -> Result<Vec<(f64, MultiIndex)>> {
    // the running product may differ from the canonical weight by rounding
    let slack = threshold * (1.0 + 1e-9);
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(params.d);
    descend(params, 1.0, slack, cap, &mut current, &mut out)?;
    Ok(out
        .into_iter()
        .filter_map(|idx| {
            let w = hnorm_weight(&idx, params);
            (w <= threshold).then_some((w, idx))
        })
        .collect())
}

fn descend(
    params: &SpaceParams,
    partial: f64,
    bound: f64,
    cap: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<MultiIndex>,
) -> Result<()> {
    if current.len() == params.d {
        if out.len() >= cap {
            return Err(Error::Resource(format!(
                "hyperbolic-cross enumeration exceeded the cap of {cap} indices"
            )));
        }
        out.push(MultiIndex(current.clone()));
        return Ok(());
    }
    let mut f = 0u32;
    loop {
        let w = partial * frequency_factor(f, params.s);
        if w > bound {
            break;
        }
        let flats: &[u32] = if f == 0 { &[0] } else { &[2 * f - 1, 2 * f] };
        for &k in flats {
            current.push(k);
            descend(params, w, bound, cap, current, out)?;
            current.pop();
        }
        f += 1;
    }
    Ok(())
}

/// A closed interval `[lo, hi]` certified to contain a real quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

impl Enclosure {
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Neumaier-compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `∫_a^∞ x^{-q} dx` for `q > 1`.
fn power_tail_integral(a: f64, q: f64) -> f64 {
    a.powf(1.0 - q) / (q - 1.0)
}

/// Bracket for `Σ_{f > cutoff} (1 + f^{2s})^{-1}`.
///
/// The summand is convex on `[1, ∞)`, so the sum lies between the trapezoid
/// and midpoint integrals; `1/(1 + x^{2s})` is bracketed by truncations of its
/// alternating expansion in `x^{-2s}`.
fn series_remainder(s: f64, cutoff: u64) -> Enclosure {
    let q = 2.0 * s;
    let upper_from = cutoff as f64 + 0.5;
    let lower_from = cutoff as f64 + 1.0;
    let hi = power_tail_integral(upper_from, q) - power_tail_integral(upper_from, 2.0 * q)
        + power_tail_integral(upper_from, 3.0 * q);
    let lo = power_tail_integral(lower_from, q) - power_tail_integral(lower_from, 2.0 * q)
        + power_tail_integral(lower_from, 3.0 * q)
        - power_tail_integral(lower_from, 4.0 * q)
        + 0.5 * frequency_factor(cutoff as u32 + 1, s).recip();
    Enclosure { lo, hi }
}

/// Certified enclosure of `Σ_{f ≥ start} (1 + f^{2s})^{-1}` with width at most `tol`.
pub fn frequency_series(s: f64, start: u64, tol: f64) -> Result<Enclosure> {
    if s <= 0.5 {
        return Err(Error::Argument(format!("series diverges for s = {s}")));
    }
    let start = start.max(1);
    let mut cutoff = (start - 1).max(32);
    let mut remainder = series_remainder(s, cutoff);
    while remainder.width() > tol {
        cutoff *= 2;
        if cutoff > MAX_SERIES_TERMS {
            return Err(Error::Precision(format!(
                "series remainder width {:e} exceeds tolerance {tol:e} after {MAX_SERIES_TERMS} terms",
                remainder.width()
            )));
        }
        remainder = series_remainder(s, cutoff);
    }
    // smallest terms first
    let mut acc = CompensatedSum::default();
    for f in (start..=cutoff).rev() {
        acc.add(frequency_factor(f as u32, s).recip());
    }
    let partial = acc.value();
    let rounding = 16.0 * f64::EPSILON * (partial + remainder.hi);
    let enclosure = Enclosure {
        lo: partial + remainder.lo - rounding,
        hi: partial + remainder.hi + rounding,
    };
    if enclosure.width() > tol.max(4.0 * rounding) {
        return Err(Error::Precision(format!(
            "series enclosure width {:e} exceeds tolerance {tol:e}",
            enclosure.width()
        )));
    }
    Ok(enclosure)
}

/// `Σ_{t ≥ k} a_t²` for `d = 1`, where the ordered basis is the flat index order.
///
/// Valid for any `k`, including far beyond an enumerated basis.
pub fn flat_tail_1d(s: f64, k: u64, tol: f64) -> Result<Enclosure> {
    if k == 0 {
        let series = frequency_series(s, 1, tol / 2.0)?;
        return Ok(Enclosure {
            lo: 1.0 + 2.0 * series.lo,
            hi: 1.0 + 2.0 * series.hi,
        });
    }
    let fk = k.div_ceil(2);
    if k % 2 == 1 {
        // both the sine and cosine of frequency fk remain
        let series = frequency_series(s, fk, tol / 2.0)?;
        Ok(Enclosure {
            lo: 2.0 * series.lo,
            hi: 2.0 * series.hi,
        })
    } else {
        let series = frequency_series(s, fk + 1, tol / 2.0)?;
        let single = frequency_factor(fk as u32, s).recip();
        Ok(Enclosure {
            lo: single + 2.0 * series.lo,
            hi: single + 2.0 * series.hi,
        })
    }
}

/// Head and tail sums of the squared approximation numbers.
#[derive(Debug, Clone)]
pub struct SpectrumSummary {
    total: Enclosure,
    a: Vec<f64>,
    head: Vec<f64>,
}

impl SpectrumSummary {
    /// Builds a summary from an explicit sequence `a_0, a_1, …` and the exact
    /// value of `Σ_j a_j²` over the full (possibly longer) sequence.
    pub fn from_sequence(a: Vec<f64>, total: f64) -> Result<Self> {
        Self::with_total(a, Enclosure::point(total))
    }

    fn with_total(a: Vec<f64>, total: Enclosure) -> Result<Self> {
        let mut head = Vec::with_capacity(a.len() + 1);
        let mut acc = CompensatedSum::default();
        head.push(0.0);
        for &aj in &a {
            acc.add(aj * aj);
            head.push(acc.value());
        }
        let full = head[a.len()];
        if full > total.hi * (1.0 + 1e-12) {
            return Err(Error::Argument(format!(
                "head sum {full} exceeds the total {}",
                total.hi
            )));
        }
        Ok(Self { total, a, head })
    }

    /// Enclosure of `Σ_{j≥0} a_j²` over the infinite sequence.
    pub fn total(&self) -> Enclosure {
        self.total
    }

    /// Number of approximation numbers held explicitly.
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn approx_number(&self, j: usize) -> Result<f64> {
        self.a.get(j).copied().ok_or_else(|| {
            Error::Argument(format!(
                "a_{j} requested but only {} values are known",
                self.a.len()
            ))
        })
    }

    /// `Σ_{j<k} a_j²`.
    pub fn head(&self, k: usize) -> Result<f64> {
        self.head.get(k).copied().ok_or_else(|| {
            Error::Argument(format!(
                "head sum of length {k} requested, at most {} available",
                self.a.len()
            ))
        })
    }

    /// `Σ_{j≥k} a_j² = total − head(k)`.
    pub fn tail(&self, k: usize) -> Result<f64> {
        Ok(self.total.mid() - self.head(k)?)
    }

    pub fn tail_enclosure(&self, k: usize) -> Result<Enclosure> {
        let head = self.head(k)?;
        let rounding = 4.0 * f64::EPSILON * self.total.hi;
        Ok(Enclosure {
            lo: self.total.lo - head - rounding,
            hi: self.total.hi - head + rounding,
        })
    }

    /// `β_k = (tail(k) / k)^{1/2}`, infinite for `k = 0`.
    pub fn beta(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(f64::INFINITY);
        }
        Ok((self.tail(k)? / k as f64).sqrt())
    }

    /// `(β_k, γ_k)` with `γ_k = max(a_k, β_k)`.
    pub fn beta_gamma(&self, k: usize) -> Result<(f64, f64)> {
        if k == 0 || k >= self.a.len() {
            return Err(Error::Argument(format!(
                "k = {k} outside [1, {})",
                self.a.len()
            )));
        }
        let beta = self.beta(k)?;
        Ok((beta, beta.max(self.a[k])))
    }
}

/// Exact spectral sums for the ordered basis, with the default series tolerance.
pub fn spectral_sums(params: &SpaceParams, basis: &OrderedBasis) -> Result<SpectrumSummary> {
    spectral_sums_with_tolerance(params, basis, DEFAULT_SERIES_TOLERANCE)
}

/// `total = (1 + 2 S_1)^d` with `S_1 = Σ_{m≥1} (1 + m^{2s})^{-1}` enclosed to
/// absolute width `tol`, and head sums read off the ordered basis.
pub fn spectral_sums_with_tolerance(
    params: &SpaceParams,
    basis: &OrderedBasis,
    tol: f64,
) -> Result<SpectrumSummary> {
    if basis.params() != params {
        return Err(Error::Argument(
            "basis was built for different space parameters".into(),
        ));
    }
    let series = frequency_series(params.s, 1, tol)?;
    let d = params.d as i32;
    let total = Enclosure {
        lo: (1.0 + 2.0 * series.lo).powi(d),
        hi: (1.0 + 2.0 * series.hi).powi(d),
    };
    SpectrumSummary::with_total(basis.sigma().to_vec(), total)
}

/// A function in `V_m` given by its `L_2` coefficients against an ordered basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefVector<'a> {
    basis: &'a OrderedBasis,
    c: Vec<f64>,
}

impl<'a> CoefVector<'a> {
    pub fn new(basis: &'a OrderedBasis, c: Vec<f64>) -> Result<Self> {
        if c.len() > basis.len() {
            return Err(Error::Argument(format!(
                "{} coefficients given for a basis of size {}",
                c.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, c })
    }

    pub fn zeros(basis: &'a OrderedBasis, len: usize) -> Result<Self> {
        Self::new(basis, vec![0.0; len])
    }

    /// The basis function `b_j`, one-based.
    pub fn unit(basis: &'a OrderedBasis, j: usize) -> Result<Self> {
        if j == 0 || j > basis.len() {
            return Err(Error::Argument(format!(
                "basis function b_{j} outside 1..={}",
                basis.len()
            )));
        }
        let mut c = vec![0.0; j];
        c[j - 1] = 1.0;
        Ok(Self { basis, c })
    }

    pub fn basis(&self) -> &'a OrderedBasis {
        self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.c
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Coefficient `f_j`, one-based, zero beyond the stored length.
    pub fn coef(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.c.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn h_norm(&self) -> f64 {
        self.c
            .iter()
            .zip(self.basis.weights())
            .map(|(x, w)| w * x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.basis.params().d())?;
        Ok(self
            .c
            .iter()
            .zip(self.basis.indices())
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, idx)| {
                c * idx
                    .flat()
                    .iter()
                    .zip(x)
                    .map(|(&k, &xi)| basis_eval_1d(k, xi))
                    .product::<f64>()
            })
            .sum())
    }

    /// Scales every coefficient by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            basis: self.basis,
            c: self.c.iter().map(|x| x * factor).collect(),
        }
    }
}

/// `L_2`-orthogonal projection onto `V_k = span{b_1, …, b_k}`.
pub fn project<'a>(f: &CoefVector<'a>, k: usize) -> CoefVector<'a> {
    let c =
        f.c.iter()
            .enumerate()
            .map(|(j, &x)| if j < k { x } else { 0.0 })
            .collect();
    CoefVector { basis: f.basis, c }
}

/// Random function with `‖f‖_H = 1` supported on the one-based index range.
///
/// Coefficients are Gaussian in the H-orthonormal frame `u_j = c_j √w_j`,
/// normalised, then mapped back with `c_j = σ_j u_j`.
pub fn random_unit_function(
    basis: &OrderedBasis,
    support: RangeInclusive<usize>,
    seed: u64,
) -> Result<CoefVector<'_>> {
    let (first, last) = (*support.start(), *support.end());
    if support.is_empty() || first == 0 || last > basis.len() {
        return Err(Error::Argument(format!(
            "support {first}..={last} is empty or outside 1..={}",
            basis.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<f64> = (first..=last)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        u[0] = 1.0;
        norm = 1.0;
    }
    let mut c = vec![0.0; last];
    for (j, uj) in (first..=last).zip(u) {
        c[j - 1] = basis.sigma()[j - 1] * uj / norm;
    }
    Ok(CoefVector { basis, c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(d: usize, s: f64) -> SpaceParams {
        SpaceParams::new(d, s).unwrap()
    }

    /// All flat indices with every coordinate `≤ cutoff`, sorted by the
    /// canonical key. Independent of the recursive enumeration.
    fn brute_force(p: &SpaceParams, cutoff: u32) -> Vec<(f64, MultiIndex)> {
        let mut all: Vec<Vec<u32>> = vec![vec![]];
        for _ in 0..p.d() {
            all = all
                .into_iter()
                .flat_map(|v| {
                    (0..=cutoff).map(move |k| {
                        let mut w = v.clone();
                        w.push(k);
                        w
                    })
                })
                .collect();
        }
        let mut out: Vec<(f64, MultiIndex)> = all
            .into_iter()
            .map(|v| {
                let idx = MultiIndex::new(v);
                (hnorm_weight(&idx, p), idx)
            })
            .collect();
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
        out
    }

    #[test]
    fn params_validation() {
        assert!(SpaceParams::new(0, 1.0).is_err());
        assert!(SpaceParams::new(1, 0.5).is_err());
        assert!(SpaceParams::new(1, f64::NAN).is_err());
        assert!(SpaceParams::new(3, 0.51).is_ok());
    }

    #[test]
    fn frequency_map() {
        let got: Vec<u32> = (0..7).map(frequency).collect();
        assert_eq!(got, vec![0, 1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn basis_eval_examples() {
        let v = basis_eval(&MultiIndex::new(vec![0, 0]), &[0.37, 0.91]).unwrap();
        assert_eq!(v, 1.0);
        let v = basis_eval(&MultiIndex::new(vec![2]), &[0.0]).unwrap();
        assert!((v - SQRT_2).abs() < 1e-15);
        let v = basis_eval(&MultiIndex::new(vec![2, 1]), &[0.0, 0.25]).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn basis_eval_domain_errors() {
        let idx = MultiIndex::new(vec![1, 2]);
        assert!(matches!(
            basis_eval(&idx, &[1.0, 0.2]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            basis_eval(&idx, &[-0.1, 0.2]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(basis_eval(&idx, &[0.1]), Err(Error::Domain(_))));
        assert!(matches!(
            basis_eval(&idx, &[f64::NAN, 0.1]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hnorm_weight_examples() {
        let p1 = params(1, 1.0);
        let p2 = params(2, 1.0);
        assert_eq!(hnorm_weight(&MultiIndex::zeros(2), &params(2, 2.7)), 1.0);
        assert_eq!(hnorm_weight(&MultiIndex::new(vec![1]), &p1), 2.0);
        assert_eq!(hnorm_weight(&MultiIndex::new(vec![2]), &p1), 2.0);
        assert_eq!(hnorm_weight(&MultiIndex::new(vec![4, 3]), &p2), 25.0);
    }

    #[test]
    fn ordered_basis_d1() {
        let b = ordered_basis(params(1, 1.0), 5).unwrap();
        let flat: Vec<u32> = b.indices().iter().map(|i| i.flat()[0]).collect();
        assert_eq!(flat, vec![0, 1, 2, 3, 4]);
        assert_eq!(b.weights(), &[1.0, 2.0, 2.0, 5.0, 5.0]);
        let expected = [
            1.0,
            0.5f64.sqrt(),
            0.5f64.sqrt(),
            0.2f64.sqrt(),
            0.2f64.sqrt(),
        ];
        for (n, e) in expected.iter().enumerate() {
            assert!((b.approx_number(n) - e).abs() < 1e-15);
        }
        // oracle: brute force over flat indices ≤ 100
        let bf = brute_force(&params(1, 1.0), 100);
        for (j, (w, idx)) in bf.iter().take(5).enumerate() {
            assert_eq!(*w, b.weights()[j]);
            assert_eq!(idx, &b.indices()[j]);
        }
    }

    #[test]
    fn ordered_basis_d2_small() {
        let b = ordered_basis(params(2, 1.0), 1).unwrap();
        assert_eq!(b.indices()[0], MultiIndex::zeros(2));
        assert_eq!(b.weights()[0], 1.0);
        let b = ordered_basis(params(2, 1.0), 9).unwrap();
        assert_eq!(b.weights(), &[1.0, 2.0, 2.0, 2.0, 2.0, 4.0, 4.0, 4.0, 4.0]);
        let bf = brute_force(&params(2, 1.0), 10);
        let bf_w: Vec<f64> = bf.iter().take(9).map(|e| e.0).collect();
        assert_eq!(bf_w, b.weights());
    }

    #[test]
    fn ordered_basis_errors() {
        assert!(matches!(
            ordered_basis(params(1, 1.0), 0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            ordered_basis_with_cap(params(2, 1.0), 500, 100),
            Err(Error::Resource(_))
        ));
        // enumeration overshoots the cap even when m itself fits
        assert!(matches!(
            ordered_basis_with_cap(params(3, 1.0), 90, 100),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn ordered_basis_matches_brute_force() {
        for (d, s, cutoff, m) in [
            (1, 1.0, 1200, 500),
            (1, 0.75, 1200, 500),
            (2, 1.0, 300, 500),
            (2, 1.5, 300, 500),
            (3, 1.0, 60, 500),
            (3, 0.8, 60, 300),
        ] {
            let p = params(d, s);
            let b = ordered_basis(p, m).unwrap();
            let bf = brute_force(&p, cutoff);
            // the cutoff must contain the first m entries of the true order
            let last_w = bf[m - 1].0;
            let min_excluded = frequency_factor(frequency(cutoff + 1), s);
            assert!(min_excluded > last_w, "cutoff too small for d={d}");
            for (j, (w, idx)) in bf.iter().take(m).enumerate() {
                assert_eq!(idx, &b.indices()[j], "d={d} s={s} j={j}");
                assert_eq!(*w, b.weights()[j]);
            }
            assert!(b.sigma().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn orthonormality_on_trapezoid_grid() {
        // all flat indices with frequency ≤ 4 in d = 1 and d = 2
        let q = 64usize;
        let grid: Vec<f64> = (0..q).map(|i| i as f64 / q as f64).collect();
        let flats: Vec<u32> = (0..=8).collect();
        for &a in &flats {
            for &b in &flats {
                let v: f64 = grid
                    .iter()
                    .map(|&x| basis_eval_1d(a, x) * basis_eval_1d(b, x))
                    .sum::<f64>()
                    / q as f64;
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-10, "({a},{b}) -> {v}");
            }
        }
        let pairs: Vec<MultiIndex> = flats
            .iter()
            .flat_map(|&a| flats.iter().map(move |&b| MultiIndex::new(vec![a, b])))
            .collect();
        for i in pairs.iter().step_by(3) {
            for j in pairs.iter().step_by(2) {
                let mut acc = 0.0;
                for &x in &grid {
                    for &y in &grid {
                        acc += basis_eval(i, &[x, y]).unwrap() * basis_eval(j, &[x, y]).unwrap();
                    }
                }
                acc /= (q * q) as f64;
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((acc - expected).abs() < 1e-10, "{i:?} {j:?} -> {acc}");
            }
        }
    }

    #[test]
    fn spectral_sums_d1_s1() {
        let p = params(1, 1.0);
        let b = ordered_basis(p, 5).unwrap();
        let sum = spectral_sums(&p, &b).unwrap();
        // closed form: Σ_{m∈Z} 1/(1+m²) = π coth π
        let exact = PI / PI.tanh();
        assert!(sum.total().contains(exact) || (sum.total().mid() - exact).abs() < 1e-14);
        assert!((sum.total().mid() - 3.1533481).abs() < 1e-7);
        assert!(sum.total().width() < 1e-12);
        assert_eq!(sum.tail(0).unwrap(), sum.total().mid());
        assert!((sum.tail(3).unwrap() - (sum.total().mid() - 2.0)).abs() < 1e-15);
        let (beta, gamma) = sum.beta_gamma(1).unwrap();
        assert!((beta - 1.46743).abs() < 1e-5);
        assert!(gamma >= b.approx_number(1));
    }

    #[test]
    fn spectral_total_brute_force_oracle() {
        // brute-force S_1 to 10^7 terms plus a crude tail ≤ 1/M
        let mut s1 = 0.0;
        for m in (1..=10_000_000u64).rev() {
            s1 += 1.0 / (1.0 + (m as f64).powi(2));
        }
        let total = 1.0 + 2.0 * s1;
        let p = params(1, 1.0);
        let b = ordered_basis(p, 3).unwrap();
        let sum = spectral_sums(&p, &b).unwrap();
        let diff = sum.total().mid() - total;
        assert!(diff > 0.0 && diff < 2.0 * 1e-7 + 1e-12, "diff {diff}");
    }

    #[test]
    fn flat_tail_agrees_with_summary() {
        let p = params(1, 1.3);
        let b = ordered_basis(p, 400).unwrap();
        let sum = spectral_sums(&p, &b).unwrap();
        for k in [0usize, 1, 2, 3, 10, 57, 200, 399] {
            let t = flat_tail_1d(1.3, k as u64, 1e-14).unwrap();
            assert!((t.mid() - sum.tail(k).unwrap()).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn synthetic_geometric_sequence() {
        // a_j = 2^{-j}: tail(k) = 4^{-k}·4/3
        let a: Vec<f64> = (0..40).map(|j| 0.5f64.powi(j)).collect();
        let sum = SpectrumSummary::from_sequence(a, 4.0 / 3.0).unwrap();
        for k in 1..=6usize {
            let (beta, gamma) = sum.beta_gamma(k).unwrap();
            let expected = 0.5f64.powi(k as i32) * (4.0 / (3.0 * k as f64)).sqrt();
            assert!((beta - expected).abs() <= 1e-12 * expected.max(1e-300) + 1e-15);
            assert!(gamma >= sum.approx_number(k).unwrap());
        }
        assert!(sum.beta_gamma(0).is_err());
        assert!(sum.beta_gamma(40).is_err());
    }

    #[test]
    fn gamma_bounded_by_half_beta() {
        for (d, m) in [(1usize, 600usize), (2, 600), (3, 400)] {
            let p = params(d, 1.0);
            let b = ordered_basis(p, m).unwrap();
            let sum = spectral_sums(&p, &b).unwrap();
            let mut last = f64::INFINITY;
            for k in 1..m {
                let (_, gamma) = sum.beta_gamma(k).unwrap();
                assert!(gamma <= sum.beta(k / 2).unwrap(), "d={d} k={k}");
                let t = sum.tail(k).unwrap();
                assert!(t > 0.0 && t < last);
                assert!(t >= sum.head(m).unwrap() - sum.head(k).unwrap());
                last = t;
            }
        }
    }

    #[test]
    fn approx_number_asymptotics_d2() {
        let p = params(2, 1.0);
        let b = ordered_basis(p, 4097).unwrap();
        let ratios: Vec<f64> = (32..=4096)
            .map(|n| b.approx_number(n) * n as f64 / (n as f64).ln())
            .collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 10.0, "band {lo}..{hi}");
    }

    #[test]
    fn projection_examples() {
        let b = ordered_basis(params(1, 1.0), 5).unwrap();
        let f = CoefVector::new(&b, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(project(&f, 0).l2_norm(), 0.0);
        assert_eq!(project(&f, 3), f);
        let p2 = project(&f, 2);
        assert_eq!(p2.coefficients(), &[1.0, 2.0, 0.0]);
        let diff: f64 = f
            .coefficients()
            .iter()
            .zip(p2.coefficients())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert_eq!(diff, 3.0);
    }

    #[test]
    fn random_unit_function_examples() {
        let b = ordered_basis(params(2, 1.0), 50).unwrap();
        let f = random_unit_function(&b, 7..=7, 3).unwrap();
        assert!((f.coef(7).abs() - b.sigma()[6]).abs() < 1e-15);
        assert!((f.h_norm() - 1.0).abs() < 1e-12);
        let g1 = random_unit_function(&b, 1..=50, 11).unwrap();
        let g2 = random_unit_function(&b, 1..=50, 11).unwrap();
        assert_eq!(g1, g2);
        assert!((g1.h_norm() - 1.0).abs() < 1e-12);
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 5..=4;
        assert!(random_unit_function(&b, empty, 0).is_err());
        assert!(random_unit_function(&b, 0..=4, 0).is_err());
        assert!(random_unit_function(&b, 1..=51, 0).is_err());
    }

    #[test]
    fn coef_vector_eval_matches_basis_eval() {
        let b = ordered_basis(params(2, 1.0), 12).unwrap();
        let f = CoefVector::unit(&b, 9).unwrap();
        let x = [0.13, 0.77];
        assert_eq!(
            f.eval(&x).unwrap(),
            basis_eval(&b.indices()[8], &x).unwrap()
        );
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_contracting(
            c in proptest::collection::vec(-10.0f64..10.0, 1..40),
            k in 0usize..45,
        ) {
            let b = ordered_basis(params(2, 1.0), 40).unwrap();
            let f = CoefVector::new(&b, c).unwrap();
            let p = project(&f, k);
            prop_assert_eq!(project(&p, k), p.clone());
            prop_assert!(p.l2_norm() <= f.l2_norm());
            prop_assert!(p.h_norm() <= f.h_norm());
        }

        #[test]
        fn basis_values_bounded(k1 in 0u32..200, k2 in 0u32..200, x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let v = basis_eval(&MultiIndex::new(vec![k1, k2]), &[x, y]).unwrap();
            prop_assert!(v.abs() <= 2.0 + 1e-12);
        }

        #[test]
        fn weight_is_permutation_invariant(a in 0u32..50, b in 0u32..50, c in 0u32..50, s in 0.6f64..3.0) {
            let p = params(3, s);
            let w = hnorm_weight(&MultiIndex::new(vec![a, b, c]), &p);
            prop_assert_eq!(w, hnorm_weight(&MultiIndex::new(vec![c, a, b]), &p));
            prop_assert!(w >= 1.0);
            prop_assert_eq!(w == 1.0, a == 0 && b == 0 && c == 0);
        }
    }
}
