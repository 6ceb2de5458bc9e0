//! Sampling density built from the ordered basis, and exact i.i.d. draws from it.
//!
//! The density is an equal mixture of a head block, the average of `b_j²` over
//! the first `k` basis functions, and a tail block weighting `b_{j+1}²` by
//! `a_j²` for `k ≤ j < m`:
//!
//! ```text
//! ϱ(x) = ½ [ (1/k) Σ_{j<k} b_{j+1}(x)² + Σ_{k≤j<m} p_j b_{j+1}(x)² ],
//! p_j  = a_j² / Σ_{k≤i<m} a_i²
//! ```
//!
//! Every `b²` is a probability density on the torus and factors over the
//! coordinates, so a draw picks a component and then samples each coordinate
//! by inverting its one-dimensional CDF.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{basis_eval_1d, check_point, frequency, MultiIndex, OrderedBasis};

/// Bisection stops once `|F(x) − u|` is at most this.
pub const INVERSE_CDF_TOLERANCE: f64 = 1e-12;

/// Truncated mixture density for a head of size `k` and basis size `m`.
#[derive(Debug, Clone)]
pub struct DensityParams<'a> {
    basis: &'a OrderedBasis,
    k: usize,
    m: usize,
    tail_weights: Vec<f64>,
    tail_cdf: Vec<f64>,
    max_flat: Vec<u32>,
}

impl<'a> DensityParams<'a> {
    pub fn new(basis: &'a OrderedBasis, k: usize, m: usize) -> Result<Self> {
        if k == 0 || k >= m || m > basis.len() {
            return Err(Error::Argument(format!(
                "need 1 ≤ k < m ≤ {}, got k = {k}, m = {m}",
                basis.len()
            )));
        }
        let tail_sq: Vec<f64> = basis.sigma()[k..m].iter().map(|a| a * a).collect();
        let norm: f64 = tail_sq.iter().sum();
        let tail_weights: Vec<f64> = tail_sq.iter().map(|x| x / norm).collect();
        let mut acc = 0.0;
        let mut tail_cdf: Vec<f64> = tail_weights
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = tail_cdf.last_mut() {
            *last = 1.0;
        }
        Ok(Self {
            basis,
            k,
            m,
            tail_weights,
            tail_cdf,
            max_flat: basis.max_flat(m),
        })
    }

    pub fn basis(&self) -> &'a OrderedBasis {
        self.basis
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.basis.params().d()
    }

    /// `p_j` for `j = k, …, m − 1`.
    pub fn tail_weights(&self) -> &[f64] {
        &self.tail_weights
    }

    /// Largest flat index per coordinate over the first `m` basis functions.
    pub fn max_flat(&self) -> &[u32] {
        &self.max_flat
    }

    fn density_from_table(&self, table: &FactorTable) -> f64 {
        let indices = self.basis.indices();
        let head: f64 = indices[..self.k]
            .iter()
            .map(|idx| table.eval(idx).powi(2))
            .sum();
        let tail: f64 = indices[self.k..self.m]
            .iter()
            .zip(&self.tail_weights)
            .map(|(idx, p)| p * table.eval(idx).powi(2))
            .sum();
        0.5 * (head / self.k as f64 + tail)
    }
}

/// Values `b_t(x_c)` for every coordinate `c` and flat index `t ≤ max_flat[c]`.
#[derive(Debug, Clone)]
pub(crate) struct FactorTable {
    values: Vec<Vec<f64>>,
}

impl FactorTable {
    pub(crate) fn new(max_flat: &[u32], x: &[f64]) -> Self {
        let values = max_flat
            .iter()
            .zip(x)
            .map(|(&top, &xc)| (0..=top).map(|t| basis_eval_1d(t, xc)).collect())
            .collect();
        Self { values }
    }

    #[inline]
    pub(crate) fn eval(&self, idx: &MultiIndex) -> f64 {
        idx.flat()
            .iter()
            .zip(&self.values)
            .map(|(&t, row)| row[t as usize])
            .product()
    }
}

/// Evaluates `ϱ(x)`.
pub fn density_eval(params: &DensityParams<'_>, x: &[f64]) -> Result<f64> {
    check_point(x, params.d())?;
    Ok(params.density_from_table(&FactorTable::new(&params.max_flat, x)))
}

/// The density `b_t(x)²` of one coordinate factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Constant,
    Cos(u32),
    Sin(u32),
}

impl FactorKind {
    pub fn from_flat(t: u32) -> Self {
        match t {
            0 => Self::Constant,
            t if t % 2 == 0 => Self::Cos(frequency(t)),
            t => Self::Sin(frequency(t)),
        }
    }

    /// `F(x) = ∫_0^x b_t(y)² dy`.
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Self::Constant => x,
            Self::Cos(m) => {
                let w = 4.0 * PI * m as f64;
                x + (w * x).sin() / w
            }
            Self::Sin(m) => {
                let w = 4.0 * PI * m as f64;
                x - (w * x).sin() / w
            }
        }
    }
}

/// Inverts the CDF of a one-dimensional factor density by bisection on `[0, 1)`.
pub fn inverse_cdf_1d(kind: FactorKind, u: f64) -> f64 {
    if kind == FactorKind::Constant {
        return u;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut mid = 0.5;
    // F' ≤ 2, so a bracket narrower than tol/2 pins F(x) within tol
    while hi - lo > 0.25 * INVERSE_CDF_TOLERANCE {
        mid = 0.5 * (lo + hi);
        let gap = kind.cdf(mid) - u;
        if gap.abs() <= INVERSE_CDF_TOLERANCE {
            break;
        }
        if gap > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    mid.clamp(0.0, 1.0 - f64::EPSILON)
}

/// `n` points drawn i.i.d. from `ϱ`, with the density value at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    d: usize,
    coords: Vec<f64>,
    densities: Vec<f64>,
    seed: u64,
}

impl PointSet {
    /// Wraps explicit points (row-major, `d` coordinates each) and densities.
    pub fn new(d: usize, coords: Vec<f64>, densities: Vec<f64>, seed: u64) -> Result<Self> {
        if d == 0 || coords.len() != d * densities.len() {
            return Err(Error::Argument(format!(
                "{} coordinates do not describe {} points in dimension {d}",
                coords.len(),
                densities.len()
            )));
        }
        for x in coords.chunks(d) {
            check_point(x, d)?;
        }
        if let Some(bad) = densities.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Argument(format!(
                "density value {bad} is not positive"
            )));
        }
        Ok(Self {
            d,
            coords,
            densities,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.densities.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.d)
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }
}

/// Draws `n` points from `ϱ`.
///
/// Point `i` uses its own ChaCha8 stream `(seed, i)`, so the output does not
/// depend on scheduling and is reproducible bit for bit.
pub fn sample_points(params: &DensityParams<'_>, n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::Argument("need at least one sample point".into()));
    }
    let d = params.d();
    let drawn: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x = draw_point(params, &mut rng);
            let rho = params.density_from_table(&FactorTable::new(&params.max_flat, &x));
            (x, rho)
        })
        .collect();
    let mut coords = Vec::with_capacity(n * d);
    let mut densities = Vec::with_capacity(n);
    for (x, rho) in drawn {
        coords.extend(x);
        densities.push(rho);
    }
    Ok(PointSet {
        d,
        coords,
        densities,
        seed,
    })
}

fn draw_point(params: &DensityParams<'_>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let component = if rng.random_bool(0.5) {
        rng.random_range(0..params.k)
    } else {
        let u: f64 = rng.random();
        let offset = params.tail_cdf.partition_point(|&c| c <= u);
        params.k + offset.min(params.tail_cdf.len() - 1)
    };
    params.basis.indices()[component]
        .flat()
        .iter()
        .map(|&t| inverse_cdf_1d(FactorKind::from_flat(t), rng.random()))
        .collect()
}

/// Tensor trapezoid quadrature of `ϱ` on a `q^d` grid.
///
/// Exact for trigonometric polynomials of degree below `q`; the densities here
/// have degree at most `2·max_frequency`.
pub fn density_selfcheck(params: &DensityParams<'_>, q: usize) -> Result<f64> {
    let max_freq = params.basis.max_frequency(params.m) as usize;
    if q < 4 * max_freq || q == 0 {
        return Err(Error::Argument(format!(
            "grid resolution {q} below 4 × max frequency {max_freq}"
        )));
    }
    let d = params.d();
    let total = q
        .checked_pow(d as u32)
        .ok_or_else(|| Error::Resource(format!("grid {q}^{d} does not fit in memory")))?;
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|mut flat| {
            let mut x = vec![0.0; d];
            for xc in x.iter_mut().rev() {
                *xc = (flat % q) as f64 / q as f64;
                flat /= q;
            }
            params.density_from_table(&FactorTable::new(&params.max_flat, &x))
        })
        .collect();
    Ok(values.iter().sum::<f64>() / total as f64)
}
