//! Weighted information matrices and the least-squares recovery map.
//!
//! For points `x_i` drawn from `ϱ`, every row is scaled by `ϱ(x_i)^{-1/2}`:
//!
//! * `B` (n×m): `B_ij = ϱ(x_i)^{-1/2} b_j(x_i)`, `j = 1..m`
//! * `G` (n×k): the first `k` columns of `B`
//! * `Γ` (n×(m−k)): column `j − k` is `a_j` times column `j + 1` of `B`
//!
//! The recovery of `f` is `Σ_j (G⁺ N f)_j b_j` with `N f = (ϱ(x_i)^{-1/2} f(x_i))_i`.

use std::sync::Once;

use faer::{Col, Mat, Par};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampler::{FactorTable, PointSet};
use crate::spectral::{CoefVector, OrderedBasis};

/// Singular values below this multiple of `s_max(G)` are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct InfoMatrices {
    g: Mat<f64>,
    b: Mat<f64>,
    gamma: Mat<f64>,
    k: usize,
    m: usize,
}

impl InfoMatrices {
    pub fn g(&self) -> &Mat<f64> {
        &self.g
    }

    pub fn b(&self) -> &Mat<f64> {
        &self.b
    }

    pub fn gamma(&self) -> &Mat<f64> {
        &self.gamma
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.b.nrows()
    }
}

static SEQUENTIAL: Once = Once::new();

/// Factorizations run single-threaded; parallelism lives at the trial level.
pub(crate) fn sequential_factorizations() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Assembles `G`, `B` and `Γ` for the given points.
pub fn build_matrices(
    pts: &PointSet,
    basis: &OrderedBasis,
    k: usize,
    m: usize,
) -> Result<InfoMatrices> {
    if k == 0 || k >= m || m > basis.len() {
        return Err(Error::Argument(format!(
            "need 1 ≤ k < m ≤ {}, got k = {k}, m = {m}",
            basis.len()
        )));
    }
    let n = pts.n();
    if n < k {
        return Err(Error::Argument(format!(
            "{n} points cannot determine {k} coefficients"
        )));
    }
    let b = design_matrix(pts, basis, m)?;
    let g = b.subcols(0, k).to_owned();
    let sigma = basis.sigma();
    let gamma = Mat::from_fn(n, m - k, |i, c| b[(i, k + c)] * sigma[k + c]);
    Ok(InfoMatrices { g, b, gamma, k, m })
}

/// The weighted evaluation matrix `(ϱ(x_i)^{-1/2} b_j(x_i))` for `j = 1..cols`.
pub fn design_matrix(pts: &PointSet, basis: &OrderedBasis, cols: usize) -> Result<Mat<f64>> {
    if cols > basis.len() {
        return Err(Error::Argument(format!(
            "{cols} columns requested from a basis of {} functions",
            basis.len()
        )));
    }
    if pts.d() != basis.params().d() {
        return Err(Error::Argument(format!(
            "points live in dimension {}, basis in dimension {}",
            pts.d(),
            basis.params().d()
        )));
    }
    let max_flat = basis.max_flat(cols);
    let indices = &basis.indices()[..cols];
    let rows: Vec<Vec<f64>> = (0..pts.n())
        .into_par_iter()
        .map(|i| {
            let table = FactorTable::new(&max_flat, pts.point(i));
            let weight = pts.densities()[i].sqrt().recip();
            indices.iter().map(|idx| weight * table.eval(idx)).collect()
        })
        .collect();
    Ok(Mat::from_fn(pts.n(), cols, |i, j| rows[i][j]))
}

/// Extreme singular values `(s_min, s_max)` of a non-empty matrix.
///
/// For an `n×k` matrix `s_min` is the `min(n, k)`-th largest singular value.
pub fn singular_extrema(mat: &Mat<f64>) -> Result<(f64, f64)> {
    if mat.nrows() == 0 || mat.ncols() == 0 {
        return Err(Error::Argument("singular values of an empty matrix".into()));
    }
    sequential_factorizations();
    let values = mat
        .singular_values()
        .map_err(|e| Error::Precision(format!("SVD did not converge: {e:?}")))?;
    // nonincreasing
    Ok((values[values.len() - 1], values[0]))
}

/// Moore–Penrose inverse of a tall matrix from its thin SVD.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    // n×r and k×r with the r retained singular triplets
    left: Mat<f64>,
    right: Mat<f64>,
    inv_s: Vec<f64>,
    s_min: f64,
    s_max: f64,
    tolerance: f64,
}

impl PseudoInverse {
    pub fn new(g: &Mat<f64>) -> Result<Self> {
        let (n, k) = (g.nrows(), g.ncols());
        if k == 0 || n < k {
            return Err(Error::Argument(format!(
                "pseudo-inverse expects a non-empty tall matrix, got {n}×{k}"
            )));
        }
        sequential_factorizations();
        let svd = g
            .thin_svd()
            .map_err(|e| Error::Precision(format!("SVD did not converge: {e:?}")))?;
        let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
        let s_max = s[0];
        let s_min = s[k - 1];
        let tolerance = RANK_TOLERANCE * s_max;
        let rank = s.iter().take_while(|&&x| x > tolerance).count();
        Ok(Self {
            left: svd.U().subcols(0, rank).to_owned(),
            right: svd.V().subcols(0, rank).to_owned(),
            inv_s: s[..rank].iter().map(|x| x.recip()).collect(),
            s_min,
            s_max,
            tolerance,
        })
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn rank_ok(&self) -> bool {
        self.s_min > self.tolerance
    }

    pub fn rank(&self) -> usize {
        self.inv_s.len()
    }

    pub fn nrows(&self) -> usize {
        self.right.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.left.nrows()
    }

    /// Spectral norm `‖G⁺‖ = 1 / s_min(G)`, infinite when rank deficient.
    pub fn norm(&self) -> f64 {
        if self.rank_ok() {
            self.s_min.recip()
        } else {
            f64::INFINITY
        }
    }

    pub fn apply(&self, y: &Col<f64>) -> Col<f64> {
        let t = self.left.transpose() * y;
        let t = Col::from_fn(t.nrows(), |i| t[i] * self.inv_s[i]);
        &self.right * &t
    }

    /// `G⁺ Y` column by column.
    pub fn apply_matrix(&self, y: &Mat<f64>) -> Mat<f64> {
        let t = self.left.transpose() * y;
        let t = Mat::from_fn(t.nrows(), t.ncols(), |i, j| t[(i, j)] * self.inv_s[i]);
        &self.right * &t
    }

    /// The explicit `k×n` matrix `G⁺`.
    pub fn matrix(&self) -> Mat<f64> {
        let scaled = Mat::from_fn(self.right.nrows(), self.right.ncols(), |i, j| {
            self.right[(i, j)] * self.inv_s[j]
        });
        &scaled * self.left.transpose()
    }
}

/// Result of one weighted least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub coefficients: Vec<f64>,
    pub s_min_g: f64,
    pub s_max_g: f64,
    pub rank_ok: bool,
    /// `1 / s_min(G)` when `rank_ok`, infinite otherwise.
    pub pinv_norm: f64,
}

impl Fit {
    pub fn to_coef_vector<'a>(&self, basis: &'a OrderedBasis) -> Result<CoefVector<'a>> {
        CoefVector::new(basis, self.coefficients.clone())
    }
}

/// Weighted data vector `N f = (ϱ(x_i)^{-1/2} f(x_i))_i`.
pub fn weighted_samples(samples: &[f64], pts: &PointSet) -> Result<Col<f64>> {
    if samples.len() != pts.n() {
        return Err(Error::Argument(format!(
            "{} samples for {} points",
            samples.len(),
            pts.n()
        )));
    }
    let densities = pts.densities();
    Ok(Col::from_fn(samples.len(), |i| {
        samples[i] / densities[i].sqrt()
    }))
}

/// Fits `samples = (f(x_i))_i` by `G⁺ N f`.
pub fn fit(info: &InfoMatrices, samples: &[f64], pts: &PointSet) -> Result<Fit> {
    let pinv = PseudoInverse::new(info.g())?;
    fit_with(&pinv, samples, pts)
}

/// Same as [`fit`] with a precomputed pseudo-inverse of `G`.
pub fn fit_with(pinv: &PseudoInverse, samples: &[f64], pts: &PointSet) -> Result<Fit> {
    let y = weighted_samples(samples, pts)?;
    if y.nrows() != pinv.ncols() {
        return Err(Error::Argument(format!(
            "{} samples for a matrix with {} rows",
            y.nrows(),
            pinv.ncols()
        )));
    }
    let coefficients = pinv.apply(&y).iter().copied().collect();
    Ok(Fit {
        coefficients,
        s_min_g: pinv.s_min(),
        s_max_g: pinv.s_max(),
        rank_ok: pinv.rank_ok(),
        pinv_norm: pinv.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{density_eval, sample_points, DensityParams};
    use crate::spectral::{basis_eval, ordered_basis, random_unit_function, SpaceParams};
    use faer::linalg::solvers::SolveLstsq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn setup(d: usize, m: usize) -> OrderedBasis {
        ordered_basis(SpaceParams::new(d, 1.0).unwrap(), m).unwrap()
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Mat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..rows * cols)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        Mat::from_fn(rows, cols, |i, j| values[i * cols + j])
    }

    /// Independent least-squares path: Householder QR.
    fn qr_solve(g: &Mat<f64>, y: &Col<f64>) -> Col<f64> {
        g.qr().solve_lstsq(y)
    }

    fn max_abs_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
        (a - b).norm_max()
    }

    fn samples_of(f: &CoefVector<'_>, pts: &PointSet) -> Vec<f64> {
        pts.points().map(|x| f.eval(x).unwrap()).collect()
    }

    #[test]
    fn uniform_case_ones_column() {
        let b = setup(1, 3);
        let p = DensityParams::new(&b, 1, 3).unwrap();
        let pts = sample_points(&p, 200, 4).unwrap();
        let info = build_matrices(&pts, &b, 1, 3).unwrap();
        assert!((0..200).all(|i| (info.g()[(i, 0)] - 1.0).abs() < 1e-14));
        let (s_min, s_max) = singular_extrema(info.g()).unwrap();
        assert!((s_min - 200f64.sqrt()).abs() < 1e-12);
        assert!((s_max - 200f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matrix_construction_identities() {
        let b = setup(1, 32);
        let p = DensityParams::new(&b, 8, 32).unwrap();
        let pts = sample_points(&p, 64, 2024).unwrap();
        let info = build_matrices(&pts, &b, 8, 32).unwrap();
        assert_eq!(info.g().shape(), (64, 8));
        assert_eq!(info.gamma().shape(), (64, 24));
        for i in 0..64 {
            let x = pts.point(i);
            let w = density_eval(&p, x).unwrap().sqrt().recip();
            for j in 0..32 {
                let expected = w * basis_eval(&b.indices()[j], x).unwrap();
                assert!((info.b()[(i, j)] - expected).abs() < 1e-14);
                if j < 8 {
                    assert_eq!(info.g()[(i, j)], info.b()[(i, j)]);
                } else {
                    let scaled = info.b()[(i, j)] * b.approx_number(j);
                    assert!((info.gamma()[(i, j - 8)] - scaled).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn build_errors() {
        let b = setup(1, 32);
        let p = DensityParams::new(&b, 8, 32).unwrap();
        let pts = sample_points(&p, 5, 1).unwrap();
        assert!(matches!(
            build_matrices(&pts, &b, 8, 32),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            build_matrices(&pts, &b, 3, 33),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            build_matrices(&pts, &b, 3, 3),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn singular_extrema_examples() {
        let (lo, hi) = singular_extrema(&Mat::identity(3, 3)).unwrap();
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
        let (lo, hi) = singular_extrema(&Mat::from_fn(9, 1, |_, _| 1.0)).unwrap();
        assert!((lo - 3.0).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
        let mut m = Mat::<f64>::zeros(5, 3);
        m[(0, 0)] = 3.0;
        m[(1, 1)] = 1.0;
        m[(2, 2)] = 2.0;
        let (lo, hi) = singular_extrema(&m).unwrap();
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
        let (lo, hi) = singular_extrema(&m.transpose().to_owned()).unwrap();
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
        assert!(singular_extrema(&Mat::zeros(0, 0)).is_err());
    }

    #[test]
    fn reproduces_basis_function() {
        let b = setup(2, 128);
        let p = DensityParams::new(&b, 16, 128).unwrap();
        let pts = sample_points(&p, 256, 5).unwrap();
        let info = build_matrices(&pts, &b, 16, 128).unwrap();
        let f = CoefVector::unit(&b, 3).unwrap();
        let fit = fit(&info, &samples_of(&f, &pts), &pts).unwrap();
        assert!(fit.rank_ok);
        for (j, c) in fit.coefficients.iter().enumerate() {
            let e = if j == 2 { 1.0 } else { 0.0 };
            assert!((c - e).abs() < 1e-10);
        }
        let zero = super::fit(&info, &vec![0.0; 256], &pts).unwrap();
        assert!(zero.coefficients.iter().all(|&c| c == 0.0));
        assert!(super::fit(&info, &[0.0; 3], &pts).is_err());
    }

    #[test]
    fn reproduction_sweep() {
        let b = setup(1, 64);
        let p = DensityParams::new(&b, 8, 64).unwrap();
        let mut checked = 0;
        for seed in 0..100u64 {
            let pts = sample_points(&p, 64, seed).unwrap();
            let info = build_matrices(&pts, &b, 8, 64).unwrap();
            let f = random_unit_function(&b, 1..=8, 1000 + seed).unwrap();
            let fit = fit(&info, &samples_of(&f, &pts), &pts).unwrap();
            if fit.s_min_g > 0.1 * 8.0 {
                let err: f64 = f
                    .coefficients()
                    .iter()
                    .zip(&fit.coefficients)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(err / f.l2_norm() < 1e-9, "seed {seed}: {err}");
                checked += 1;
            }
        }
        assert!(checked > 90);
    }

    #[test]
    fn pseudo_inverse_contract() {
        for (rows, cols, seed) in [(10, 3, 1u64), (64, 64, 2), (200, 17, 3), (512, 64, 4)] {
            let g = random_matrix(rows, cols, seed);
            let pinv = PseudoInverse::new(&g).unwrap();
            assert!(pinv.rank_ok());
            let recon = &g * pinv.matrix() * &g;
            let err = max_abs_diff(&recon, &g);
            assert!(err < 1e-8 * pinv.s_max(), "{rows}x{cols}: {err}");
            // ‖G⁺‖ · s_min(G) = 1
            let (_, pinv_norm) = singular_extrema(&pinv.matrix()).unwrap();
            assert!((pinv_norm * pinv.s_min() - 1.0).abs() < 1e-10);
            assert!((pinv.norm() * pinv.s_min() - 1.0).abs() < 1e-15);
            // second solver path
            let y_mat = random_matrix(rows, 1, seed + 10);
            let y = y_mat.col(0).to_owned();
            let a = pinv.apply(&y);
            let c = qr_solve(&g, &y);
            assert!((&a - &c).norm_l2() < 1e-9 * (1.0 + c.norm_l2()));
            let via_matrix = pinv.apply_matrix(&y_mat);
            assert!((via_matrix.col(0) - &a).norm_l2() < 1e-12 * (1.0 + a.norm_l2()));
        }
    }

    #[test]
    fn rank_deficient_is_flagged() {
        let base = random_matrix(40, 5, 9);
        let g = Mat::from_fn(40, 5, |i, j| base[(i, if j == 3 { 1 } else { j })]);
        let pinv = PseudoInverse::new(&g).unwrap();
        assert!(!pinv.rank_ok());
        assert_eq!(pinv.rank(), 4);
        assert!(pinv.norm().is_infinite());
        // still a pseudo-inverse
        let recon = &g * pinv.matrix() * &g;
        assert!(max_abs_diff(&recon, &g) < 1e-8 * pinv.s_max());
    }

    #[test]
    fn least_squares_optimality() {
        let b = setup(2, 96);
        let p = DensityParams::new(&b, 12, 96).unwrap();
        let pts = sample_points(&p, 150, 31).unwrap();
        let info = build_matrices(&pts, &b, 12, 96).unwrap();
        let f = random_unit_function(&b, 1..=96, 77).unwrap();
        let samples = samples_of(&f, &pts);
        let fit = fit(&info, &samples, &pts).unwrap();
        let head = CoefVector::new(&b, fit.coefficients.clone()).unwrap();
        let residual = |c: &[f64]| -> f64 {
            let g = CoefVector::new(&b, c.to_vec()).unwrap();
            pts.points()
                .zip(&samples)
                .zip(pts.densities())
                .map(|((x, fx), rho)| (g.eval(x).unwrap() - fx).powi(2) / rho)
                .sum()
        };
        let best = residual(head.coefficients());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let dir: Vec<f64> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
            let norm = dir.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
            let perturbed: Vec<f64> = fit
                .coefficients
                .iter()
                .zip(&dir)
                .map(|(c, d)| c + 1e-3 * d / norm)
                .collect();
            assert!(residual(&perturbed) >= best);
        }
        let (_, s_max_gamma) = singular_extrema(info.gamma()).unwrap();
        assert!(s_max_gamma.powi(2) <= info.gamma().squared_norm_l2() * (1.0 + 1e-12));
    }
}
