//! Matrix-level analysis of an Ornstein–Uhlenbeck pair (Q, B): matrix
//! exponentials, the Kalman rank condition with its index `k0`, and
//! short-time controllability Gramian curves.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::sphere;

/// Default cap on the 1-norm of `tB` accepted by [`matrix_exponential`].
pub const FLOW_NORM_CAP: f64 = 700.0;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// Diffusion matrix `Q` (symmetric PSD) and drift matrix `B` of
/// `P = Q D·D + Bx·∇`, with the principal square root of `Q` cached.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPair {
    q: DMatrix<f64>,
    b: DMatrix<f64>,
    sqrt_q: DMatrix<f64>,
}

impl MatrixPair {
    pub fn new(q: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        if n == 0 || q.ncols() != n || b.nrows() != n || b.ncols() != n {
            return Err(Error::InvalidMatrixPair(format!(
                "Q is {}x{}, B is {}x{}; both must be n x n with n > 0",
                q.nrows(),
                q.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if q.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrixPair("non-finite entry".into()));
        }
        let scale = q.amax().max(f64::MIN_POSITIVE);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidMatrixPair("Q is not symmetric".into()));
        }
        let sym = (&q + q.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let tol_psd = 1e-12 * eig.eigenvalues.amax();
        if let Some(lambda) = eig.eigenvalues.iter().find(|&&l| l < -tol_psd) {
            return Err(Error::InvalidMatrixPair(format!(
                "Q has eigenvalue {lambda:.3e} below -{tol_psd:.1e}"
            )));
        }
        // eigenvalues within the tolerance are zero; their square roots would
        // otherwise sit far above the rank threshold
        let roots = eig.eigenvalues.map(|l| if l <= tol_psd { 0.0 } else { l.sqrt() });
        let sqrt_q = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
        let sqrt_q = (&sqrt_q + sqrt_q.transpose()) * 0.5;
        Ok(Self { q: sym, b, sqrt_q })
    }

    pub fn from_rows(q: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(q)?, matrix_from_rows(b)?)
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn sqrt_q(&self) -> &DMatrix<f64> {
        &self.sqrt_q
    }

    /// Kolmogorov pair: `Q = diag(0, 1)`, `B = [[0, 1], [0, 0]]` (translation flow).
    pub fn kolmogorov() -> Self {
        Self::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]], &[vec![0.0, 1.0], vec![0.0, 0.0]]).expect("valid pair")
    }

    /// Kolmogorov pair with quadratic external force: `B = [[0, 1], [-1, 0]]`
    /// (rotation flow).
    pub fn kolmogorov_rotation() -> Self {
        Self::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]], &[vec![0.0, 1.0], vec![-1.0, 0.0]]).expect("valid pair")
    }

    /// `∫_0^τ e^{sB} Q e^{sBᵀ} ds`, so that `ξᵀ W ξ = ∫_0^τ |√Q e^{sBᵀ}ξ|² ds`.
    /// Closed form through a block-triangular exponential.
    pub fn gramian(&self, tau: f64) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut block = DMatrix::zeros(2 * n, 2 * n);
        block.view_mut((0, 0), (n, n)).copy_from(&(-&self.b));
        block.view_mut((0, n), (n, n)).copy_from(&self.q);
        block.view_mut((n, n), (n, n)).copy_from(&self.b.transpose());
        let e = matrix_exponential(&block, tau)?;
        let upper = e.view((0, n), (n, n)).into_owned();
        let lower = e.view((n, n), (n, n)).into_owned();
        let w = lower.transpose() * upper;
        Ok((&w + w.transpose()) * 0.5)
    }

    /// Same Gramian by adaptive Gauss–Legendre quadrature of the integrand.
    pub fn gramian_quadrature(&self, tau: f64, tol: f64) -> Result<DMatrix<f64>> {
        let integrand = |s: f64| -> DMatrix<f64> {
            let e = matrix_exponential(&self.b, s).expect("bounded flow");
            &e * &self.q * e.transpose()
        };
        if tau.abs() * self.b.amax() > FLOW_NORM_CAP {
            return Err(Error::FlowOverflow {
                norm: tau.abs() * self.b.amax(),
                cap: FLOW_NORM_CAP,
            });
        }
        quadrature::adaptive_matrix(&integrand, 0.0, tau, tol)
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidMatrixPair("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// `e^{tB}` by scaling and squaring with a degree-13 Padé approximant.
pub fn matrix_exponential(b: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    matrix_exponential_capped(b, t, FLOW_NORM_CAP)
}

pub fn matrix_exponential_capped(b: &DMatrix<f64>, t: f64, cap: f64) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    assert_eq!(n, b.ncols(), "matrix exponential needs a square matrix");
    if t == 0.0 || n == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    let a = b * t;
    let norm = one_norm(&a);
    if !norm.is_finite() || norm > cap {
        return Err(Error::FlowOverflow { norm, cap });
    }
    if norm == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-squarings);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let c = &PADE13;
    let u_inner = &a6 * (&a6 * c[13] + &a4 * c[11] + &a2 * c[9]);
    let u = &a * (u_inner + &a6 * c[7] + &a4 * c[5] + &a2 * c[3] + &id * c[1]);
    let v = &a6 * (&a6 * c[12] + &a4 * c[10] + &a2 * c[8]) + &a6 * c[6] + &a4 * c[4] + &a2 * c[2] + &id * c[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(Error::FlowOverflow { norm, cap })?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Numerical rank with the singular-value cutoff `RANK_THRESHOLD * σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * smax).count()
}

/// Outcome of the Kalman / hypoellipticity analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypoellipticityReport {
    pub kalman_holds: bool,
    /// Rank of the Kalman matrix `[√Q, B√Q, …, B^{n-1}√Q]`.
    pub rank: usize,
    pub k0: Option<usize>,
    /// `dim ⋂_{j≤k} Ker(√Q (Bᵀ)^j)` for k = 0..n-1.
    pub kernel_chain: Vec<usize>,
}

pub fn analyze_hypoellipticity(pair: &MatrixPair) -> Result<HypoellipticityReport> {
    let n = pair.dim();
    let bt = pair.b.transpose();
    let mut kernel_chain = Vec::with_capacity(n);
    let mut stacked = DMatrix::<f64>::zeros(0, n);
    let mut block = pair.sqrt_q.clone();
    for _ in 0..n {
        let rows = stacked.nrows();
        stacked = stacked.insert_rows(rows, n, 0.0);
        stacked.view_mut((rows, 0), (n, n)).copy_from(&block);
        kernel_chain.push(n - numerical_rank(&stacked));
        block = &block * &bt;
    }

    let mut kalman = DMatrix::<f64>::zeros(n, n * n);
    let mut power = pair.sqrt_q.clone();
    for j in 0..n {
        kalman.view_mut((0, j * n), (n, n)).copy_from(&power);
        power = &pair.b * power;
    }
    let rank = numerical_rank(&kalman);
    let kalman_holds = rank == n;
    if kalman_holds != (kernel_chain[n - 1] == 0) {
        return Err(Error::InvalidMatrixPair(format!(
            "rank criteria disagree (Kalman rank {rank}, kernel chain {kernel_chain:?}); pair is numerically ill-conditioned"
        )));
    }
    let k0 = if kalman_holds {
        kernel_chain.iter().position(|&d| d == 0)
    } else {
        None
    };
    Ok(HypoellipticityReport {
        kalman_holds,
        rank,
        k0,
        kernel_chain,
    })
}

/// Short-time behaviour of `τ ↦ inf_{|ξ|=1} ∫_0^τ |√Q e^{sBᵀ}ξ|² ds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramianCurve {
    pub tau_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Log-log slope on the smallest decade of the grid.
    pub fitted_exponent: f64,
    pub fit_residual: f64,
}

/// Absolute tolerance of the Gramian quadrature.
pub const GRAMIAN_QUAD_TOL: f64 = 1e-12;

pub fn gramian_curve(pair: &MatrixPair, tau_grid: &[f64], sphere_samples: usize) -> Result<GramianCurve> {
    if tau_grid.is_empty() {
        return Err(Error::InvalidArgument("empty tau grid".into()));
    }
    if tau_grid.iter().any(|&t| !(t > 0.0)) || tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "tau grid must be positive and increasing".into(),
        ));
    }
    let n = pair.dim();
    let min_samples = 100 * 10usize.pow((n.max(2) - 2) as u32);
    let samples = sphere_samples.max(min_samples);
    let values = tau_grid
        .par_iter()
        .map(|&tau| -> Result<f64> {
            let w = pair.gramian_quadrature(tau, GRAMIAN_QUAD_TOL)?;
            Ok(sphere::minimize_quadratic_on_sphere(&w, samples).0)
        })
        .collect::<Result<Vec<f64>>>()?;

    let t0 = tau_grid[0];
    let decade: Vec<usize> = (0..tau_grid.len())
        .filter(|&i| tau_grid[i] <= 10.0 * t0 * (1.0 + 1e-12))
        .collect();
    let (fitted_exponent, fit_residual) = if decade.len() >= 2 && decade.iter().all(|&i| values[i] > 0.0) {
        let lx: Vec<f64> = decade.iter().map(|&i| tau_grid[i].ln()).collect();
        let ly: Vec<f64> = decade.iter().map(|&i| values[i].ln()).collect();
        let (s, _, res) = quadrature::linear_fit(&lx, &ly);
        (s, res)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(GramianCurve {
        tau_grid: tau_grid.to_vec(),
        values,
        fitted_exponent,
        fit_residual,
    })
}

/// `count` log-spaced points on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn translation_flow() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = matrix_exponential(&b, 3.0).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0]);
        assert!(rel(&e, &expect) < 1e-14);
    }

    #[test]
    fn rotation_flow_quarter_turn() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = matrix_exponential(&b, PI / 2.0).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((&e - &expect).amax() < 1e-14);
    }

    #[test]
    fn zero_time_is_exact_identity() {
        let b = DMatrix::from_row_slice(2, 2, &[3.0, -1.0, 7.0, 2.0]);
        assert_eq!(matrix_exponential(&b, 0.0).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn overflow_is_reported() {
        let b = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(matches!(matrix_exponential(&b, 1e6), Err(Error::FlowOverflow { .. })));
    }

    #[test]
    fn diagonal_exponential_matches_scalar() {
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-2.0, 0.5, 12.0]));
        let e = matrix_exponential(&b, 1.7).unwrap();
        for (i, l) in [-2.0f64, 0.5, 12.0].iter().enumerate() {
            let x = (l * 1.7).exp();
            assert!((e[(i, i)] - x).abs() <= 1e-13 * x);
        }
    }

    #[test]
    fn kolmogorov_report() {
        let r = analyze_hypoellipticity(&MatrixPair::kolmogorov()).unwrap();
        assert!(r.kalman_holds);
        assert_eq!(r.k0, Some(1));
        assert_eq!(r.kernel_chain, vec![1, 0]);
    }

    #[test]
    fn identity_diffusion_is_elliptic() {
        let p = MatrixPair::new(DMatrix::identity(3, 3), DMatrix::zeros(3, 3)).unwrap();
        let r = analyze_hypoellipticity(&p).unwrap();
        assert!(r.kalman_holds);
        assert_eq!(r.k0, Some(0));
    }

    #[test]
    fn zero_diffusion_fails_kalman() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        let p = MatrixPair::new(DMatrix::zeros(2, 2), b).unwrap();
        let r = analyze_hypoellipticity(&p).unwrap();
        assert!(!r.kalman_holds);
        assert_eq!(r.k0, None);
        assert_eq!(r.kernel_chain, vec![2, 2]);
    }

    #[test]
    fn rejects_indefinite_q() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-3]);
        assert!(MatrixPair::new(q, DMatrix::zeros(2, 2)).is_err());
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(MatrixPair::new(q, DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn sqrt_reproduces_q() {
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
        let p = MatrixPair::new(q.clone(), DMatrix::zeros(3, 3)).unwrap();
        assert!(rel(&(p.sqrt_q() * p.sqrt_q()), &q) < 1e-10);
    }

    #[test]
    fn gramian_closed_form_matches_quadrature() {
        for pair in [MatrixPair::kolmogorov(), MatrixPair::kolmogorov_rotation()] {
            for tau in [1e-3, 0.1, 1.0, 2.5] {
                let a = pair.gramian(tau).unwrap();
                let b = pair.gramian_quadrature(tau, 1e-14).unwrap();
                assert!(rel(&a, &b) < 1e-11, "tau {tau}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn heat_curve_is_linear() {
        let p = MatrixPair::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 2)).unwrap();
        let grid = log_grid(1e-3, 1e-1, 9);
        let c = gramian_curve(&p, &grid, 100).unwrap();
        for (t, v) in c.tau_grid.iter().zip(&c.values) {
            assert!((v - t).abs() < 1e-14 * t.max(1.0));
        }
        assert!((c.fitted_exponent - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_unsorted_grid() {
        let p = MatrixPair::kolmogorov();
        assert!(gramian_curve(&p, &[0.1, 0.01], 100).is_err());
        assert!(gramian_curve(&p, &[0.0, 0.01], 100).is_err());
    }
}
