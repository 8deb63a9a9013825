//! The Fourier symbol `A_t(ξ) = ∫ₜᵀ Q_s ξ·ξ ds` of the non-autonomous
//! diffusion, its time derivatives, and the multiplier `e^{-A_t(ξ)}`.
//!
//! Three families are supported: explicit time-dependent quadratic forms
//! (polynomial entries or user closures), the Ornstein–Uhlenbeck reduction
//! `Q_t = e^{(T-t)B} Q e^{(T-t)Bᵀ}`, and the time-constant fractional symbol
//! `(T-t)|ξ|^{2s}` with `s ≥ 1/2`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows_kalman::{analyze_hypoellipticity, matrix_exponential, MatrixPair};
use crate::quadrature;
use crate::sphere;

/// Derivative order used when a family supplies derivatives of every order.
pub const UNBOUNDED_ORDER: usize = usize::MAX;

/// `(t, j) ↦ ∂ₜʲ Q_t`.
pub type QuadraticFn = Arc<dyn Fn(f64, usize) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub enum SymbolKind {
    /// Entry `(i, j)` of `Q_t` is `Σ_k coeffs[i][j][k] t^k`.
    Polynomial {
        coeffs: Vec<Vec<Vec<f64>>>,
    },
    /// Closure returning `∂ₜʲ Q_t` for `j ≤ j_max`.
    Callable {
        q: QuadraticFn,
        j_max: usize,
    },
    OuReduction {
        pair: MatrixPair,
    },
    Fractional {
        s: f64,
    },
}

impl fmt::Debug for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Polynomial { coeffs } => f.debug_struct("Polynomial").field("coeffs", coeffs).finish(),
            Self::Callable { j_max, .. } => f.debug_struct("Callable").field("j_max", j_max).finish(),
            Self::OuReduction { pair } => f.debug_struct("OuReduction").field("pair", pair).finish(),
            Self::Fractional { s } => f.debug_struct("Fractional").field("s", s).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SymbolFamily {
    kind: SymbolKind,
    horizon: f64,
    dim: usize,
}

/// Number of times at which PSD-ness of `Q_t` is checked on construction.
const PSD_CHECK_POINTS: usize = 32;

impl SymbolFamily {
    /// `Q_t ≡ I` in dimension `dim`.
    pub fn heat(dim: usize, horizon: f64) -> Result<Self> {
        Self::constant(DMatrix::identity(dim, dim), horizon)
    }

    /// Time-independent diffusion matrix.
    pub fn constant(q: DMatrix<f64>, horizon: f64) -> Result<Self> {
        let n = q.nrows();
        let coeffs = (0..n).map(|i| (0..n).map(|j| vec![q[(i, j)]]).collect()).collect();
        Self::polynomial(coeffs, horizon)
    }

    #[allow(clippy::needless_range_loop)]
    pub fn polynomial(coeffs: Vec<Vec<Vec<f64>>>, horizon: f64) -> Result<Self> {
        let n = coeffs.len();
        if n == 0 || coeffs.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidFamily(
                "polynomial Q_t must be a square array of coefficient lists".into(),
            ));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (&coeffs[i][j], &coeffs[j][i]);
                let len = a.len().max(b.len());
                for k in 0..len {
                    let x = a.get(k).copied().unwrap_or(0.0);
                    let y = b.get(k).copied().unwrap_or(0.0);
                    if (x - y).abs() > 1e-12 * (1.0 + x.abs().max(y.abs())) {
                        return Err(Error::InvalidFamily(format!(
                            "Q_t is not symmetric at entry ({i}, {j})"
                        )));
                    }
                }
            }
        }
        let fam = Self::checked(SymbolKind::Polynomial { coeffs }, horizon, n)?;
        fam.check_psd()?;
        Ok(fam)
    }

    pub fn callable(q: QuadraticFn, j_max: usize, dim: usize, horizon: f64) -> Result<Self> {
        let fam = Self::checked(SymbolKind::Callable { q, j_max }, horizon, dim)?;
        fam.check_psd()?;
        Ok(fam)
    }

    pub fn ou(pair: MatrixPair, horizon: f64) -> Result<Self> {
        let dim = pair.dim();
        let fam = Self::checked(SymbolKind::OuReduction { pair }, horizon, dim)?;
        fam.check_psd()?;
        Ok(fam)
    }

    pub fn fractional(s: f64, dim: usize, horizon: f64) -> Result<Self> {
        if !(s >= 0.5) || !s.is_finite() {
            return Err(Error::InvalidFamily(format!(
                "fractional exponent s = {s} must satisfy s >= 1/2"
            )));
        }
        Self::checked(SymbolKind::Fractional { s }, horizon, dim)
    }

    fn checked(kind: SymbolKind, horizon: f64, dim: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidFamily(format!("horizon T = {horizon} must be positive")));
        }
        if dim == 0 {
            return Err(Error::InvalidFamily("dimension must be positive".into()));
        }
        Ok(Self { kind, horizon, dim })
    }

    fn check_psd(&self) -> Result<()> {
        for k in 0..PSD_CHECK_POINTS {
            let t = self.horizon * k as f64 / (PSD_CHECK_POINTS - 1) as f64;
            let q = self.q_deriv(t, 0)?;
            if q.nrows() != self.dim || q.ncols() != self.dim {
                return Err(Error::InvalidFamily(format!(
                    "Q_t has shape {}x{}",
                    q.nrows(),
                    q.ncols()
                )));
            }
            let sym = (&q + q.transpose()) * 0.5;
            if (&q - &sym).amax() > 1e-10 * (1.0 + q.amax()) {
                return Err(Error::InvalidFamily(format!("Q_t is not symmetric at t = {t}")));
            }
            let eig = sym.symmetric_eigenvalues();
            if eig.min() < -1e-10 * (1.0 + eig.amax()) {
                return Err(Error::InvalidFamily(format!(
                    "Q_t is not positive semidefinite at t = {t} (eigenvalue {:.3e})",
                    eig.min()
                )));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same family with a different final time (the OU reduction depends on it).
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        let mut out = self.clone();
        out.horizon = horizon;
        if !(horizon > 0.0) {
            return Err(Error::InvalidFamily(format!("horizon T = {horizon} must be positive")));
        }
        Ok(out)
    }

    /// Highest time-derivative order of `Q_t` the family can supply.
    pub fn max_q_order(&self) -> usize {
        match &self.kind {
            SymbolKind::Callable { j_max, .. } => *j_max,
            _ => UNBOUNDED_ORDER,
        }
    }

    /// Highest derivative order `M` accepted by [`eval_symbol`].
    pub fn max_symbol_order(&self) -> usize {
        self.max_q_order().saturating_add(1)
    }

    fn check_order(&self, m: usize) -> Result<()> {
        let available = self.max_symbol_order();
        if m > available {
            return Err(Error::DerivOrderUnavailable {
                requested: m,
                available,
            });
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.horizon;
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::InvalidArgument(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    /// `∂ₜʲ Q_t`. Fractional families have no quadratic form.
    pub fn q_deriv(&self, t: f64, j: usize) -> Result<DMatrix<f64>> {
        match &self.kind {
            SymbolKind::Polynomial { coeffs } => {
                let n = self.dim;
                Ok(DMatrix::from_fn(n, n, |a, b| poly_deriv(&coeffs[a][b], j, t)))
            }
            SymbolKind::Callable { q, j_max } => {
                if j > *j_max {
                    return Err(Error::DerivOrderUnavailable {
                        requested: j,
                        available: *j_max,
                    });
                }
                Ok(q(t, j))
            }
            SymbolKind::OuReduction { pair } => {
                // ∂ₜʲ Q_t = (-1)ʲ e^{τB} Lʲ(Q) e^{τBᵀ}, L(X) = BX + XBᵀ, τ = T - t
                let mut x = pair.q().clone();
                for _ in 0..j {
                    x = pair.b() * &x + &x * pair.b().transpose();
                }
                let e = matrix_exponential(pair.b(), self.horizon - t)?;
                let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
                let out = &e * x * e.transpose() * sign;
                Ok((&out + out.transpose()) * 0.5)
            }
            SymbolKind::Fractional { .. } => Err(Error::InvalidFamily(
                "fractional symbols are not quadratic forms".into(),
            )),
        }
    }

    /// `∫_{t0}^{t1} Q_s ds` for quadratic families.
    pub fn form_between(&self, t0: f64, t1: f64) -> Result<DMatrix<f64>> {
        match &self.kind {
            SymbolKind::Polynomial { coeffs } => {
                let n = self.dim;
                Ok(DMatrix::from_fn(n, n, |a, b| {
                    poly_antideriv(&coeffs[a][b], t1) - poly_antideriv(&coeffs[a][b], t0)
                }))
            }
            SymbolKind::Callable { q, .. } => {
                let tol = 1e-13 * (1.0 + (t1 - t0).abs());
                let f = |s: f64| q(s, 0);
                quadrature::adaptive_matrix(&f, t0, t1, tol)
            }
            SymbolKind::OuReduction { pair } => {
                let w0 = pair.gramian(self.horizon - t0)?;
                let w1 = pair.gramian(self.horizon - t1)?;
                Ok(w0 - w1)
            }
            SymbolKind::Fractional { .. } => Err(Error::InvalidFamily(
                "fractional symbols are not quadratic forms".into(),
            )),
        }
    }

    /// `A` on `[t0, t1]`: `∫_{t0}^{t1} Q_s ξ·ξ ds`, or `(t1 - t0)|ξ|^{2s}`.
    pub fn symbol_between(&self, t0: f64, t1: f64, xi: &[f64]) -> Result<f64> {
        match &self.kind {
            SymbolKind::Fractional { s } => Ok((t1 - t0) * norm_pow(xi, *s)),
            _ => {
                let w = self.form_between(t0, t1)?;
                Ok(quad_form(&w, xi))
            }
        }
    }

    /// Precomputes everything needed to evaluate the symbol and its first
    /// `order` time derivatives at time `t` for many frequencies.
    pub fn slice(&self, t: f64, order: usize) -> Result<SymbolSlice> {
        self.check_time(t)?;
        self.check_order(order)?;
        let t = t.clamp(0.0, self.horizon);
        match &self.kind {
            SymbolKind::Fractional { s } => Ok(SymbolSlice::Fractional {
                tau: self.horizon - t,
                s: *s,
                order,
            }),
            _ => {
                let w = self.form_between(t, self.horizon)?;
                let derivs = (0..order)
                    .map(|j| self.q_deriv(t, j).map(|q| -q))
                    .collect::<Result<Vec<_>>>()?;
                Ok(SymbolSlice::Quadratic { w, derivs })
            }
        }
    }
}

fn poly_deriv(c: &[f64], j: usize, t: f64) -> f64 {
    let mut acc = 0.0;
    for k in (j..c.len()).rev() {
        let falling: f64 = (0..j).map(|i| (k - i) as f64).product();
        acc = acc * t + c[k] * falling;
    }
    acc
}

fn poly_antideriv(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (k, ck)| acc * t + ck / (k + 1) as f64)
        * t
}

pub(crate) fn quad_form(w: &DMatrix<f64>, xi: &[f64]) -> f64 {
    let n = xi.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += w[(i, j)] * xi[j];
        }
        acc += xi[i] * row;
    }
    acc
}

fn norm_pow(xi: &[f64], s: f64) -> f64 {
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    if s == 1.0 {
        r2
    } else {
        r2.powf(s)
    }
}

/// Symbol data frozen at one time.
#[derive(Debug, Clone)]
pub enum SymbolSlice {
    /// `A = ξᵀWξ`, `∂ₜ^{j+1}A = ξᵀ derivs[j] ξ` with `derivs[j] = -∂ₜʲQ_t`.
    Quadratic {
        w: DMatrix<f64>,
        derivs: Vec<DMatrix<f64>>,
    },
    Fractional {
        tau: f64,
        s: f64,
        order: usize,
    },
}

impl SymbolSlice {
    pub fn value(&self, xi: &[f64]) -> f64 {
        match self {
            Self::Quadratic { w, .. } => quad_form(w, xi),
            Self::Fractional { tau, s, .. } => tau * norm_pow(xi, *s),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Self::Quadratic { derivs, .. } => derivs.len(),
            Self::Fractional { order, .. } => *order,
        }
    }

    /// Fills `out[m-1] = ∂ₜᵐ A_t(ξ)` for `m = 1..=out.len()`.
    pub fn time_derivs(&self, xi: &[f64], out: &mut [f64]) {
        match self {
            Self::Quadratic { derivs, .. } => {
                for (o, d) in out.iter_mut().zip(derivs) {
                    *o = quad_form(d, xi);
                }
            }
            Self::Fractional { s, .. } => {
                for (m, o) in out.iter_mut().enumerate() {
                    *o = if m == 0 { -norm_pow(xi, *s) } else { 0.0 };
                }
            }
        }
    }

    /// `e^{-A_t(ξ)}`.
    pub fn multiplier(&self, xi: &[f64]) -> f64 {
        (-self.value(xi)).exp()
    }

    /// `∂ₜᵐ e^{-A_t(ξ)}` for `m ≤ self.order()`.
    pub fn multiplier_derivative(&self, xi: &[f64], m: usize) -> f64 {
        assert!(m <= self.order(), "slice was built for order {}", self.order());
        let mut d = vec![0.0; m];
        self.time_derivs(xi, &mut d);
        let a: Vec<f64> = d.iter().map(|v| -v).collect();
        leibniz_recurrence((-self.value(xi)).exp(), &a)[m]
    }
}

/// Given `e_0 = e^{f}` and `a[j-1] = ∂ʲf` for `j = 1..=M`, returns
/// `[∂⁰e^f, …, ∂ᴹe^f]` via `e_k = Σ_{j<k} C(k-1, j) a_{k-j} e_j`.
pub fn leibniz_recurrence(e0: f64, a: &[f64]) -> Vec<f64> {
    let m = a.len();
    let mut e = Vec::with_capacity(m + 1);
    e.push(e0);
    for k in 1..=m {
        let mut binom = 1.0;
        let mut acc = 0.0;
        for j in 0..k {
            acc += binom * a[k - j - 1] * e[j];
            binom = binom * (k - 1 - j) as f64 / (j + 1) as f64;
        }
        e.push(acc);
    }
    e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolValue {
    pub a: f64,
    /// `time_derivs[m-1] = ∂ₜᵐ A_t(ξ)`.
    pub time_derivs: Vec<f64>,
}

pub fn eval_symbol(fam: &SymbolFamily, t: f64, xi: &[f64], deriv_order: usize) -> Result<SymbolValue> {
    check_xi(fam, xi)?;
    let slice = fam.slice(t, deriv_order)?;
    let mut time_derivs = vec![0.0; deriv_order];
    slice.time_derivs(xi, &mut time_derivs);
    Ok(SymbolValue {
        a: slice.value(xi),
        time_derivs,
    })
}

pub fn multiplier_derivative(fam: &SymbolFamily, t: f64, xi: &[f64], m: usize) -> Result<f64> {
    check_xi(fam, xi)?;
    let slice = fam.slice(t, m)?;
    Ok(slice.multiplier_derivative(xi, m))
}

fn check_xi(fam: &SymbolFamily, xi: &[f64]) -> Result<()> {
    if xi.len() != fam.dim() {
        return Err(Error::InvalidArgument(format!(
            "frequency has dimension {}, family has {}",
            xi.len(),
            fam.dim()
        )));
    }
    Ok(())
}

/// Empirical `(c, k)` in `A_t(ξ) ≥ c (T-t)^k |ξ|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityEstimate {
    pub c_hat: f64,
    pub k_hat: f64,
    pub fit_residual: f64,
    pub tau_grid: Vec<f64>,
    /// `inf_{|ξ|=1} A_{T-τ}(ξ)` per grid point.
    pub infima: Vec<f64>,
}

/// Smallest `T - t` probed, relative to `T`.
pub const PROBE_TAU_MIN: f64 = 1e-3;

pub fn ellipticity_probe(fam: &SymbolFamily, time_samples: usize, xi_samples: usize) -> Result<EllipticityEstimate> {
    if time_samples < 2 {
        return Err(Error::InvalidArgument(
            "ellipticity probe needs at least two times".into(),
        ));
    }
    if let SymbolKind::OuReduction { pair } = &fam.kind {
        if !analyze_hypoellipticity(pair)?.kalman_holds {
            return Err(Error::EllipticityFailure {
                tau: fam.horizon,
                value: 0.0,
            });
        }
    }
    let big_t = fam.horizon;
    let tau_grid = crate::flows_kalman::log_grid(PROBE_TAU_MIN * big_t, big_t, time_samples);
    let n = fam.dim;
    let mut infima = Vec::with_capacity(tau_grid.len());
    for &tau in &tau_grid {
        let t = big_t - tau;
        let inf = match &fam.kind {
            SymbolKind::Fractional { s } => {
                let f = |x: &DVector<f64>| tau * norm_pow(x.as_slice(), *s);
                sphere::minimize_on_sphere(&f, n, xi_samples.max(2)).0
            }
            _ => {
                let w = fam.form_between(t, big_t)?;
                let (inf, _) = sphere::minimize_quadratic_on_sphere(&w, xi_samples.max(2));
                let scale = w.symmetric_eigenvalues().amax();
                if !(inf > 1e-13 * scale) {
                    return Err(Error::EllipticityFailure { tau, value: inf });
                }
                inf
            }
        };
        if !(inf > 0.0) {
            return Err(Error::EllipticityFailure { tau, value: inf });
        }
        infima.push(inf);
    }
    let lo = tau_grid[0];
    let idx: Vec<usize> = (0..tau_grid.len())
        .filter(|&i| tau_grid[i] <= 10.0 * lo * (1.0 + 1e-12))
        .collect();
    let idx = if idx.len() >= 2 { idx } else { vec![0, 1] };
    let lx: Vec<f64> = idx.iter().map(|&i| tau_grid[i].ln()).collect();
    let ly: Vec<f64> = idx.iter().map(|&i| infima[i].ln()).collect();
    let (k_hat, _, fit_residual) = quadrature::linear_fit(&lx, &ly);
    let c_hat = tau_grid
        .iter()
        .zip(&infima)
        .map(|(tau, v)| v / tau.powf(k_hat))
        .fold(f64::INFINITY, f64::min);
    Ok(EllipticityEstimate {
        c_hat,
        k_hat,
        fit_residual,
        tau_grid,
        infima,
    })
}

/// Empirical analyticity constant: max over sampled `t` and `m ≤ 6` of
/// `(‖∂ₜᵐ Q_t‖ / m!)^{1/(m+1)}`. `None` for fractional families.
pub fn estimate_s_t(fam: &SymbolFamily, time_samples: usize) -> Result<Option<f64>> {
    if matches!(fam.kind, SymbolKind::Fractional { .. }) {
        return Ok(None);
    }
    let m_max = fam.max_q_order().min(6);
    let mut best: f64 = 0.0;
    let samples = time_samples.max(2);
    for k in 0..samples {
        let t = fam.horizon * k as f64 / (samples - 1) as f64;
        let mut fact = 1.0;
        for m in 0..=m_max {
            if m > 0 {
                fact *= m as f64;
            }
            let q = fam.q_deriv(t, m)?;
            let norm = q.symmetric_eigenvalues().amax();
            best = best.max((norm / fact).powf(1.0 / (m + 1) as f64));
        }
    }
    Ok(Some(best))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_value() {
        let fam = SymbolFamily::heat(2, 1.0).unwrap();
        let v = eval_symbol(&fam, 0.0, &[2.0, 0.0], 2).unwrap();
        assert!((v.a - 4.0).abs() < 1e-15);
        assert_eq!(v.time_derivs, vec![-4.0, 0.0]);
    }

    #[test]
    fn fractional_value() {
        let fam = SymbolFamily::fractional(0.5, 2, 2.0).unwrap();
        let v = eval_symbol(&fam, 1.0, &[3.0 / 2f64.sqrt(), 3.0 / 2f64.sqrt()], 1).unwrap();
        assert!((v.a - 3.0).abs() < 1e-14);
        assert!(SymbolFamily::fractional(0.4, 1, 1.0).is_err());
    }

    #[test]
    fn polynomial_helpers() {
        // 1 + 2t + 3t²
        let c = [1.0, 2.0, 3.0];
        assert!((poly_deriv(&c, 0, 2.0) - 17.0).abs() < 1e-14);
        assert!((poly_deriv(&c, 1, 2.0) - 14.0).abs() < 1e-14);
        assert!((poly_deriv(&c, 2, 2.0) - 6.0).abs() < 1e-14);
        assert_eq!(poly_deriv(&c, 3, 2.0), 0.0);
        assert!((poly_antideriv(&c, 2.0) - 14.0).abs() < 1e-14);
    }

    #[test]
    fn heat_multiplier_first_derivative() {
        let fam = SymbolFamily::heat(1, 1.0).unwrap();
        let xi = [1.5];
        let d = multiplier_derivative(&fam, 0.25, &xi, 1).unwrap();
        let expect = 2.25 * (-0.75 * 2.25f64).exp();
        assert!((d - expect).abs() < 1e-15);
        let d0 = multiplier_derivative(&fam, 0.25, &xi, 0).unwrap();
        assert!((d0 - (-0.75 * 2.25f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn callable_order_is_enforced() {
        let q: QuadraticFn = Arc::new(|_, j| {
            if j == 0 {
                DMatrix::identity(1, 1)
            } else {
                DMatrix::zeros(1, 1)
            }
        });
        let fam = SymbolFamily::callable(q, 1, 1, 1.0).unwrap();
        assert!(eval_symbol(&fam, 0.5, &[1.0], 2).is_ok());
        assert!(matches!(
            eval_symbol(&fam, 0.5, &[1.0], 3),
            Err(Error::DerivOrderUnavailable {
                requested: 3,
                available: 2
            })
        ));
        let v = eval_symbol(&fam, 0.5, &[2.0], 0).unwrap();
        assert!((v.a - 2.0).abs() < 1e-13);
    }

    #[test]
    fn zero_family_fails_probe() {
        let fam = SymbolFamily::constant(DMatrix::zeros(2, 2), 1.0).unwrap();
        assert!(matches!(
            ellipticity_probe(&fam, 10, 100),
            Err(Error::EllipticityFailure { .. })
        ));
    }

    #[test]
    fn heat_probe() {
        let fam = SymbolFamily::heat(2, 1.0).unwrap();
        let e = ellipticity_probe(&fam, 16, 100).unwrap();
        assert!((e.k_hat - 1.0).abs() < 1e-9);
        assert!((e.c_hat - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_psd_polynomial_rejected() {
        let coeffs = vec![vec![vec![1.0, -2.0]]];
        assert!(SymbolFamily::polynomial(coeffs, 1.0).is_err());
    }

    #[test]
    fn leibniz_matches_exponential_of_linear() {
        // f(t) = λt ⇒ ∂ᵐ e^f = λᵐ e^f
        let lambda: f64 = -1.7;
        let e = leibniz_recurrence(1.0, &[lambda, 0.0, 0.0, 0.0]);
        for (m, v) in e.iter().enumerate() {
            assert!((v - lambda.powi(m as i32)).abs() < 1e-13);
        }
    }
}
