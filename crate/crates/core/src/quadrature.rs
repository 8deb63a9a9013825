//! Gauss–Legendre rules: fixed composite grids for time integrals and an
//! adaptive integrator for scalar and matrix-valued integrands.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Maximum bisection depth of the adaptive integrator.
pub const MAX_DEPTH: usize = 40;

/// Nodes and weights of the `order`-point Gauss–Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre grid on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TimeGrid {
    /// `panels` equal panels on [a, b], each carrying an `order`-point rule.
    pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Result<Self> {
        if !(b > a) || panels == 0 || order == 0 {
            return Err(Error::InvalidArgument(format!(
                "composite rule needs a < b and positive panels/order (got [{a}, {b}], {panels}x{order})"
            )));
        }
        let (x, w) = gauss_legendre(order);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + h * p as f64;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(lo + 0.5 * h * (xi + 1.0));
                weights.push(0.5 * h * wi);
            }
        }
        Ok(Self { nodes, weights })
    }

    /// Default grid with `m` nodes: 4-point panels when `m` is divisible by 4,
    /// otherwise a single `m`-point rule.
    pub fn with_nodes(a: f64, b: f64, m: usize) -> Result<Self> {
        if m.is_multiple_of(4) {
            Self::composite(a, b, m / 4, 4)
        } else {
            Self::composite(a, b, 1, m)
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

const ADAPT_ORDER: usize = 10;

/// Adaptive Gauss–Legendre integration of a scalar function with absolute
/// tolerance `tol`. Each panel is compared against its two halves.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (x, w) = gauss_legendre(ADAPT_ORDER);
    let rule = |lo: f64, hi: f64| -> f64 {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        x.iter().zip(&w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
    };
    let whole = rule(a, b);
    adapt_scalar(&rule, a, b, whole, tol, 0)
}

fn adapt_scalar<R: Fn(f64, f64) -> f64>(rule: &R, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = rule(a, m);
    let right = rule(m, b);
    let refined = left + right;
    let err = (refined - whole).abs();
    if err <= tol || err <= 4.0 * f64::EPSILON * refined.abs() {
        return Ok(refined);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureFailure { depth, a, b });
    }
    Ok(adapt_scalar(rule, a, m, left, 0.5 * tol, depth + 1)? + adapt_scalar(rule, m, b, right, 0.5 * tol, depth + 1)?)
}

/// Adaptive Gauss–Legendre integration of a matrix-valued function; the
/// error is measured entrywise in max norm.
pub fn adaptive_matrix<F: Fn(f64) -> DMatrix<f64>>(f: &F, a: f64, b: f64, tol: f64) -> Result<DMatrix<f64>> {
    let (x, w) = gauss_legendre(ADAPT_ORDER);
    let rule = |lo: f64, hi: f64| -> DMatrix<f64> {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let mut acc: Option<DMatrix<f64>> = None;
        for (xi, wi) in x.iter().zip(&w) {
            let v = f(c + h * xi) * (wi * h);
            acc = Some(match acc {
                Some(s) => s + v,
                None => v,
            });
        }
        acc.expect("rule has nodes")
    };
    if a == b {
        let z = f(a);
        return Ok(DMatrix::zeros(z.nrows(), z.ncols()));
    }
    let whole = rule(a, b);
    adapt_matrix(&rule, a, b, whole, tol, 0)
}

fn adapt_matrix<R: Fn(f64, f64) -> DMatrix<f64>>(
    rule: &R,
    a: f64,
    b: f64,
    whole: DMatrix<f64>,
    tol: f64,
    depth: usize,
) -> Result<DMatrix<f64>> {
    let m = 0.5 * (a + b);
    let left = rule(a, m);
    let right = rule(m, b);
    let refined = &left + &right;
    let err = (&refined - &whole).amax();
    if err <= tol || err <= 4.0 * f64::EPSILON * refined.amax() {
        return Ok(refined);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureFailure { depth, a, b });
    }
    Ok(adapt_matrix(rule, a, m, left, 0.5 * tol, depth + 1)? + adapt_matrix(rule, m, b, right, 0.5 * tol, depth + 1)?)
}

/// Least-squares slope and intercept of `y` against `x`, with the RMS residual.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(5);
        // degree 9 is the limit of a 5-point rule
        let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((approx - 2.0 / 9.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn composite_weights_sum_to_length() {
        let g = TimeGrid::with_nodes(0.0, 3.0, 64).unwrap();
        assert_eq!(g.len(), 64);
        assert!((g.total_weight() - 3.0).abs() < 3e-12);
        assert!(g.nodes.iter().all(|&t| t > 0.0 && t < 3.0));
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let f = |x: f64| 1.0 / (1e-4 + x * x);
        let v = adaptive(&f, -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
    }

    #[test]
    fn adaptive_reports_depth_failure() {
        let f = |x: f64| if x < 0.3 { 0.0 } else { 1.0 };
        let r = adaptive(&f, 0.0, 1.0, 0.0);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
