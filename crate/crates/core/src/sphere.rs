//! Deterministic low-discrepancy sampling of the unit sphere and a local
//! compass search used to approximate infima/suprema of functions on it.

use nalgebra::{DMatrix, DVector};

const GOLDEN: f64 = 1.618_033_988_749_895;

/// `count` deterministic unit vectors covering S^{n-1}.
///
/// n = 1 gives {+1, -1}; n = 2 equally spaced angles on the half circle
/// shifted by a golden-ratio offset; n = 3 a Fibonacci lattice; higher
/// dimensions a Halton sequence pushed radially onto the sphere.
pub fn sphere_points(n: usize, count: usize) -> Vec<DVector<f64>> {
    match n {
        0 => Vec::new(),
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => {
            let offset = (GOLDEN - 1.0) / count as f64;
            (0..count)
                .map(|k| {
                    let phi = std::f64::consts::PI * (k as f64 / count as f64 + offset);
                    DVector::from_vec(vec![phi.cos(), phi.sin()])
                })
                .collect()
        }
        3 => (0..count)
            .map(|k| {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let phi = 2.0 * std::f64::consts::PI * (k as f64 / GOLDEN).fract();
                DVector::from_vec(vec![rho * phi.cos(), rho * phi.sin(), z])
            })
            .collect(),
        _ => {
            let primes = first_primes(n);
            (1..=count)
                .filter_map(|k| {
                    let v: Vec<f64> = primes.iter().map(|&p| 2.0 * radical_inverse(k, p) - 1.0).collect();
                    let v = DVector::from_vec(v);
                    let norm = v.norm();
                    (norm > 1e-12).then(|| v / norm)
                })
                .collect()
        }
    }
}

fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

fn first_primes(count: usize) -> Vec<usize> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2;
    while primes.len() < count {
        if primes.iter().all(|p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Minimum of `f` over the unit sphere: best low-discrepancy sample followed
/// by a compass search in the tangent space with a shrinking step.
pub fn minimize_on_sphere<F: Fn(&DVector<f64>) -> f64>(f: &F, n: usize, samples: usize) -> (f64, DVector<f64>) {
    let pts = sphere_points(n, samples);
    let mut best = pts[0].clone();
    let mut best_val = f(&best);
    for p in pts.iter().skip(1) {
        let v = f(p);
        if v < best_val {
            best_val = v;
            best = p.clone();
        }
    }
    if n == 1 {
        return (best_val, best);
    }
    let mut step = std::f64::consts::PI / samples.max(4) as f64;
    while step > 1e-13 {
        let mut improved = false;
        for dir in tangent_basis(&best) {
            for sign in [1.0, -1.0] {
                let cand = (&best * step.cos() + &dir * (sign * step.sin())).normalize();
                let v = f(&cand);
                if v < best_val {
                    best_val = v;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best_val, best)
}

/// Minimum of `xᵀWx` over the unit sphere for symmetric PSD `W`: the generic
/// search, then inverse iteration started from its argmin, which resolves
/// the narrow valleys of badly conditioned forms.
pub fn minimize_quadratic_on_sphere(w: &DMatrix<f64>, samples: usize) -> (f64, DVector<f64>) {
    let n = w.nrows();
    let form = |x: &DVector<f64>| x.dot(&(w * x));
    let (mut best_val, mut best) = minimize_on_sphere(&form, n, samples);
    let lu = w.clone().lu();
    let mut cur = best.clone();
    for _ in 0..30 {
        let Some(y) = lu.solve(&cur) else { break };
        let norm = y.norm();
        if !(norm.is_finite() && norm > 0.0) {
            break;
        }
        cur = y / norm;
        let v = form(&cur);
        if v < best_val {
            best_val = v;
            best = cur.clone();
        }
    }
    (best_val.max(0.0), best)
}

/// Orthonormal basis of the tangent space at `x` (Gram–Schmidt on the
/// canonical basis).
fn tangent_basis(x: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = x.len();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        e -= x * x.dot(&e);
        for b in &basis {
            let c = b.dot(&e);
            e -= b * c;
        }
        let norm = e.norm();
        if norm > 1e-8 {
            basis.push(e / norm);
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    basis
}
