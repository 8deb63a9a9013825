use std::sync::Arc;

use hypoctl_core::flows_kalman::MatrixPair;
use hypoctl_core::symbol_engine::{eval_symbol, leibniz_recurrence, multiplier_derivative, QuadraticFn, SymbolFamily};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T: f64 = 1.0;

fn kolmogorov() -> SymbolFamily {
    let pair = MatrixPair::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]], &[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
    SymbolFamily::ou(pair, T).unwrap()
}

fn rotation_ou() -> SymbolFamily {
    let pair = MatrixPair::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]], &[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
    SymbolFamily::ou(pair, T).unwrap()
}

fn polynomial() -> SymbolFamily {
    // Q_t = [[1 + t, t], [t, 1 + t²]]
    let coeffs = vec![
        vec![vec![1.0, 1.0], vec![0.0, 1.0]],
        vec![vec![0.0, 1.0], vec![1.0, 0.0, 1.0]],
    ];
    SymbolFamily::polynomial(coeffs, T).unwrap()
}

fn callable() -> SymbolFamily {
    // Q_t = [[2 + sin t, cos(t)/2], [cos(t)/2, 1]]
    let q: QuadraticFn = Arc::new(|t: f64, j: usize| {
        let shift = j as f64 * std::f64::consts::FRAC_PI_2;
        let s = (t + shift).sin();
        let c = 0.5 * (t + shift).cos();
        let d = if j == 0 { 1.0 } else { 0.0 };
        DMatrix::from_row_slice(2, 2, &[2.0 * d + s, c, c, d])
    });
    SymbolFamily::callable(q, 8, 2, T).unwrap()
}

fn families() -> Vec<(&'static str, SymbolFamily)> {
    vec![
        ("heat", SymbolFamily::heat(2, T).unwrap()),
        ("polynomial", polynomial()),
        ("callable", callable()),
        ("kolmogorov", kolmogorov()),
        ("rotation", rotation_ou()),
        ("fractional", SymbolFamily::fractional(0.5, 2, T).unwrap()),
        ("fractional-3/4", SymbolFamily::fractional(0.75, 2, T).unwrap()),
    ]
}

fn random_xi(rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
    vec![rng.random_range(-scale..scale), rng.random_range(-scale..scale)]
}

#[test]
fn cocycle_additivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, fam) in families() {
        for _ in 0..100 {
            let t = rng.random_range(0.0..T);
            let u = rng.random_range(t..T);
            let xi = random_xi(&mut rng, 3.0);
            let whole = fam.symbol_between(t, T, &xi).unwrap();
            let parts = fam.symbol_between(t, u, &xi).unwrap() + fam.symbol_between(u, T, &xi).unwrap();
            assert!((whole - parts).abs() <= 1e-12, "{name}: {whole} vs {parts}");
            let direct = eval_symbol(&fam, t, &xi, 0).unwrap().a;
            assert!((whole - direct).abs() <= 1e-12, "{name}");
        }
    }
}

#[test]
fn symbol_decreases_and_multiplier_increases_in_t() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (name, fam) in families() {
        for _ in 0..20 {
            let xi = random_xi(&mut rng, 4.0);
            let mut prev_a = f64::INFINITY;
            let mut prev_e = 0.0;
            for k in 0..=50 {
                let t = T * k as f64 / 50.0;
                let a = eval_symbol(&fam, t, &xi, 0).unwrap().a;
                let e = (-a).exp();
                assert!(a <= prev_a + 1e-14, "{name}: A not monotone at t = {t}");
                assert!(e > 0.0 && e <= 1.0);
                assert!(e >= prev_e - 1e-14);
                prev_a = a;
                prev_e = e;
            }
            assert_eq!(eval_symbol(&fam, T, &xi, 0).unwrap().a, 0.0);
        }
    }
}

#[test]
fn multiplier_derivatives_match_finite_differences() {
    let h = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, fam) in families() {
        for _ in 0..100 {
            let t = rng.random_range(0.1..0.9);
            let xi = random_xi(&mut rng, 2.0);
            for m in 1..=4 {
                let exact = multiplier_derivative(&fam, t, &xi, m).unwrap();
                let plus = multiplier_derivative(&fam, t + h, &xi, m - 1).unwrap();
                let minus = multiplier_derivative(&fam, t - h, &xi, m - 1).unwrap();
                let fd = (plus - minus) / (2.0 * h);
                let scale = exact.abs().max(plus.abs()).max(1e-12);
                assert!((fd - exact).abs() <= 1e-4 * scale, "{name} m = {m}: {fd} vs {exact}");
            }
        }
    }
}

#[test]
fn time_derivatives_of_the_symbol_match_finite_differences() {
    let h = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (name, fam) in families() {
        for _ in 0..50 {
            let t = rng.random_range(0.1..0.9);
            let xi = random_xi(&mut rng, 2.0);
            let at = eval_symbol(&fam, t, &xi, 4).unwrap();
            let plus = eval_symbol(&fam, t + h, &xi, 3).unwrap();
            let minus = eval_symbol(&fam, t - h, &xi, 3).unwrap();
            let fd = (plus.a - minus.a) / (2.0 * h);
            assert!((fd - at.time_derivs[0]).abs() <= 1e-6 * (1.0 + fd.abs()), "{name}");
            for j in 1..4 {
                let fd = (plus.time_derivs[j - 1] - minus.time_derivs[j - 1]) / (2.0 * h);
                assert!(
                    (fd - at.time_derivs[j]).abs() <= 1e-6 * (1.0 + fd.abs()),
                    "{name} j = {j}"
                );
            }
        }
    }
}

#[test]
fn ou_symbol_matches_gramian_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for fam in [kolmogorov(), rotation_ou()] {
        let pair = match fam.kind() {
            hypoctl_core::symbol_engine::SymbolKind::OuReduction { pair } => pair.clone(),
            _ => unreachable!(),
        };
        for _ in 0..100 {
            let t = rng.random_range(0.0..T);
            let xi = random_xi(&mut rng, 5.0);
            let a = eval_symbol(&fam, t, &xi, 0).unwrap().a;
            let w = pair.gramian_quadrature(T - t, 1e-14).unwrap();
            let oracle = xi[0] * xi[0] * w[(0, 0)] + 2.0 * xi[0] * xi[1] * w[(0, 1)] + xi[1] * xi[1] * w[(1, 1)];
            assert!(
                (a - oracle).abs() <= 1e-10 * oracle.abs().max(1e-300),
                "{a} vs {oracle}"
            );
        }
    }
}

#[test]
fn kolmogorov_closed_form() {
    let fam = kolmogorov();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let t = rng.random_range(0.0..T);
        let xi = random_xi(&mut rng, 10.0);
        let tau = T - t;
        let exact = tau.powi(3) / 3.0 * xi[0] * xi[0] + tau * tau * xi[0] * xi[1] + tau * xi[1] * xi[1];
        let a = eval_symbol(&fam, t, &xi, 0).unwrap().a;
        assert!((a - exact).abs() <= 1e-10 * exact.abs());
    }
}

#[test]
fn leibniz_recurrence_on_exponential_of_a_line() {
    // f(t) = c t: ∂ᵏ e^f = cᵏ e^f
    let c = -1.7;
    let mut a = vec![0.0; 10];
    a[0] = c;
    let e = leibniz_recurrence(2.0, &a);
    for (k, v) in e.iter().enumerate() {
        let exact = 2.0 * c.powi(k as i32);
        assert!((v - exact).abs() <= 1e-12 * exact.abs());
    }
}

#[test]
fn unavailable_derivative_orders_are_reported() {
    let fam = callable();
    assert!(multiplier_derivative(&fam, 0.5, &[1.0, 1.0], 9).is_ok());
    assert!(multiplier_derivative(&fam, 0.5, &[1.0, 1.0], 10).is_err());
    assert!(eval_symbol(&fam, 0.5, &[1.0], 0).is_err());
}
