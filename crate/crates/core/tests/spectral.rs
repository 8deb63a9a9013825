use hypoctl_core::flows_kalman::MatrixPair;
use hypoctl_core::hum_synthesizer::random_field;
use hypoctl_core::spectral_field::{
    apply_propagator, derivative_field, normalized_gaussian, windowed_l2, GridSpec, SpectralField,
};
use hypoctl_core::symbol_engine::SymbolFamily;
use num_complex::Complex64;
use proptest::prelude::*;

fn families_2d(horizon: f64) -> Vec<SymbolFamily> {
    let kolmogorov =
        MatrixPair::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]], &[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let rotation =
        MatrixPair::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]], &[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
    vec![
        SymbolFamily::heat(2, horizon).unwrap(),
        SymbolFamily::ou(kolmogorov, horizon).unwrap(),
        SymbolFamily::ou(rotation, horizon).unwrap(),
        SymbolFamily::fractional(0.5, 2, horizon).unwrap(),
    ]
}

fn grid2() -> GridSpec {
    GridSpec::new(2, 6.0, 32).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propagator_contracts(seed in any::<u64>(), t in 0.0f64..2.0) {
        let g = random_field(grid2(), seed);
        for fam in families_2d(2.0) {
            let u = apply_propagator(&fam, t, &g).unwrap();
            prop_assert!(u.norm() <= g.norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn propagator_is_self_adjoint(a in any::<u64>(), b in any::<u64>(), t in 0.0f64..2.0) {
        let f = random_field(grid2(), a);
        let g = random_field(grid2(), b);
        for fam in families_2d(2.0) {
            let lhs = apply_propagator(&fam, t, &f).unwrap().inner(&g).unwrap();
            let rhs = f.inner(&apply_propagator(&fam, t, &g).unwrap()).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * f.norm() * g.norm());
        }
    }

    #[test]
    fn transform_round_trip(seed in any::<u64>()) {
        let g = random_field(grid2(), seed);
        let back = SpectralField::from_spectrum(grid2(), g.spectrum().to_vec()).unwrap();
        let diff: f64 = g.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let size: f64 = g.values().iter().map(|a| a.norm_sqr()).sum();
        prop_assert!(diff.sqrt() <= 1e-13 * size.sqrt());
        prop_assert!((g.norm_sq() - g.spectral_norm_sq()).abs() <= 1e-12 * g.norm_sq());
    }
}

#[test]
fn propagated_norm_grows_with_t() {
    for seed in 0..20 {
        let g = random_field(grid2(), seed);
        for fam in families_2d(1.5) {
            let mut prev = 0.0;
            for k in 0..20 {
                let t = 1.5 * k as f64 / 19.0;
                let n = apply_propagator(&fam, t, &g).unwrap().norm();
                assert!(n >= prev * (1.0 - 1e-13), "seed {seed} t = {t}");
                prev = n;
            }
            assert!((prev - g.norm()).abs() <= 1e-12 * g.norm());
        }
    }
}

#[test]
fn heat_spreads_a_gaussian_by_the_closed_form() {
    let grid = GridSpec::new(1, 16.0, 256).unwrap();
    let sigma: f64 = 1.0;
    let tau: f64 = 0.5;
    let g = SpectralField::from_real_fn(grid, |x| (-x[0] * x[0] / (2.0 * sigma * sigma)).exp());
    let fam = SymbolFamily::heat(1, 1.0).unwrap();
    let u = apply_propagator(&fam, 1.0 - tau, &g).unwrap();
    let var = sigma * sigma + 2.0 * tau;
    let amp = (sigma * sigma / var).sqrt();
    for (x, v) in grid.axis_points().iter().zip(u.values()) {
        let exact = amp * (-x * x / (2.0 * var)).exp();
        assert!((v.re - exact).abs() < 1e-13 && v.im.abs() < 1e-13, "x = {x}");
    }
}

#[test]
fn derivative_field_differentiates_in_space_and_time() {
    let grid = GridSpec::new(1, 16.0, 256).unwrap();
    let tau: f64 = 0.5;
    let g = SpectralField::from_real_fn(grid, |x| (-x[0] * x[0] / 2.0).exp());
    let fam = SymbolFamily::heat(1, 1.0).unwrap();
    // u(x) = (1 + 2τ)^{-1/2} e^{-x²/(2(1+2τ))}, ∂ₓu = -x/v u, ∂ₜu = -∂τu = -u''
    let d = derivative_field(&fam, 1.0 - tau, &g, 0, &[1]).unwrap();
    let dt = derivative_field(&fam, 1.0 - tau, &g, 1, &[0]).unwrap();
    let v = 1.0 + 2.0 * tau;
    for (x, (a, b)) in grid.axis_points().iter().zip(d.values().iter().zip(dt.values())) {
        let u = v.powf(-0.5) * (-x * x / (2.0 * v)).exp();
        assert!((a.re - (-x / v * u)).abs() < 1e-12);
        let uxx = (x * x / (v * v) - 1.0 / v) * u;
        assert!((b.re + uxx).abs() < 1e-12);
    }
}

#[test]
fn half_line_window_of_a_gaussian() {
    // cell-centred sum over x ≥ 0 = trapezoid over [0, ∞) + dx/2 at the origin
    let grid = GridSpec::new(1, 12.0, 512).unwrap();
    let g = SpectralField::from_real_fn(grid, |x| (-x[0] * x[0] / 2.0).exp());
    let w = windowed_l2(&g, |x| x[0] >= 0.0);
    let exact = std::f64::consts::PI.sqrt() / 2.0 + grid.dx() / 2.0;
    assert!((w - exact).abs() < 1e-12, "{w} vs {exact}");
    let total = windowed_l2(&g, |_| true);
    assert!((total - std::f64::consts::PI.sqrt()).abs() < 1e-12);
}

#[test]
fn normalized_gaussian_has_unit_norm() {
    let g = normalized_gaussian(grid2(), &[1.0, -0.5], 0.8).unwrap();
    assert!((g.norm() - 1.0).abs() < 1e-14);
    assert!(normalized_gaussian(grid2(), &[1.0], 0.8).is_err());
}

#[test]
fn fields_on_different_grids_do_not_mix() {
    let a = SpectralField::zeros(grid2());
    let b = SpectralField::zeros(GridSpec::new(2, 6.0, 16).unwrap());
    assert!(a.inner(&b).is_err());
    assert!(SpectralField::from_values(grid2(), vec![Complex64::new(0.0, 0.0); 3]).is_err());
}
