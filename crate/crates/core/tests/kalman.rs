mod common;

use common::*;
use hypoctl_core::flows_kalman::*;
use nalgebra::DMatrix;
use num_traits::{One, Zero};
use proptest::prelude::*;

type Case = (Vec<Vec<i64>>, Vec<Vec<i64>>, Option<usize>);

#[test]
fn example_pairs_match_exact_oracle() {
    let cases: Vec<Case> = vec![
        (vec![vec![0, 0], vec![0, 1]], vec![vec![0, 1], vec![0, 0]], Some(1)),
        (vec![vec![0, 0], vec![0, 1]], vec![vec![0, 1], vec![-1, 0]], Some(1)),
        (vec![vec![1, 0], vec![0, 1]], vec![vec![0, 0], vec![0, 0]], Some(0)),
        (vec![vec![0, 0], vec![0, 0]], vec![vec![3, 1], vec![2, 5]], None),
        (
            vec![vec![0, 0, 0], vec![0, 0, 0], vec![0, 0, 1]],
            vec![vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 0]],
            Some(2),
        ),
    ];
    for (qm, bm, k0) in cases {
        let pair = MatrixPair::from_rows(&to_f64(&qm), &to_f64(&bm)).unwrap();
        let rep = analyze_hypoellipticity(&pair).unwrap();
        let (chain, kal_rank) = exact_chain(&qm, &bm);
        assert_eq!(rep.kernel_chain, chain, "Q = {qm:?}, B = {bm:?}");
        assert_eq!(rep.kalman_holds, kal_rank == qm.len());
        assert_eq!(rep.k0, k0);
    }
}

#[test]
fn random_integer_pairs_match_exact_oracle() {
    let mut state = 0x5eed_u64;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) % 5) as i64 - 2
    };
    for trial in 0..50 {
        let n = 2 + trial % 3;
        let r = 1 + trial % n;
        let m: Vec<Vec<i64>> = (0..n).map(|_| (0..r).map(|_| next()).collect()).collect();
        let qm: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..r).map(|l| m[i][l] * m[j][l]).sum()).collect())
            .collect();
        let bm: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| next()).collect()).collect();
        let pair = MatrixPair::from_rows(&to_f64(&qm), &to_f64(&bm)).unwrap();
        let rep = analyze_hypoellipticity(&pair).unwrap();
        let (chain, kal_rank) = exact_chain(&qm, &bm);
        assert_eq!(rep.kernel_chain, chain, "Q = {qm:?}, B = {bm:?}");
        assert_eq!(rep.kalman_holds, kal_rank == n);
        if rep.kalman_holds {
            let taus = log_grid(1e-1, 1.0, 6);
            let curve = gramian_curve(&pair, &taus, 100 * 10usize.pow(n as u32 - 2)).unwrap();
            assert!(curve.values.iter().all(|&v| v > 0.0));
            assert!(
                curve.values.windows(2).all(|w| w[1] > w[0]),
                "Q = {qm:?}, B = {bm:?}: {:?}",
                curve.values
            );
        }
    }
}

#[test]
fn fitted_exponent_is_two_k0_plus_one() {
    let taus = log_grid(1e-3, 1e-1, 9);
    for pair in [MatrixPair::kolmogorov(), MatrixPair::kolmogorov_rotation()] {
        let rep = analyze_hypoellipticity(&pair).unwrap();
        let target = 2.0 * rep.k0.unwrap() as f64 + 1.0;
        let curve = gramian_curve(&pair, &taus, 200).unwrap();
        assert!(
            (curve.fitted_exponent / target - 1.0).abs() < 0.05,
            "{}",
            curve.fitted_exponent
        );
    }
}

#[test]
fn kolmogorov_gramian_along_first_axis() {
    let pair = MatrixPair::kolmogorov();
    for tau in [1e-3, 0.1, 1.0, 4.0] {
        let w = pair.gramian(tau).unwrap();
        assert!((w[(0, 0)] / (tau.powi(3) / 3.0) - 1.0).abs() < 1e-12);
        let wq = pair.gramian_quadrature(tau, 1e-13).unwrap();
        assert!((wq[(0, 0)] / (tau.powi(3) / 3.0) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn sqrt_reproduces_q() {
    let pair = MatrixPair::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]], &[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
    let s = pair.sqrt_q();
    assert!((s * s - pair.q()).norm() <= 1e-10 * pair.q().norm());
}

fn rotation(n: usize, angles: &[f64]) -> DMatrix<f64> {
    let mut o = DMatrix::<f64>::identity(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let (s, c) = angles[k % angles.len()].sin_cos();
            let mut g = DMatrix::<f64>::identity(n, n);
            g[(i, i)] = c;
            g[(j, j)] = c;
            g[(i, j)] = -s;
            g[(j, i)] = s;
            o = g * o;
            k += 1;
        }
    }
    o
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semigroup_property(entries in prop::collection::vec(-1.0f64..1.0, 9), s in -10.0f64..10.0, t in -10.0f64..10.0) {
        let b = DMatrix::from_row_slice(3, 3, &entries);
        // rounding in the product scales with the factor norms, not the result
        let (es, et) = (matrix_exponential(&b, s).unwrap(), matrix_exponential(&b, t).unwrap());
        let lhs = matrix_exponential(&b, s + t).unwrap();
        let rhs = &es * &et;
        prop_assert!((&lhs - &rhs).norm() <= 1e-10 * es.norm() * et.norm());
    }

    #[test]
    fn orthogonal_conjugation_invariance(
        m in prop::collection::vec(-2i64..=2, 6),
        b in prop::collection::vec(-2i64..=2, 9),
        angles in prop::collection::vec(0.0f64..std::f64::consts::TAU, 3),
    ) {
        let mm = DMatrix::from_row_slice(3, 2, &m.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let qm = &mm * mm.transpose();
        let bm = DMatrix::from_row_slice(3, 3, &b.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let o = rotation(3, &angles);
        let base = analyze_hypoellipticity(&MatrixPair::new(qm.clone(), bm.clone()).unwrap()).unwrap();
        let q2 = &o * &qm * o.transpose();
        let q2 = (&q2 + q2.transpose()) * 0.5;
        let b2 = &o * &bm * o.transpose();
        let rot = analyze_hypoellipticity(&MatrixPair::new(q2, b2).unwrap()).unwrap();
        prop_assert_eq!(base.kalman_holds, rot.kalman_holds);
        prop_assert_eq!(base.k0, rot.k0);
    }

    #[test]
    fn kernel_chain_is_non_increasing(
        m in prop::collection::vec(-3i64..=3, 3),
        b in prop::collection::vec(-3i64..=3, 9),
    ) {
        let mm = DMatrix::from_row_slice(3, 1, &m.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let qm = &mm * mm.transpose();
        let bm = DMatrix::from_row_slice(3, 3, &b.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let rep = analyze_hypoellipticity(&MatrixPair::new(qm, bm).unwrap()).unwrap();
        prop_assert!(rep.kernel_chain.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(rep.kalman_holds, *rep.kernel_chain.last().unwrap() == 0);
        if let Some(k0) = rep.k0 {
            prop_assert_eq!(rep.kernel_chain[k0], 0);
            prop_assert!(rep.kernel_chain[..k0].iter().all(|&d| d > 0));
        }
    }
}

#[test]
fn oracle_sanity() {
    assert_eq!(rank(rat_mat(&[vec![1, 2], vec![2, 4]])), 1);
    assert_eq!(rank(vec![vec![Q::one(), Q::zero()], vec![Q::zero(), Q::one()]]), 2);
}
