//! Exact rational oracle for kernel chains and Kalman ranks.
#![allow(dead_code, clippy::needless_range_loop)]

use num_rational::BigRational;
use num_traits::Zero;

pub type Q = BigRational;

pub fn q(v: i64) -> Q {
    BigRational::from_integer(v.into())
}

pub fn rat_mat(rows: &[Vec<i64>]) -> Vec<Vec<Q>> {
    rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect()
}

pub fn mul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).fold(Q::zero(), |acc, l| acc + &a[i][l] * &b[l][j]))
                .collect()
        })
        .collect()
}

pub fn transpose(a: &[Vec<Q>]) -> Vec<Vec<Q>> {
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j].clone()).collect())
        .collect()
}

pub fn rank(mut rows: Vec<Vec<Q>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r][c].clone();
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &pivot;
                for j in c..cols {
                    let v = &f * &rows[r][j];
                    rows[i][j] -= v;
                }
            }
        }
        r += 1;
    }
    r
}

/// Exact `dim ⋂_{j≤k} Ker(Q (Bᵀ)^j)` (same kernels as with `√Q`) and the
/// exact Kalman rank of `[Q, BQ, …]`.
pub fn exact_chain(qm: &[Vec<i64>], bm: &[Vec<i64>]) -> (Vec<usize>, usize) {
    let n = qm.len();
    let qr = rat_mat(qm);
    let br = rat_mat(bm);
    let bt = transpose(&br);
    let mut stacked: Vec<Vec<Q>> = Vec::new();
    let mut block = qr.clone();
    let mut chain = Vec::new();
    for _ in 0..n {
        stacked.extend(block.iter().cloned());
        chain.push(n - rank(stacked.clone()));
        block = mul(&block, &bt);
    }
    let mut kal: Vec<Vec<Q>> = vec![Vec::new(); n];
    let mut p = qr;
    for _ in 0..n {
        for (row, prow) in kal.iter_mut().zip(&p) {
            row.extend(prow.iter().cloned());
        }
        p = mul(&br, &p);
    }
    (chain, rank(kal))
}

pub fn to_f64(rows: &[Vec<i64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect()
}
