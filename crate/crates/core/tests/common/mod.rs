#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use sparsebench::linalg::Matrix;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Gaussian design with AR(1) correlation `rho` between neighbouring columns.
pub fn gaussian_design(rng: &mut ChaCha20Rng, n: usize, p: usize, rho: f64) -> Matrix<f64> {
    let mut x = Matrix::zeros(n, p);
    let scale = (1.0 - rho * rho).sqrt();
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 { z } else { rho * prev + scale * z };
            x.set(i, j, v);
            prev = v;
        }
    }
    x
}

/// `y = X b + noise` with `b` having `s` leading unit entries.
pub fn response(rng: &mut ChaCha20Rng, x: &Matrix<f64>, s: usize, sigma: f64) -> Vec<f64> {
    let p = x.ncols();
    let b: Vec<f64> = (0..p).map(|j| if j < s { 1.0 } else { 0.0 }).collect();
    let mut y = x.mul_vec(&b);
    for v in y.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += sigma * e;
    }
    y
}

pub fn to_na(x: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(x.nrows(), x.ncols(), x.as_col_major())
}

pub fn na_cols(x: &Matrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, j| x.get(i, cols[j]))
}

/// Least squares on `cols` through nalgebra's SVD; returns coefficients
/// on `cols` and the RSS.
pub fn na_lstsq(x: &Matrix<f64>, cols: &[usize], y: &[f64]) -> (Vec<f64>, f64) {
    let yv = DVector::from_column_slice(y);
    if cols.is_empty() {
        return (Vec::new(), yv.norm_squared());
    }
    let a = na_cols(x, cols);
    let svd = a.clone().svd(true, true);
    let b = svd.solve(&yv, 1e-12).expect("svd solve");
    let r = &yv - &a * &b;
    (b.iter().copied().collect(), r.norm_squared())
}

/// Minimum RSS over every support of each size `0..=p`, with the argmin
/// support (first in lexicographic bitmask order).
pub fn enumerate_best(x: &Matrix<f64>, y: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let p = x.ncols();
    let mut best: Vec<(f64, Vec<usize>)> = vec![(f64::INFINITY, Vec::new()); p + 1];
    for mask in 0u32..(1u32 << p) {
        let cols: Vec<usize> = (0..p).filter(|j| mask & (1 << j) != 0).collect();
        let (_, rss) = na_lstsq(x, &cols, y);
        let k = cols.len();
        if rss < best[k].0 {
            best[k] = (rss, cols);
        }
    }
    // Sets of size <= k are feasible at k.
    for k in 1..=p {
        if best[k - 1].0 < best[k].0 {
            best[k] = best[k - 1].clone();
        }
    }
    best
}
