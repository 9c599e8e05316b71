//! Solver outputs checked against independent reference computations:
//! exhaustive enumeration, naive refits, SVD least squares and closed forms.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use sparsebench::lasso::{
    active_least_squares, gamma_grid, kkt_check, lambda_grid, lasso_fit, lasso_path, relaxed_path,
    CdOptions,
};
use sparsebench::linalg::{lstsq, Matrix};
use sparsebench::stepwise::{fs_path, QrState};
use sparsebench::subset::{best_subset, bs_path, hard_threshold, iht, warm_start, BnbOptions, IhtOptions};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn best_subset_matches_enumeration() {
    let opts = BnbOptions {
        budget_seconds: 10.0,
        ..BnbOptions::default()
    };
    for inst in 0..12 {
        let mut r = rng(100 + inst);
        let rho = if inst % 2 == 0 { 0.0 } else { 0.5 };
        let x = gaussian_design(&mut r, 50, 10, rho);
        let y = response(&mut r, &x, 4, 1.5);
        let truth = enumerate_best(&x, &y);
        for k in 1..=10 {
            let s = best_subset(&x, &y, k, &opts, &mut r).unwrap();
            assert!(s.certified, "instance {inst} k={k} not certified");
            assert!(
                rel_close(s.rss, truth[k].0, 1e-8),
                "instance {inst} k={k}: {} vs {}",
                s.rss,
                truth[k].0
            );
        }
    }
}

#[test]
fn bs_path_low_dimension_all_certified() {
    let mut r = rng(7);
    let x = gaussian_design(&mut r, 100, 10, 0.35);
    let y = response(&mut r, &x, 5, 2.0);
    let truth = enumerate_best(&x, &y);
    let path = bs_path(&x, &y, 10, &BnbOptions::default(), &mut r).unwrap();
    assert_eq!(path.certified_count(), 11);
    assert_eq!(path.solutions[0].rss, y.iter().map(|v| v * v).sum::<f64>());
    for (k, s) in path.solutions.iter().enumerate() {
        assert!(rel_close(s.rss, truth[k].0, 1e-8), "k={k}");
        assert_eq!(s.support, truth[k].1, "k={k}");
    }
}

#[test]
fn best_subset_beats_greedy_counterexample() {
    // y lies in span{x1, x2}; x3 = x1 + x2 + small offset has the largest
    // marginal score, so forward stepwise enters it first and cannot reach
    // zero residual at k = 2.
    let x = Matrix::<f64>::from_rows(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 0.5]]).unwrap();
    let y = [1.0, 1.0, 0.0];
    let fs = fs_path(&x, &y, 2).unwrap();
    assert_eq!(fs.order[0], 2);
    let bs = best_subset(&x, &y, 2, &BnbOptions::default(), &mut rng(1)).unwrap();
    assert!(bs.certified);
    assert!(bs.rss < fs.rss[2] - 1e-3, "bs {} fs {}", bs.rss, fs.rss[2]);
    assert_eq!(bs.support, vec![0, 1]);
}

#[test]
fn warm_start_often_optimal() {
    let mut hits = 0;
    let mut total = 0;
    for inst in 0..10 {
        let mut r = rng(500 + inst);
        let x = gaussian_design(&mut r, 50, 12, 0.5);
        let y = response(&mut r, &x, 5, 1.0);
        let truth = enumerate_best(&x, &y);
        for k in 1..=12 {
            let s = warm_start(&x, &y, k, 50, &IhtOptions::default(), &mut r).unwrap();
            assert!(s.rss >= truth[k].0 * (1.0 - 1e-10));
            total += 1;
            if rel_close(s.rss, truth[k].0, 1e-8) {
                hits += 1;
            }
        }
    }
    assert!(hits * 5 >= total * 4, "warm start optimal in {hits}/{total}");
}

/// Naive forward stepwise: at each step try every remaining column and keep
/// the one with the smallest refit RSS.
fn naive_fs(x: &Matrix<f64>, y: &[f64], kmax: usize) -> (Vec<usize>, Vec<Vec<f64>>, Vec<f64>) {
    let p = x.ncols();
    let mut active: Vec<usize> = Vec::new();
    let mut betas = vec![vec![0.0; p]];
    let mut rss = vec![y.iter().map(|v| v * v).sum()];
    for _ in 0..kmax {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..p).filter(|j| !active.contains(j)) {
            let mut cols = active.clone();
            cols.push(j);
            let (_, r) = na_lstsq(x, &cols, y);
            if best.map_or(true, |(_, b)| r < b) {
                best = Some((j, r));
            }
        }
        let (j, r) = best.unwrap();
        active.push(j);
        let (coef, _) = na_lstsq(x, &active, y);
        let mut b = vec![0.0; p];
        for (&c, &v) in active.iter().zip(&coef) {
            b[c] = v;
        }
        betas.push(b);
        rss.push(r);
    }
    (active, betas, rss)
}

#[test]
fn stepwise_matches_naive_refits() {
    for inst in 0..40 {
        let mut r = rng(900 + inst);
        let n = 10 + (inst as usize * 7) % 41;
        let p = 3 + (inst as usize * 11) % 48;
        let x = gaussian_design(&mut r, n, p, 0.3);
        let y = response(&mut r, &x, 3.min(p), 1.0);
        // At k = n every candidate reaches zero residual, an exact tie.
        let kmax = n.min(p).min(20).min(n - 1);
        let path = fs_path(&x, &y, kmax).unwrap();
        let (order, betas, rss) = naive_fs(&x, &y, kmax);
        assert_eq!(path.order, order, "instance {inst}");
        for k in 0..=kmax {
            for j in 0..p {
                assert!((path.betas[k][j] - betas[k][j]).abs() <= 1e-8 * (1.0 + betas[k][j].abs()));
            }
            assert!(rel_close(path.rss[k], rss[k], 1e-8));
        }
    }
}

#[test]
fn qr_state_stays_orthonormal() {
    let mut r = rng(42);
    let x = gaussian_design(&mut r, 80, 60, 0.6);
    let y = response(&mut r, &x, 5, 1.0);
    let mut st = QrState::new(&x, &y);
    for j in 0..50 {
        st.insert(j).unwrap();
    }
    let q = to_na(&st.q());
    let rr = to_na(&st.r());
    let qtq = q.transpose() * &q;
    let eye = DMatrix::<f64>::identity(50, 50);
    assert!((qtq - eye).amax() <= 1e-10);
    let xa = na_cols(&x, st.active());
    assert!((xa - q * rr).amax() <= 1e-10);
}

#[test]
fn lstsq_matches_pseudoinverse_on_rank_deficient() {
    let mut r = rng(3);
    let base = gaussian_design(&mut r, 20, 4, 0.0);
    // Six columns spanning a rank-4 space.
    let x = Matrix::from_fn(20, 6, |i, j| match j {
        4 => base.get(i, 0) + base.get(i, 1),
        5 => 2.0 * base.get(i, 2),
        _ => base.get(i, j),
    });
    let y = response(&mut r, &x, 2, 0.5);
    let ours = lstsq(&x, &y);
    assert_eq!(ours.rank, 4);
    let a = to_na(&x);
    let yv = DVector::from_column_slice(&y);
    let pinv = a.clone().pseudo_inverse(1e-10).unwrap();
    let b = &pinv * &yv;
    for j in 0..6 {
        assert!((ours.coef[j] - b[j]).abs() < 1e-9, "coef {j}: {} vs {}", ours.coef[j], b[j]);
    }
    // Ridge with a vanishing penalty reaches the same point.
    let delta = 1e-9;
    let ridge = (a.transpose() * &a + DMatrix::identity(6, 6) * delta)
        .lu()
        .solve(&(a.transpose() * &yv))
        .unwrap();
    for j in 0..6 {
        assert!((ours.coef[j] - ridge[j]).abs() < 1e-5);
    }
    let full_rss = (&yv - &a * &b).norm_squared();
    assert!(rel_close(ours.rss, full_rss, 1e-10));
}

#[test]
fn lasso_orthonormal_soft_thresholds() {
    let mut r = rng(8);
    let g = to_na(&gaussian_design(&mut r, 30, 5, 0.0));
    let q = g.qr().q();
    let x = Matrix::from_col_major(30, 5, q.as_slice().to_vec()).unwrap();
    let y = response(&mut r, &x, 3, 0.5);
    let xty = x.tr_mul_vec(&y);
    let lambda = 0.4;
    let beta = lasso_fit(&x, &y, lambda, None, &CdOptions::default()).unwrap();
    for j in 0..5 {
        let z = xty[j];
        let expect = z.signum() * (z.abs() - lambda).max(0.0);
        assert!((beta[j] - expect).abs() < 1e-9);
    }
}

#[test]
fn warm_path_matches_cold_solves() {
    let mut r = rng(12);
    let x = gaussian_design(&mut r, 100, 20, 0.2);
    let y = response(&mut r, &x, 5, 1.0);
    let grid = lambda_grid(&x, &y, 30, 1e-3).unwrap();
    let path = lasso_path(&x, &y, &grid.values, &CdOptions::default()).unwrap();
    assert!(path.betas[0].iter().all(|&b| b == 0.0));
    for (i, &l) in grid.values.iter().enumerate() {
        let cold = lasso_fit(&x, &y, l, None, &CdOptions::default()).unwrap();
        for j in 0..20 {
            assert!((cold[j] - path.betas[i][j]).abs() < 1e-6);
        }
        assert!(kkt_check(&x, &y, &path.betas[i], l).passes(l, &CdOptions::default()));
    }
    for i in 1..6 {
        assert!(path.supports[i].len() >= path.supports[i - 1].len());
    }
}

#[test]
fn near_square_correlated_path_converges() {
    // Supports approach n here and plain CD crawls.
    for seed in 0..6 {
        let mut r = rng(500 + seed);
        let x = gaussian_design(&mut r, 43, 42, 0.7);
        let y = response(&mut r, &x, 5, 0.5);
        let grid = lambda_grid(&x, &y, 20, 1e-4).unwrap();
        let opts = CdOptions::default();
        let path = lasso_path(&x, &y, &grid.values, &opts).unwrap();
        for (b, &l) in path.betas.iter().zip(&path.lambdas) {
            assert!(kkt_check(&x, &y, b, l).passes(l, &opts));
        }
    }
}

#[test]
fn relaxed_blend_matches_closed_form() {
    for inst in 0..10 {
        let mut r = rng(300 + inst);
        let x = gaussian_design(&mut r, 60, 15, 0.3);
        let y = response(&mut r, &x, 4, 1.0);
        let grid = lambda_grid(&x, &y, 20, 1e-3).unwrap();
        let base = lasso_path(&x, &y, &grid.values, &CdOptions::default()).unwrap();
        let gammas = gamma_grid::<f64>(10);
        let relaxed = relaxed_path(&x, &y, base.clone(), &gammas).unwrap();
        for (i, active) in base.supports.iter().enumerate() {
            if active.is_empty() {
                continue;
            }
            let lambda = base.lambdas[i];
            let xa = na_cols(&x, active);
            let s = DVector::from_iterator(active.len(), active.iter().map(|&j| base.betas[i][j].signum()));
            let gram = xa.transpose() * &xa;
            let xty = xa.transpose() * DVector::from_column_slice(&y);
            for (g, &gamma) in gammas.iter().enumerate() {
                let closed = gram.clone().lu().solve(&(&xty - &s * (gamma * lambda))).unwrap();
                for (a, &j) in active.iter().enumerate() {
                    let got = relaxed.betas[i][g][j];
                    assert!(
                        (got - closed[a]).abs() <= 1e-8 * (1.0 + closed[a].abs()),
                        "inst {inst} lambda {i} gamma {gamma}: {got} vs {}",
                        closed[a]
                    );
                }
            }
            let ls = active_least_squares(&x, active, &y);
            let (oracle, _) = na_lstsq(&x, active, &y);
            for (a, &j) in active.iter().enumerate() {
                assert!((ls[j] - oracle[a]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn iht_orthonormal_one_step_is_optimal() {
    let mut r = rng(21);
    let g = to_na(&gaussian_design(&mut r, 40, 8, 0.0));
    let q = g.qr().q();
    let x = Matrix::from_col_major(40, 8, q.as_slice().to_vec()).unwrap();
    let y = response(&mut r, &x, 4, 0.7);
    let run = iht(&x, &y, 3, &[0.0; 8], &IhtOptions::default()).unwrap();
    let expect = hard_threshold(&x.tr_mul_vec(&y), 3);
    let truth = enumerate_best(&x, &y);
    for j in 0..8 {
        assert!((run.solution.beta[j] - expect[j]).abs() < 1e-10);
    }
    assert!(rel_close(run.solution.rss, truth[3].0, 1e-10));
}

#[test]
fn iht_full_size_is_ols() {
    let mut r = rng(22);
    let x = gaussian_design(&mut r, 30, 5, 0.4);
    let y = response(&mut r, &x, 5, 1.0);
    let run = iht(&x, &y, 5, &[0.0; 5], &IhtOptions::default()).unwrap();
    let (ols, _) = na_lstsq(&x, &[0, 1, 2, 3, 4], &y);
    for j in 0..5 {
        assert!((run.solution.beta[j] - ols[j]).abs() < 1e-10);
    }
}
