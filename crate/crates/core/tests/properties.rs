mod common;

use common::*;
use proptest::prelude::*;
use sparsebench::datagen::{make_coefficients, Ar1Covariance, BetaType, GroundTruth};
use sparsebench::harness::{tune_validation, CoefficientPath, TuningLabel};
use sparsebench::io::fmt_f64;
use sparsebench::lasso::{
    active_least_squares, gamma_grid, kkt_check, lambda_grid, lasso_path, relaxed_path, soft_threshold,
    CdOptions,
};
use sparsebench::linalg::{dot, lstsq, residual, sq_norm};
use sparsebench::metrics::{nnz, Scores};
use sparsebench::stepwise::fs_path;
use sparsebench::subset::{bs_path, hard_threshold, iht, top_k, BnbOptions, IhtOptions};
use sparsebench::Dataset;

fn beta_type() -> impl Strategy<Value = BetaType> {
    prop_oneof![
        Just(BetaType::Spread),
        Just(BetaType::Leading),
        Just(BetaType::Graded),
        Just(BetaType::Decaying)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soft_threshold_shrinks(z in -50.0f64..50.0, t in 0.0f64..20.0) {
        let s = soft_threshold(z, t);
        prop_assert!(s.abs() <= z.abs());
        prop_assert!(s == 0.0 || s.signum() == z.signum());
        prop_assert_eq!(s == 0.0, z.abs() <= t);
        if s != 0.0 {
            prop_assert!(((z - s).abs() - t).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficient_patterns(p in 2usize..60, s_frac in 0.0f64..1.0, bt in beta_type()) {
        let s = 2 + ((p - 2) as f64 * s_frac) as usize;
        let b: Vec<f64> = make_coefficients(p, s, bt).unwrap();
        let expect = if bt == BetaType::Decaying { p } else { s };
        prop_assert_eq!(nnz(&b), expect);
    }

    #[test]
    fn quad_form_matches_dense(p in 1usize..120, rho in 0.0f64..0.99, seed in any::<u64>()) {
        let c = Ar1Covariance::new(p, rho).unwrap();
        let mut r = rng(seed);
        let v: Vec<f64> = gaussian_design(&mut r, 1, p, 0.0).row(0);
        let dense = c.dense();
        let sv = dense.mul_vec(&v);
        let want = dot(&v, &sv);
        let got = c.quad_form(&v);
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1e-300));
    }

    #[test]
    fn lasso_kkt_holds(seed in any::<u64>(), n in 5usize..60, p in 2usize..40, rho in 0.0f64..0.8) {
        let mut r = rng(seed);
        let x = gaussian_design(&mut r, n, p, rho);
        let y = response(&mut r, &x, 2.min(p), 1.0);
        let g = lambda_grid(&x, &y, 8, 1e-2).unwrap();
        let opts = CdOptions::default();
        let path = lasso_path(&x, &y, &g.values, &opts).unwrap();
        prop_assert!(path.betas[0].iter().all(|&b| b == 0.0));
        for (b, &l) in path.betas.iter().zip(&path.lambdas) {
            prop_assert!(kkt_check(&x, &y, b, l).passes(l, &opts));
            prop_assert!(nnz(b) <= n.min(p));
        }
    }

    #[test]
    fn relaxed_endpoints(seed in any::<u64>(), n in 10usize..50, p in 2usize..20) {
        let mut r = rng(seed);
        let x = gaussian_design(&mut r, n, p, 0.3);
        let y = response(&mut r, &x, 2, 1.0);
        let g = lambda_grid(&x, &y, 10, 1e-2).unwrap();
        let base = lasso_path(&x, &y, &g.values, &CdOptions::default()).unwrap();
        let gammas = gamma_grid::<f64>(10);
        let rel = relaxed_path(&x, &y, base.clone(), &gammas).unwrap();
        let g1 = gammas.iter().position(|&v| v == 1.0).unwrap();
        let g0 = gammas.iter().position(|&v| v == 0.0).unwrap();
        for i in 0..base.len() {
            let ls = active_least_squares(&x, &base.supports[i], &y);
            for j in 0..p {
                prop_assert!((rel.betas[i][g1][j] - base.betas[i][j]).abs() <= 1e-12);
                prop_assert!((rel.betas[i][g0][j] - ls[j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn stepwise_rss_nonincreasing(seed in any::<u64>(), n in 5usize..40, p in 2usize..30) {
        let mut r = rng(seed);
        let x = gaussian_design(&mut r, n, p, 0.5);
        let y = response(&mut r, &x, 2, 1.0);
        let path = fs_path(&x, &y, n.min(p)).unwrap();
        for w in path.rss.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        for (k, b) in path.betas.iter().enumerate() {
            prop_assert_eq!(nnz(b) <= k, true);
        }
    }

    #[test]
    fn subset_path_nests(seed in any::<u64>(), p in 2usize..8) {
        let mut r = rng(seed);
        let x = gaussian_design(&mut r, 30, p, 0.4);
        let y = response(&mut r, &x, 2, 1.0);
        let path = bs_path(&x, &y, p, &BnbOptions::default(), &mut r).unwrap();
        prop_assert_eq!(path.solutions[0].rss, sq_norm(&y));
        for w in path.solutions.windows(2) {
            prop_assert!(w[1].rss <= w[0].rss);
        }
        for (k, s) in path.solutions.iter().enumerate() {
            prop_assert!(s.support.len() <= k);
            prop_assert!(s.certified);
        }
    }

    #[test]
    fn iht_descends(seed in any::<u64>(), k in 1usize..6) {
        let mut r = rng(seed);
        let x = gaussian_design(&mut r, 40, 10, 0.6);
        let y = response(&mut r, &x, 3, 1.0);
        let init: Vec<f64> = gaussian_design(&mut r, 1, 10, 0.0).row(0);
        let run = iht(&x, &y, k, &init, &IhtOptions::default()).unwrap();
        for w in run.objectives.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        prop_assert!(run.solution.support.len() <= k);
    }

    #[test]
    fn hard_threshold_keeps_largest(v in prop::collection::vec(-10.0f64..10.0, 1..30), k in 0usize..30) {
        let h = hard_threshold(&v, k);
        let kept = top_k(&v, k);
        prop_assert_eq!(kept.len(), k.min(v.len()));
        let min_kept = kept.iter().map(|&j| v[j].abs()).fold(f64::INFINITY, f64::min);
        for j in 0..v.len() {
            if kept.contains(&j) {
                prop_assert_eq!(h[j], v[j]);
            } else {
                prop_assert_eq!(h[j], 0.0);
                prop_assert!(v[j].abs() <= min_kept);
            }
        }
    }

    #[test]
    fn metric_identities(seed in any::<u64>(), snr in 0.01f64..10.0, rho in 0.0f64..0.9) {
        let p = 12;
        let b0 = make_coefficients(p, 4, BetaType::Leading).unwrap();
        let truth = GroundTruth::new(b0, Ar1Covariance::new(p, rho).unwrap(), snr).unwrap();
        let mut r = rng(seed);
        let b = gaussian_design(&mut r, 1, p, 0.0).row(0);
        let s = Scores::evaluate(&b, &truth);
        prop_assert!((s.rte - (s.rr * snr + 1.0)).abs() <= 1e-10 * s.rte);
        prop_assert!((s.pve - (1.0 - s.rte / (snr + 1.0))).abs() <= 1e-10);
        let null = Scores::evaluate(&vec![0.0; p], &truth);
        prop_assert_eq!(null.rr, 1.0);
        prop_assert_eq!(null.rte, snr + 1.0);
        prop_assert_eq!(null.pve, 0.0);
    }

    #[test]
    fn float_format_roundtrips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn lstsq_residual_orthogonal(seed in any::<u64>(), n in 3usize..30, p in 1usize..12) {
        let mut r = rng(seed);
        let x = gaussian_design(&mut r, n, p, 0.2);
        let y = response(&mut r, &x, 1, 1.0);
        let sol = lstsq(&x, &y);
        let res = residual(&x, &y, &sol.coef);
        let scale = sq_norm(&y).sqrt();
        for g in x.tr_mul_vec(&res) {
            prop_assert!(g.abs() <= 1e-9 * (1.0 + scale) * n as f64);
        }
    }

    #[test]
    fn validation_never_worse_than_null(seed in any::<u64>(), len in 1usize..10) {
        let mut r = rng(seed);
        let x = gaussian_design(&mut r, 20, 4, 0.0);
        let y = response(&mut r, &x, 2, 1.0);
        let val = Dataset::new(x, y).unwrap();
        let mut betas = vec![vec![0.0; 4]];
        for _ in 1..len {
            betas.push(gaussian_design(&mut r, 1, 4, 0.0).row(0));
        }
        let path = CoefficientPath {
            labels: (0..len).map(TuningLabel::Step).collect(),
            betas,
        };
        let i = tune_validation(&path, &val).unwrap();
        let err = |b: &[f64]| sq_norm(&residual(&val.x, &val.y, b));
        prop_assert!(err(&path.betas[i]) <= err(&path.betas[0]));
    }
}
