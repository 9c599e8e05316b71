//! Out-of-sample accuracy metrics against a known truth, and Monte Carlo
//! effective degrees of freedom.
//!
//! With `q = (β̂-β₀)ᵀΣ(β̂-β₀)` and `σ² = β₀ᵀΣβ₀/ν`:
//!
//! * relative risk       `RR  = q / β₀ᵀΣβ₀`
//! * relative test error `RTE = (q + σ²)/σ² = RR·ν + 1`
//! * variance explained  `PVE = 1 - (q + σ²)/(β₀ᵀΣβ₀ + σ²) = 1 - RTE/(ν+1)`
//!
//! RTE and PVE are evaluated through RR so the null fit scores exactly
//! `(1, ν+1, 0)`.

use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::datagen::GroundTruth;
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// `(β̂-β₀)ᵀΣ(β̂-β₀)`
pub fn excess_risk<T: Real>(beta: &[T], truth: &GroundTruth<T>) -> T {
    let d: Vec<T> = beta.iter().zip(&truth.beta0).map(|(&b, &b0)| b - b0).collect();
    truth.cov.quad_form(&d)
}

pub fn relative_risk<T: Real>(beta: &[T], truth: &GroundTruth<T>) -> T {
    excess_risk(beta, truth) / truth.signal_var
}

pub fn relative_test_error<T: Real>(beta: &[T], truth: &GroundTruth<T>) -> T {
    relative_risk(beta, truth) * truth.snr + T::one()
}

pub fn pve<T: Real>(beta: &[T], truth: &GroundTruth<T>) -> T {
    T::one() - relative_test_error(beta, truth) / (truth.snr + T::one())
}

/// Number of entries that are exactly nonzero.
pub fn nnz<T: Real>(beta: &[T]) -> usize {
    beta.iter().filter(|&&b| b != T::zero()).count()
}

/// Accuracy of one coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores<T> {
    pub rr: T,
    pub rte: T,
    pub pve: T,
    pub nnz: usize,
}

impl<T: Real> Scores<T> {
    pub fn evaluate(beta: &[T], truth: &GroundTruth<T>) -> Self {
        Self::from_excess_risk(excess_risk(beta, truth), nnz(beta), truth)
    }

    pub fn from_excess_risk(q: T, nnz: usize, truth: &GroundTruth<T>) -> Self {
        let rr = q / truth.signal_var;
        let rte = rr * truth.snr + T::one();
        let pve = T::one() - rte / (truth.snr + T::one());
        Self { rr, rte, pve, nnz }
    }
}

/// Monte Carlo degrees-of-freedom estimates along a tuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DfCurve {
    pub df: Vec<f64>,
    /// Delete-one jackknife standard errors.
    pub se: Vec<f64>,
    /// Average number of nonzero coefficients at each grid point.
    pub mean_nnz: Vec<f64>,
    pub reps_used: usize,
    pub dropped: usize,
}

/// `df(t) = (1/σ²) Σᵢ Cov(ŷᵢ(t), yᵢ)`, estimated over `reps` noise draws
/// with `X` held fixed. `fitter` maps `(X, y)` to one coefficient vector per
/// grid point; `stream(rep)` supplies the noise generator for repetition
/// `rep`. Repetitions run in parallel and are reduced in index order.
pub fn df_montecarlo<T, F, S>(
    fitter: F,
    x: &Matrix<T>,
    truth: &GroundTruth<T>,
    reps: usize,
    stream: S,
) -> Result<DfCurve>
where
    T: Real,
    F: Fn(&Matrix<T>, &[T]) -> Result<Vec<Vec<T>>> + Sync,
    S: Fn(u64) -> ChaCha20Rng + Sync,
{
    if reps < 3 {
        return Err(invalid("df estimation needs at least 3 repetitions"));
    }
    let draws: Vec<Option<(Vec<f64>, Vec<Vec<f64>>, Vec<usize>)>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(rep as u64);
            let y = crate::datagen::sample_response(x, truth, &mut rng);
            let betas = fitter(x, &y).ok()?;
            let fits = betas
                .iter()
                .map(|b| x.mul_vec(b).into_iter().map(Real::as_f64).collect())
                .collect();
            let counts = betas.iter().map(|b| nnz(b)).collect();
            Some((y.into_iter().map(Real::as_f64).collect(), fits, counts))
        })
        .collect();
    let dropped = draws.iter().filter(|d| d.is_none()).count();
    if dropped * 10 > reps {
        return Err(Error::TooManyFailures {
            dropped,
            total: reps,
        });
    }
    let kept: Vec<_> = draws.into_iter().flatten().collect();
    let r = kept.len();
    if r < 3 {
        return Err(Error::TooManyFailures {
            dropped,
            total: reps,
        });
    }
    let grid_len = kept[0].1.len();
    if kept.iter().any(|k| k.1.len() != grid_len) {
        return Err(Error::Shape("fitter returned paths of different lengths".into()));
    }
    let n = x.nrows();
    let sigma2 = truth.sigma2.as_f64();
    let rf = r as f64;

    // Centered responses, shared by every grid point.
    let ybar: Vec<f64> = (0..n).map(|i| kept.iter().map(|k| k.0[i]).sum::<f64>() / rf).collect();
    let dy: Vec<Vec<f64>> = kept
        .iter()
        .map(|k| k.0.iter().zip(&ybar).map(|(a, b)| a - b).collect())
        .collect();

    let mut curve = DfCurve {
        df: Vec::with_capacity(grid_len),
        se: Vec::with_capacity(grid_len),
        mean_nnz: Vec::with_capacity(grid_len),
        reps_used: r,
        dropped,
    };
    for t in 0..grid_len {
        let fbar: Vec<f64> =
            (0..n).map(|i| kept.iter().map(|k| k.1[t][i]).sum::<f64>() / rf).collect();
        // Per-rep contribution Σᵢ (ŷᵢ - ŷ̄ᵢ)(yᵢ - ȳᵢ).
        let contrib: Vec<f64> = kept
            .iter()
            .zip(&dy)
            .map(|(k, d)| {
                k.1[t]
                    .iter()
                    .zip(&fbar)
                    .zip(d)
                    .map(|((f, fb), dyi)| (f - fb) * dyi)
                    .sum::<f64>()
            })
            .collect();
        let total: f64 = contrib.iter().sum();
        let df = total / (rf - 1.0) / sigma2;
        // Leave-one-out: removing rep j changes the centered cross-product
        // sum by r/(r-1) times that rep's own contribution.
        let loo: Vec<f64> = contrib
            .iter()
            .map(|c| (total - rf / (rf - 1.0) * c) / (rf - 2.0) / sigma2)
            .collect();
        let loo_mean = loo.iter().sum::<f64>() / rf;
        let var = loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>() * (rf - 1.0) / rf;
        curve.df.push(df);
        curve.se.push(var.sqrt());
        curve
            .mean_nnz
            .push(kept.iter().map(|k| k.2[t] as f64).sum::<f64>() / rf);
    }
    Ok(curve)
}
