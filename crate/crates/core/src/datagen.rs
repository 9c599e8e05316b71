//! Synthetic regression problems: coefficient patterns, AR(1) predictor
//! covariance, noise calibration to a target SNR and dataset sampling.
//!
//! Random numbers come from ChaCha20 (`rand_chacha`). A scenario seed keys
//! the generator and every repetition draws from its own stream (see
//! [`child_stream`]) so repetitions can run in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky, Matrix};
use crate::scalar::Real;

/// Sparsity pattern of the true coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum BetaType {
    /// `s` ones at roughly equally spaced indices.
    Spread,
    /// `s` leading ones.
    Leading,
    /// `s` leading values equally spaced from 10 down to 0.5.
    Graded,
    /// `s` leading ones, then `0.5^(i-s)` decay.
    Decaying,
}

impl BetaType {
    pub fn code(self) -> u8 {
        match self {
            BetaType::Spread => 1,
            BetaType::Leading => 2,
            BetaType::Graded => 3,
            BetaType::Decaying => 5,
        }
    }
}

impl TryFrom<u8> for BetaType {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(BetaType::Spread),
            2 => Ok(BetaType::Leading),
            3 => Ok(BetaType::Graded),
            5 => Ok(BetaType::Decaying),
            other => Err(format!("beta_type must be one of 1, 2, 3, 5 (got {other})")),
        }
    }
}

impl From<BetaType> for u8 {
    fn from(b: BetaType) -> u8 {
        b.code()
    }
}

/// True coefficient vector of length `p` with `s` strong entries.
pub fn make_coefficients<T: Real>(p: usize, s: usize, beta_type: BetaType) -> Result<Vec<T>> {
    if s == 0 || s > p {
        return Err(invalid(format!("need 1 <= s <= p (s={s}, p={p})")));
    }
    let mut beta = vec![T::zero(); p];
    match beta_type {
        BetaType::Spread => {
            if s < 2 {
                return Err(invalid("beta-type 1 needs s >= 2"));
            }
            // 1-based index round(1 + (j-1)(p-1)/(s-1)), half rounded up.
            for j in 0..s {
                let num = j * (p - 1);
                let den = s - 1;
                let idx = (2 * num + den) / (2 * den);
                beta[idx] = T::one();
            }
        }
        BetaType::Leading => beta[..s].iter_mut().for_each(|b| *b = T::one()),
        BetaType::Graded => {
            if s < 2 {
                return Err(invalid("beta-type 3 needs s >= 2"));
            }
            let step = 9.5 / (s - 1) as f64;
            for (i, b) in beta[..s].iter_mut().enumerate() {
                *b = T::lit(10.0 - step * i as f64);
            }
        }
        BetaType::Decaying => {
            let half = T::lit(0.5);
            for (i, b) in beta.iter_mut().enumerate() {
                *b = if i < s { T::one() } else { half.powi((i + 1 - s) as i32) };
            }
        }
    }
    Ok(beta)
}

/// AR(1) covariance `Σᵢⱼ = ρ^|i-j|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Covariance<T> {
    p: usize,
    rho: T,
}

impl<T: Real> Ar1Covariance<T> {
    pub fn new(p: usize, rho: T) -> Result<Self> {
        if p == 0 {
            return Err(invalid("covariance dimension must be positive"));
        }
        if !(rho >= T::zero() && rho < T::one()) {
            return Err(invalid(format!("rho must lie in [0, 1) (got {rho})")));
        }
        Ok(Self { p, rho })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.rho.powi(i.abs_diff(j) as i32)
    }

    pub fn dense(&self) -> Matrix<T> {
        Matrix::from_fn(self.p, self.p, |i, j| self.entry(i, j))
    }

    /// `vᵀΣv` in O(p) using the forward recursion `wᵢ = vᵢ + ρ wᵢ₋₁`.
    pub fn quad_form(&self, v: &[T]) -> T {
        assert_eq!(v.len(), self.p, "quadratic form dimension");
        let mut w = T::zero();
        let (mut cross, mut diag) = (T::zero(), T::zero());
        for &vi in v {
            w = vi + self.rho * w;
            cross = cross + vi * w;
            diag = diag + vi * vi;
        }
        cross + cross - diag
    }

    /// Conventional lower Cholesky factor of the dense matrix.
    pub fn cholesky(&self) -> Matrix<T> {
        cholesky(&self.dense()).expect("AR(1) covariance is positive definite for rho < 1")
    }

    /// Maps i.i.d. standard normals `z` to `L z`, where `L` is the lower
    /// Cholesky factor. For AR(1) this is `x₀ = z₀`,
    /// `xᵢ = ρ xᵢ₋₁ + √(1-ρ²) zᵢ`.
    pub fn correlate(&self, z: &mut [T]) {
        let scale = (T::one() - self.rho * self.rho).sqrt();
        let mut prev = T::zero();
        for (i, zi) in z.iter_mut().enumerate() {
            let x = if i == 0 { *zi } else { self.rho * prev + scale * *zi };
            *zi = x;
            prev = x;
        }
    }
}

/// `β₀ᵀΣβ₀ / ν`.
pub fn noise_variance<T: Real>(beta0: &[T], cov: &Ar1Covariance<T>, snr: T) -> Result<T> {
    if !(snr > T::zero()) {
        return Err(invalid(format!("snr must be positive (got {snr})")));
    }
    let signal = cov.quad_form(beta0);
    if !(signal > T::zero()) {
        return Err(invalid("true coefficients are zero, SNR is undefined"));
    }
    Ok(signal / snr)
}

/// Population quantities shared by every repetition of a scenario.
#[derive(Debug, Clone)]
pub struct GroundTruth<T> {
    pub beta0: Vec<T>,
    pub cov: Ar1Covariance<T>,
    /// `β₀ᵀΣβ₀`
    pub signal_var: T,
    pub sigma2: T,
    pub snr: T,
}

impl<T: Real> GroundTruth<T> {
    pub fn new(beta0: Vec<T>, cov: Ar1Covariance<T>, snr: T) -> Result<Self> {
        if beta0.len() != cov.dim() {
            return Err(Error::Shape(format!(
                "beta0 has length {}, covariance dimension {}",
                beta0.len(),
                cov.dim()
            )));
        }
        let sigma2 = noise_variance(&beta0, &cov, snr)?;
        let signal_var = cov.quad_form(&beta0);
        Ok(Self {
            beta0,
            cov,
            signal_var,
            sigma2,
            snr,
        })
    }

    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self> {
        let beta0 = make_coefficients(spec.p, spec.s, spec.beta_type)?;
        let cov = Ar1Covariance::new(spec.p, T::lit(spec.rho))?;
        Self::new(beta0, cov, T::lit(spec.snr))
    }

    pub fn p(&self) -> usize {
        self.beta0.len()
    }
}

/// Predictor matrix and response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub x: Matrix<T>,
    pub y: Vec<T>,
}

impl<T: Real> Dataset<T> {
    pub fn new(x: Matrix<T>, y: Vec<T>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::Shape("dataset needs n >= 1 and p >= 1".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::Shape(format!(
                "X has {} rows but y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(invalid("dataset contains non-finite values"));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = rng.sample(StandardNormal);
    T::lit(z)
}

/// Draws predictors `N(0, Σ)` row by row, then the noise vector.
pub fn sample_predictors<T: Real, R: Rng + ?Sized>(
    n: usize,
    cov: &Ar1Covariance<T>,
    rng: &mut R,
) -> Matrix<T> {
    let p = cov.dim();
    let mut x = Matrix::zeros(n, p);
    let mut row = vec![T::zero(); p];
    for i in 0..n {
        row.iter_mut().for_each(|v| *v = normal(rng));
        cov.correlate(&mut row);
        for (j, &v) in row.iter().enumerate() {
            x.set(i, j, v);
        }
    }
    x
}

/// `Y = X β₀ + ε`, `ε ~ N(0, σ² I)`.
pub fn sample_response<T: Real, R: Rng + ?Sized>(
    x: &Matrix<T>,
    truth: &GroundTruth<T>,
    rng: &mut R,
) -> Vec<T> {
    let sigma = truth.sigma2.sqrt();
    let mut y = x.mul_vec(&truth.beta0);
    for yi in &mut y {
        *yi = *yi + sigma * normal::<T, _>(rng);
    }
    y
}

pub fn sample_dataset<T: Real, R: Rng + ?Sized>(
    n: usize,
    truth: &GroundTruth<T>,
    rng: &mut R,
) -> Dataset<T> {
    let x = sample_predictors(n, &truth.cov, rng);
    let y = sample_response(&x, truth, rng);
    Dataset { x, y }
}

/// What a child stream is used for; part of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Train = 0,
    Validation = 1,
    Subset = 2,
    Noise = 3,
    Pilot = 4,
}

/// ChaCha20 generator keyed by `seed`, positioned on stream
/// `rep << 24 | purpose << 16 | sub`.
pub fn child_stream(seed: u64, rep: u64, purpose: StreamPurpose, sub: u16) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((rep << 24) | ((purpose as u64) << 16) | u64::from(sub));
    rng
}

/// Named problem settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    Low,
    Medium,
    High5,
    High10,
}

impl Setting {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "low" => Some(Setting::Low),
            "medium" => Some(Setting::Medium),
            "high-5" => Some(Setting::High5),
            "high-10" => Some(Setting::High10),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Setting::Low => "low",
            Setting::Medium => "medium",
            Setting::High5 => "high-5",
            Setting::High10 => "high-10",
        }
    }

    /// `(n, p, s)`
    pub fn dims(self) -> (usize, usize, usize) {
        match self {
            Setting::Low => (100, 10, 5),
            Setting::Medium => (500, 100, 5),
            Setting::High5 => (50, 1000, 5),
            Setting::High10 => (100, 1000, 10),
        }
    }
}

/// The ten SNR levels, log-spaced from 0.05 to 6.
pub const SNR_GRID: [f64; 10] = [0.05, 0.09, 0.14, 0.25, 0.42, 0.71, 1.22, 2.07, 3.52, 6.00];

/// Population (maximum attainable) proportion of variance explained.
pub fn population_pve(snr: f64) -> f64 {
    snr / (1.0 + snr)
}

/// One fully specified simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Setting name, or `custom` when dimensions were given directly.
    pub setting: String,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub beta_type: BetaType,
    pub rho: f64,
    pub snr: f64,
    pub reps: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.n == 0 || self.p == 0 || self.s == 0 {
            return bad(format!(
                "n, p, s must be positive (n={}, p={}, s={})",
                self.n, self.p, self.s
            ));
        }
        if self.s > self.p {
            return bad(format!("s={} exceeds p={}", self.s, self.p));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1) (got {})", self.rho));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return bad(format!("snr must be positive (got {})", self.snr));
        }
        if self.reps == 0 {
            return bad("reps must be positive".into());
        }
        if self.s < 2 && matches!(self.beta_type, BetaType::Spread | BetaType::Graded) {
            return bad(format!("beta_type {} needs s >= 2", self.beta_type.code()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Solver knobs a scenario file may override.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub nlambda: Option<usize>,
    pub eps: Option<f64>,
    pub kmax: Option<usize>,
    pub budget_seconds: Option<f64>,
    pub restarts: Option<usize>,
}

/// Declarative scenario file. `snr` and `rho` may be scalars or lists; the
/// file expands to their cross product.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub setting: Option<String>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub s: Option<usize>,
    pub beta_type: BetaType,
    pub rho: OneOrMany,
    pub snr: OneOrMany,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverOverrides,
}

fn default_reps() -> usize {
    10
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Scenario(e.to_string())
        })
    }

    /// All `(rho, snr)` combinations, rho-major.
    pub fn expand(&self) -> Result<Vec<ScenarioSpec>> {
        let (setting, (n, p, s)) = match (&self.setting, self.n, self.p, self.s) {
            (Some(name), None, None, None) => {
                let st = Setting::parse(name).ok_or_else(|| {
                    Error::Scenario(format!(
                        "field `setting`: unknown setting {name:?} (low, medium, high-5, high-10)"
                    ))
                })?;
                (st.name().to_string(), st.dims())
            }
            (None, Some(n), Some(p), Some(s)) => ("custom".to_string(), (n, p, s)),
            (Some(_), ..) => {
                return Err(Error::Scenario(
                    "give either `setting` or all of `n`, `p`, `s`, not both".into(),
                ))
            }
            _ => {
                return Err(Error::Scenario(
                    "missing field: `setting` or all of `n`, `p`, `s`".into(),
                ))
            }
        };
        let (rhos, snrs) = (self.rho.values(), self.snr.values());
        if rhos.is_empty() || snrs.is_empty() {
            return Err(Error::Scenario("`rho` and `snr` lists must be nonempty".into()));
        }
        let mut out = Vec::with_capacity(rhos.len() * snrs.len());
        for &rho in &rhos {
            for &snr in &snrs {
                let spec = ScenarioSpec {
                    setting: setting.clone(),
                    n,
                    p,
                    s,
                    beta_type: self.beta_type,
                    rho,
                    snr,
                    reps: self.reps,
                    seed: self.seed,
                };
                spec.validate()?;
                out.push(spec);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_pattern() {
        let b: Vec<f64> = make_coefficients(10, 5, BetaType::Leading).unwrap();
        assert_eq!(b, vec![1., 1., 1., 1., 1., 0., 0., 0., 0., 0.]);
        let dense: Vec<f64> = make_coefficients(4, 4, BetaType::Leading).unwrap();
        assert_eq!(dense, vec![1.0; 4]);
    }

    #[test]
    fn decaying_pattern() {
        let b: Vec<f64> = make_coefficients(6, 3, BetaType::Decaying).unwrap();
        assert_eq!(b, vec![1.0, 1.0, 1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn spread_pattern_hits_both_ends() {
        let b: Vec<f64> = make_coefficients(10, 3, BetaType::Spread).unwrap();
        // indices round(1 + (j-1)*9/2) = 1, 5.5 -> 6, 10 (1-based)
        let idx: Vec<usize> = (0..10).filter(|&i| b[i] != 0.0).collect();
        assert_eq!(idx, vec![0, 5, 9]);
        let b: Vec<f64> = make_coefficients(5, 5, BetaType::Spread).unwrap();
        assert_eq!(b, vec![1.0; 5]);
    }

    #[test]
    fn graded_pattern() {
        let b: Vec<f64> = make_coefficients(8, 5, BetaType::Graded).unwrap();
        let expect = [10.0, 7.625, 5.25, 2.875, 0.5, 0.0, 0.0, 0.0];
        for (a, e) in b.iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_spacing_rejected() {
        assert!(make_coefficients::<f64>(5, 1, BetaType::Spread).is_err());
        assert!(make_coefficients::<f64>(5, 1, BetaType::Graded).is_err());
        assert!(make_coefficients::<f64>(5, 1, BetaType::Leading).is_ok());
        assert!(make_coefficients::<f64>(5, 6, BetaType::Leading).is_err());
        assert!(make_coefficients::<f64>(5, 0, BetaType::Leading).is_err());
    }

    #[test]
    fn covariance_entries() {
        let c = Ar1Covariance::new(3, 0.5).unwrap();
        let expect = Matrix::<f64>::from_rows(&[
            vec![1.0, 0.5, 0.25],
            vec![0.5, 1.0, 0.5],
            vec![0.25, 0.5, 1.0],
        ])
        .unwrap();
        assert_eq!(c.dense(), expect);
        assert_eq!(Ar1Covariance::new(3, 0.0).unwrap().dense(), Matrix::identity(3));
        for rho in [0.0, 0.35, 0.9] {
            let c = Ar1Covariance::new(4, rho).unwrap();
            assert_eq!(c.quad_form(&[1.0, 0.0, 0.0, 0.0]), 1.0);
        }
        assert!(Ar1Covariance::new(3, 1.0).is_err());
        assert!(Ar1Covariance::new(3, -0.1).is_err());
    }

    #[test]
    fn recursion_is_lower_cholesky() {
        let c = Ar1Covariance::<f64>::new(6, 0.7).unwrap();
        let l = c.cholesky();
        let z = [0.3, -1.2, 0.8, 2.0, -0.1, 0.5];
        let mut v = z;
        c.correlate(&mut v);
        let lz = l.mul_vec(&z);
        for (a, b) in v.iter().zip(&lz) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_variance_cases() {
        let b: Vec<f64> = make_coefficients(10, 5, BetaType::Leading).unwrap();
        let c0 = Ar1Covariance::new(10, 0.0).unwrap();
        assert_eq!(noise_variance(&b, &c0, 1.0).unwrap(), 5.0);
        let a = noise_variance(&b, &c0, 2.0).unwrap();
        assert_eq!(a, 2.5);
        assert!(noise_variance(&[0.0; 10], &c0, 1.0).is_err());
        assert!(noise_variance(&b, &c0, 0.0).is_err());
    }

    #[test]
    fn scenario_file_expands() {
        let f = ScenarioFile::from_json(
            r#"{"setting":"low","beta_type":2,"rho":0.35,"snr":[0.25,6.0],"seed":7}"#,
        )
        .unwrap();
        let specs = f.expand().unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!((specs[0].n, specs[0].p, specs[0].s), (100, 10, 5));
        assert_eq!(specs[1].snr, 6.0);
        assert_eq!(specs[0].reps, 10);
    }

    #[test]
    fn scenario_file_diagnostics() {
        let err = ScenarioFile::from_json("{\"setting\":\"low\",\n\"beta_type\":4}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let f = ScenarioFile::from_json(
            r#"{"setting":"huge","beta_type":2,"rho":0.0,"snr":1.0,"seed":1}"#,
        )
        .unwrap();
        assert!(f.expand().unwrap_err().to_string().contains("setting"));
        let f = ScenarioFile::from_json(
            r#"{"n":10,"p":5,"s":6,"beta_type":2,"rho":0.0,"snr":1.0,"seed":1}"#,
        )
        .unwrap();
        assert!(f.expand().is_err());
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = child_stream(1, 0, StreamPurpose::Train, 0).random();
        let b: u64 = child_stream(1, 0, StreamPurpose::Train, 0).random();
        let c: u64 = child_stream(1, 1, StreamPurpose::Train, 0).random();
        let d: u64 = child_stream(1, 0, StreamPurpose::Validation, 0).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
