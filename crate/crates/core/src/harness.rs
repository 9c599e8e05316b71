//! Simulation pipeline: draw training and validation data, fit every
//! method's full path, choose a tuning index (validation set or oracle),
//! score against the truth and aggregate across repetitions.
//!
//! All numbers are in `f64`. Repetitions run in parallel on their own
//! random streams and are reduced in repetition order, so results do not
//! depend on the thread count.

use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::datagen::{child_stream, sample_dataset, Dataset, GroundTruth, ScenarioSpec, StreamPurpose};
use crate::error::{invalid, Error, Result};
use crate::lasso::{self, default_eps, gamma_grid, lambda_grid, lasso_path, relaxed_path, CdOptions};
use crate::linalg::{residual, sq_norm, Matrix};
use crate::metrics::{self, excess_risk, Scores};
use crate::stepwise::fs_path;
use crate::subset::{bs_path, BnbOptions};

/// Estimators compared by the harness. Tokens are stable across outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Lasso,
    Relaxo,
    Fs,
    Bs,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lasso, Method::Relaxo, Method::Fs, Method::Bs];

    pub fn token(self) -> &'static str {
        match self {
            Method::Lasso => "lasso",
            Method::Relaxo => "relaxo",
            Method::Fs => "fs",
            Method::Bs => "bs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.token() == s)
    }

    /// Comma-separated list of tokens.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let m = Self::parse(tok)
                .ok_or_else(|| invalid(format!("unknown method {tok:?} (lasso, relaxo, fs, bs)")))?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(invalid("no methods given"));
        }
        out.sort();
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TuningRule {
    Validation,
    Oracle,
}

impl TuningRule {
    pub fn token(self) -> &'static str {
        match self {
            TuningRule::Validation => "val",
            TuningRule::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "val" => Some(TuningRule::Validation),
            "oracle" => Some(TuningRule::Oracle),
            _ => None,
        }
    }
}

/// Which tuning rules a run applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tuning {
    Validation,
    Oracle,
    Both,
}

impl Tuning {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "val" => Some(Tuning::Validation),
            "oracle" => Some(Tuning::Oracle),
            "both" => Some(Tuning::Both),
            _ => None,
        }
    }

    pub fn rules(self) -> Vec<TuningRule> {
        match self {
            Tuning::Validation => vec![TuningRule::Validation],
            Tuning::Oracle => vec![TuningRule::Oracle],
            Tuning::Both => vec![TuningRule::Validation, TuningRule::Oracle],
        }
    }
}

/// Solver settings; `None` fields resolve from the problem dimensions.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Lasso grid size: 50 in the low setting, 100 otherwise.
    pub nlambda: Option<usize>,
    /// Grid end as a fraction of `λ_max`; see [`lasso::default_eps`].
    pub eps: Option<f64>,
    pub ngamma: usize,
    /// Largest subset size for stepwise and best subset: `min(n, p, 50)`.
    pub kmax: Option<usize>,
    pub cd: CdOptions<f64>,
    pub bnb: BnbOptions<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nlambda: None,
            eps: None,
            ngamma: 10,
            kmax: None,
            cd: CdOptions::default(),
            bnb: BnbOptions::default(),
        }
    }
}

impl SolverConfig {
    pub fn apply_overrides(&mut self, o: &crate::datagen::SolverOverrides) {
        if let Some(v) = o.nlambda {
            self.nlambda = Some(v);
        }
        if let Some(v) = o.eps {
            self.eps = Some(v);
        }
        if let Some(v) = o.kmax {
            self.kmax = Some(v);
        }
        if let Some(v) = o.budget_seconds {
            self.bnb.budget_seconds = v;
        }
        if let Some(v) = o.restarts {
            self.bnb.restarts = v;
        }
    }

    pub fn nlambda_for(&self, setting: &str) -> usize {
        self.nlambda.unwrap_or(if setting == "low" { 50 } else { 100 })
    }

    pub fn eps_for(&self, n: usize, p: usize) -> f64 {
        self.eps.unwrap_or_else(|| default_eps(n, p))
    }

    pub fn kmax_for(&self, n: usize, p: usize) -> usize {
        self.kmax.unwrap_or(50).min(n).min(p).max(1)
    }
}

/// Parameter value behind one path entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TuningLabel {
    Lambda(f64),
    Relaxed { lambda: f64, gamma: f64 },
    Step(usize),
}

/// Ordered coefficient vectors indexed by tuning parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPath {
    pub labels: Vec<TuningLabel>,
    pub betas: Vec<Vec<f64>>,
}

impl CoefficientPath {
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn from_lasso(path: &lasso::LassoPath<f64>) -> Self {
        Self {
            labels: path.lambdas.iter().map(|&l| TuningLabel::Lambda(l)).collect(),
            betas: path.betas.clone(),
        }
    }

    /// Flattens the `(λ, γ)` grid λ-major.
    pub fn from_relaxed(path: &lasso::RelaxedPath<f64>) -> Self {
        let mut labels = Vec::new();
        let mut betas = Vec::new();
        for (i, &lambda) in path.base.lambdas.iter().enumerate() {
            for (g, &gamma) in path.gammas.iter().enumerate() {
                labels.push(TuningLabel::Relaxed { lambda, gamma });
                betas.push(path.betas[i][g].clone());
            }
        }
        Self { labels, betas }
    }

    /// Steps `0..=kmax`; a truncated stepwise path repeats its last model.
    pub fn from_steps(betas: Vec<Vec<f64>>, kmax: usize) -> Self {
        let mut betas = betas;
        while betas.len() < kmax + 1 {
            let last = betas.last().expect("stepwise path has the empty model").clone();
            betas.push(last);
        }
        Self {
            labels: (0..betas.len()).map(TuningLabel::Step).collect(),
            betas,
        }
    }
}

/// A method's fitted path plus bookkeeping.
#[derive(Debug, Clone)]
pub struct MethodFit {
    pub method: Method,
    pub path: CoefficientPath,
    pub seconds: f64,
    /// Certified best-subset solutions on the path (best subset only).
    pub certified: Option<usize>,
}

/// Fits the requested methods on one dataset. The lasso path is computed
/// once and shared with the relaxed lasso.
pub fn fit_methods(
    methods: &[Method],
    data: &Dataset<f64>,
    setting: &str,
    cfg: &SolverConfig,
    subset_seed: (u64, u64),
) -> Vec<(Method, Result<MethodFit>)> {
    let (x, y) = (&data.x, &data.y);
    let (n, p) = (data.n(), data.p());
    let mut out = Vec::new();
    let needs_lasso = methods.iter().any(|m| matches!(m, Method::Lasso | Method::Relaxo));
    let lasso_fit = needs_lasso.then(|| {
        let t = Instant::now();
        let res = lambda_grid(x, y, cfg.nlambda_for(setting), cfg.eps_for(n, p))
            .and_then(|g| lasso_path(x, y, &g.values, &cfg.cd));
        (res, t.elapsed().as_secs_f64())
    });
    for &m in methods {
        let fit = match m {
            Method::Lasso => {
                let (res, secs) = lasso_fit.as_ref().expect("lasso path computed");
                match res {
                    Ok(path) => Ok(MethodFit {
                        method: m,
                        path: CoefficientPath::from_lasso(path),
                        seconds: *secs,
                        certified: None,
                    }),
                    Err(e) => Err(invalid(e.to_string())),
                }
            }
            Method::Relaxo => {
                let (res, secs) = lasso_fit.as_ref().expect("lasso path computed");
                match res {
                    Ok(path) => {
                        let t = Instant::now();
                        relaxed_path(x, y, path.clone(), &gamma_grid(cfg.ngamma)).map(|r| MethodFit {
                            method: m,
                            path: CoefficientPath::from_relaxed(&r),
                            seconds: secs + t.elapsed().as_secs_f64(),
                            certified: None,
                        })
                    }
                    Err(e) => Err(invalid(e.to_string())),
                }
            }
            Method::Fs => {
                let t = Instant::now();
                let kmax = cfg.kmax_for(n, p);
                fs_path(x, y, kmax).map(|fs| MethodFit {
                    method: m,
                    path: CoefficientPath::from_steps(fs.betas, kmax),
                    seconds: t.elapsed().as_secs_f64(),
                    certified: None,
                })
            }
            Method::Bs => {
                let t = Instant::now();
                let kmax = cfg.kmax_for(n, p);
                let mut rng = child_stream(subset_seed.0, subset_seed.1, StreamPurpose::Subset, 0);
                bs_path(x, y, kmax, &cfg.bnb, &mut rng).map(|bs| MethodFit {
                    method: m,
                    certified: Some(bs.certified_count()),
                    path: CoefficientPath::from_steps(
                        bs.solutions.into_iter().map(|s| s.beta).collect(),
                        kmax,
                    ),
                    seconds: t.elapsed().as_secs_f64(),
                })
            }
        };
        out.push((m, fit));
    }
    out
}

fn pick_min(errors: &[f64], nnz: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..errors.len() {
        let better = errors[i] < errors[best] || (errors[i] == errors[best] && nnz[i] < nnz[best]);
        if better {
            best = i;
        }
    }
    best
}

/// Index minimizing validation error `‖ỹ - X̃β‖²`, ties to the sparser
/// model, then the lower index.
pub fn tune_validation(path: &CoefficientPath, val: &Dataset<f64>) -> Result<usize> {
    if path.is_empty() {
        return Err(invalid("empty coefficient path"));
    }
    let errors: Vec<f64> = path.betas.iter().map(|b| sq_norm(&residual(&val.x, &val.y, b))).collect();
    let nnz: Vec<f64> = path.betas.iter().map(|b| metrics::nnz(b) as f64).collect();
    Ok(pick_min(&errors, &nnz))
}

/// Validation errors along a path.
pub fn validation_errors(path: &CoefficientPath, val: &Dataset<f64>) -> Vec<f64> {
    path.betas.iter().map(|b| sq_norm(&residual(&val.x, &val.y, b))).collect()
}

/// Shared index minimizing the across-repetition average of
/// `(β̂-β₀)ᵀΣ(β̂-β₀)`; ties to the lower average sparsity, then lower index.
pub fn tune_oracle(paths: &[CoefficientPath], truth: &GroundTruth<f64>) -> Result<usize> {
    let risks: Vec<Vec<f64>> = paths
        .iter()
        .map(|p| p.betas.iter().map(|b| excess_risk(b, truth)).collect())
        .collect();
    let nnz: Vec<Vec<usize>> = paths
        .iter()
        .map(|p| p.betas.iter().map(|b| metrics::nnz(b)).collect())
        .collect();
    oracle_index(&risks, &nnz)
}

fn oracle_index(risks: &[Vec<f64>], nnz: &[Vec<usize>]) -> Result<usize> {
    let Some(first) = risks.first() else {
        return Err(invalid("oracle tuning needs at least one repetition"));
    };
    let len = first.len();
    if len == 0 || risks.iter().any(|r| r.len() != len) {
        return Err(Error::Shape("repetitions have mismatched tuning grids".into()));
    }
    let reps = risks.len() as f64;
    let avg: Vec<f64> = (0..len).map(|t| risks.iter().map(|r| r[t]).sum::<f64>() / reps).collect();
    let avg_nnz: Vec<f64> = (0..len)
        .map(|t| nnz.iter().map(|r| r[t] as f64).sum::<f64>() / reps)
        .collect();
    Ok(pick_min(&avg, &avg_nnz))
}

/// Scenario identifiers carried by every output row.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioKey {
    pub setting: String,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub beta_type: u8,
    pub rho: f64,
    pub snr: f64,
}

impl ScenarioKey {
    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        Self {
            setting: spec.setting.clone(),
            n: spec.n,
            p: spec.p,
            s: spec.s,
            beta_type: spec.beta_type.code(),
            rho: spec.rho,
            snr: spec.snr,
        }
    }

    fn group_id(&self) -> (String, usize, usize, usize, u8, u64, u64) {
        (
            self.setting.clone(),
            self.n,
            self.p,
            self.s,
            self.beta_type,
            self.rho.to_bits(),
            self.snr.to_bits(),
        )
    }
}

/// One `(scenario, repetition, method, tuning rule)` outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub scenario: ScenarioKey,
    pub method: Method,
    pub rule: TuningRule,
    pub rep: usize,
    pub rr: f64,
    pub rte: f64,
    pub pve: f64,
    pub nnz: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Rr,
    Rte,
    Pve,
    Nnz,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Rr, Metric::Rte, Metric::Pve, Metric::Nnz];

    pub fn token(self) -> &'static str {
        match self {
            Metric::Rr => "rr",
            Metric::Rte => "rte",
            Metric::Pve => "pve",
            Metric::Nnz => "nnz",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.token() == s)
    }
}

impl MetricRecord {
    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Rr => self.rr,
            Metric::Rte => self.rte,
            Metric::Pve => self.pve,
            Metric::Nnz => self.nnz as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub method: Method,
    pub rep: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub method: Method,
    pub rep: usize,
    pub seconds: f64,
    pub path_len: usize,
    pub certified: Option<usize>,
}

/// Mean and standard error of one metric for one method in one scenario,
/// with the reference lines for that scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: ScenarioKey,
    pub method: Method,
    pub rule: TuningRule,
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`; NaN for a single rep.
    pub se: f64,
    pub count: usize,
    /// `ν + 1`
    pub null_rte: f64,
    /// `ν / (1 + ν)`
    pub perfect_pve: f64,
    pub true_s: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub scenario: ScenarioKey,
    pub method: Method,
    pub mean_seconds: f64,
    pub se_seconds: f64,
    pub paths: usize,
    pub path_len: usize,
    pub mean_certified: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub spec: ScenarioSpec,
    /// Sorted by rule, then repetition, then method.
    pub records: Vec<MetricRecord>,
    /// Chosen tuning index for every record, aligned with `records`.
    pub chosen: Vec<usize>,
    pub timings: Vec<TimingRecord>,
    pub failures: Vec<Failure>,
    pub summary: Vec<SummaryRow>,
    pub timing_summary: Vec<TimingRow>,
}

impl RunResult {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

struct PathScore {
    risks: Vec<f64>,
    nnz: Vec<usize>,
    val_index: usize,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Groups records by (scenario, method, rule) in first-appearance order and
/// summarizes each metric.
pub fn aggregate(records: &[MetricRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<(ScenarioKey, Method, TuningRule)> = Vec::new();
    let mut groups: HashMap<_, Vec<&MetricRecord>> = HashMap::new();
    for r in records {
        let id = (r.scenario.group_id(), r.method, r.rule);
        groups
            .entry(id)
            .or_insert_with(|| {
                order.push((r.scenario.clone(), r.method, r.rule));
                Vec::new()
            })
            .push(r);
    }
    let mut out = Vec::with_capacity(order.len() * Metric::ALL.len());
    for (key, method, rule) in order {
        let members = &groups[&(key.group_id(), method, rule)];
        for metric in Metric::ALL {
            let vals: Vec<f64> = members.iter().map(|r| r.value(metric)).collect();
            let (mean, se) = mean_se(&vals);
            out.push(SummaryRow {
                null_rte: key.snr + 1.0,
                perfect_pve: crate::datagen::population_pve(key.snr),
                true_s: key.s,
                scenario: key.clone(),
                method,
                rule,
                metric,
                mean,
                se,
                count: vals.len(),
            });
        }
    }
    out
}

fn summarize_timings(key: &ScenarioKey, timings: &[TimingRecord], methods: &[Method]) -> Vec<TimingRow> {
    methods
        .iter()
        .filter_map(|&m| {
            let rows: Vec<&TimingRecord> = timings.iter().filter(|t| t.method == m).collect();
            if rows.is_empty() {
                return None;
            }
            let secs: Vec<f64> = rows.iter().map(|t| t.seconds).collect();
            let (mean, se) = mean_se(&secs);
            let cert: Vec<f64> = rows.iter().filter_map(|t| t.certified.map(|c| c as f64)).collect();
            Some(TimingRow {
                scenario: key.clone(),
                method: m,
                mean_seconds: mean,
                se_seconds: se,
                paths: rows.len(),
                path_len: rows[0].path_len,
                mean_certified: (!cert.is_empty()).then(|| cert.iter().sum::<f64>() / cert.len() as f64),
            })
        })
        .collect()
}

/// Runs every repetition of `spec`.
pub fn run_scenario(
    spec: &ScenarioSpec,
    methods: &[Method],
    tuning: Tuning,
    cfg: &SolverConfig,
) -> Result<RunResult> {
    spec.validate()?;
    if methods.is_empty() {
        return Err(invalid("no methods requested"));
    }
    let truth: GroundTruth<f64> = GroundTruth::from_spec(spec)?;
    let key = ScenarioKey::from_spec(spec);

    type RepOut = Vec<(Method, Result<(PathScore, f64, usize, Option<usize>)>)>;
    let per_rep: Vec<RepOut> = (0..spec.reps)
        .into_par_iter()
        .map(|rep| {
            let mut train_rng = child_stream(spec.seed, rep as u64, StreamPurpose::Train, 0);
            let mut val_rng = child_stream(spec.seed, rep as u64, StreamPurpose::Validation, 0);
            let train = sample_dataset(spec.n, &truth, &mut train_rng);
            let val = sample_dataset(spec.n, &truth, &mut val_rng);
            fit_methods(methods, &train, &spec.setting, cfg, (spec.seed, rep as u64))
                .into_iter()
                .map(|(m, fit)| {
                    let scored = fit.and_then(|f| {
                        let val_index = tune_validation(&f.path, &val)?;
                        let risks = f.path.betas.iter().map(|b| excess_risk(b, &truth)).collect();
                        let nnz = f.path.betas.iter().map(|b| metrics::nnz(b)).collect();
                        Ok((
                            PathScore {
                                risks,
                                nnz,
                                val_index,
                            },
                            f.seconds,
                            f.path.len(),
                            f.certified,
                        ))
                    });
                    (m, scored)
                })
                .collect()
        })
        .collect();

    let mut failures = Vec::new();
    let mut timings = Vec::new();
    let mut scored: Vec<Vec<(Method, PathScore)>> = Vec::with_capacity(spec.reps);
    for (rep, outs) in per_rep.into_iter().enumerate() {
        let mut row = Vec::new();
        for (method, res) in outs {
            match res {
                Ok((ps, seconds, path_len, certified)) => {
                    timings.push(TimingRecord {
                        method,
                        rep,
                        seconds,
                        path_len,
                        certified,
                    });
                    row.push((method, ps));
                }
                Err(e) => failures.push(Failure {
                    method,
                    rep,
                    message: e.to_string(),
                }),
            }
        }
        scored.push(row);
    }

    let record = |method, rule, rep, q: f64, nnz: usize| {
        let s = Scores::from_excess_risk(q, nnz, &truth);
        MetricRecord {
            scenario: key.clone(),
            method,
            rule,
            rep,
            rr: s.rr,
            rte: s.rte,
            pve: s.pve,
            nnz: s.nnz,
        }
    };

    let mut records = Vec::new();
    let mut chosen = Vec::new();
    for rule in tuning.rules() {
        let oracle: HashMap<Method, usize> = if rule == TuningRule::Oracle {
            let mut m = HashMap::new();
            for &method in methods {
                let (risks, nnz): (Vec<_>, Vec<_>) = scored
                    .iter()
                    .flat_map(|row| row.iter().filter(|(mm, _)| *mm == method))
                    .map(|(_, ps)| (ps.risks.clone(), ps.nnz.clone()))
                    .unzip();
                if risks.is_empty() {
                    continue;
                }
                match oracle_index(&risks, &nnz) {
                    Ok(i) => {
                        m.insert(method, i);
                    }
                    Err(e) => failures.push(Failure {
                        method,
                        rep: usize::MAX,
                        message: format!("oracle tuning: {e}"),
                    }),
                }
            }
            m
        } else {
            HashMap::new()
        };
        for (rep, row) in scored.iter().enumerate() {
            for (method, ps) in row {
                let idx = match rule {
                    TuningRule::Validation => ps.val_index,
                    TuningRule::Oracle => match oracle.get(method) {
                        Some(&i) => i,
                        None => continue,
                    },
                };
                records.push(record(*method, rule, rep, ps.risks[idx], ps.nnz[idx]));
                chosen.push(idx);
            }
        }
    }
    let summary = aggregate(&records);
    let timing_summary = summarize_timings(&key, &timings, methods);
    Ok(RunResult {
        spec: spec.clone(),
        records,
        chosen,
        timings,
        failures,
        summary,
        timing_summary,
    })
}

/// Design matrix and truth for a fixed-`X` degrees-of-freedom study.
pub fn fixed_design(spec: &ScenarioSpec) -> Result<(Matrix<f64>, GroundTruth<f64>)> {
    spec.validate()?;
    let truth = GroundTruth::from_spec(spec)?;
    let mut rng = child_stream(spec.seed, 0, StreamPurpose::Train, 0);
    let x = crate::datagen::sample_predictors(spec.n, &truth.cov, &mut rng);
    Ok((x, truth))
}

/// Fitting procedures for a degrees-of-freedom study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DfMethod {
    Null,
    Ols,
    Lasso,
    Fs,
    Bs,
}

impl DfMethod {
    pub const ALL: [DfMethod; 5] = [DfMethod::Null, DfMethod::Ols, DfMethod::Lasso, DfMethod::Fs, DfMethod::Bs];

    pub fn token(self) -> &'static str {
        match self {
            DfMethod::Null => "null",
            DfMethod::Ols => "ols",
            DfMethod::Lasso => "lasso",
            DfMethod::Fs => "fs",
            DfMethod::Bs => "bs",
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let m = Self::ALL
                .into_iter()
                .find(|m| m.token() == tok)
                .ok_or_else(|| invalid(format!("unknown df method {tok:?} (null, ols, lasso, fs, bs)")))?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(invalid("no methods given"));
        }
        out.sort();
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct DfConfig {
    /// Lasso grid size; the grid comes from one pilot response draw.
    pub nlambda: usize,
    pub kmax: usize,
    pub cd: CdOptions<f64>,
    pub bnb: BnbOptions<f64>,
}

/// One method's degrees-of-freedom curve; `tuning` holds `λ` for the lasso
/// and the subset size otherwise.
#[derive(Debug, Clone)]
pub struct DfStudy {
    pub method: DfMethod,
    pub tuning: Vec<f64>,
    pub curve: metrics::DfCurve,
}

/// Monte Carlo degrees of freedom with `X` drawn once from `spec` and
/// `spec.reps` noise draws.
pub fn df_study(spec: &ScenarioSpec, methods: &[DfMethod], cfg: &DfConfig) -> Result<Vec<DfStudy>> {
    let (x, truth) = fixed_design(spec)?;
    let (n, p) = (spec.n, spec.p);
    let kmax = cfg.kmax.min(n).min(p);
    if kmax == 0 {
        return Err(invalid("kmax must be positive"));
    }
    let noise = |rep: u64| child_stream(spec.seed, rep, StreamPurpose::Noise, 0);
    let mut out = Vec::new();
    for &m in methods {
        let (tuning, curve) = match m {
            DfMethod::Null => (
                vec![0.0],
                metrics::df_montecarlo(|x, _| Ok(vec![vec![0.0; x.ncols()]]), &x, &truth, spec.reps, noise)?,
            ),
            DfMethod::Ols => (
                vec![p as f64],
                metrics::df_montecarlo(|x, y| Ok(vec![crate::linalg::lstsq(x, y).coef]), &x, &truth, spec.reps, noise)?,
            ),
            DfMethod::Lasso => {
                let mut pilot = child_stream(spec.seed, 0, StreamPurpose::Pilot, 0);
                let y0 = crate::datagen::sample_response(&x, &truth, &mut pilot);
                let grid = lambda_grid(&x, &y0, cfg.nlambda, default_eps(n, p))?.values;
                let curve = metrics::df_montecarlo(
                    |x, y| Ok(lasso_path(x, y, &grid, &cfg.cd)?.betas),
                    &x,
                    &truth,
                    spec.reps,
                    noise,
                )?;
                (grid, curve)
            }
            DfMethod::Fs => (
                (0..=kmax).map(|k| k as f64).collect(),
                metrics::df_montecarlo(
                    |x, y| Ok(CoefficientPath::from_steps(fs_path(x, y, kmax)?.betas, kmax).betas),
                    &x,
                    &truth,
                    spec.reps,
                    noise,
                )?,
            ),
            DfMethod::Bs => (
                (0..=kmax).map(|k| k as f64).collect(),
                metrics::df_montecarlo(
                    |x, y| {
                        let mut rng = child_stream(spec.seed, 0, StreamPurpose::Subset, 0);
                        let path = bs_path(x, y, kmax, &cfg.bnb, &mut rng)?;
                        Ok(path.solutions.into_iter().map(|s| s.beta).collect())
                    },
                    &x,
                    &truth,
                    spec.reps,
                    noise,
                )?,
            ),
        };
        out.push(DfStudy {
            method: m,
            tuning,
            curve,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::BetaType;

    fn tiny_spec(reps: usize) -> ScenarioSpec {
        ScenarioSpec {
            setting: "custom".into(),
            n: 30,
            p: 6,
            s: 3,
            beta_type: BetaType::Leading,
            rho: 0.35,
            snr: 1.0,
            reps,
            seed: 11,
        }
    }

    fn quick_cfg() -> SolverConfig {
        let mut cfg = SolverConfig {
            nlambda: Some(20),
            ..SolverConfig::default()
        };
        cfg.bnb.budget_seconds = 5.0;
        cfg.bnb.restarts = 5;
        cfg
    }

    #[test]
    fn method_tokens_roundtrip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.token()), Some(m));
        }
        assert_eq!(
            Method::parse_list("bs, lasso,lasso").unwrap(),
            vec![Method::Lasso, Method::Bs]
        );
        assert!(Method::parse_list("ridge").is_err());
    }

    #[test]
    fn lasso_smoke_emits_one_row_per_rep() {
        let res = run_scenario(&tiny_spec(3), &[Method::Lasso], Tuning::Validation, &quick_cfg()).unwrap();
        assert_eq!(res.records.len(), 3);
        assert!(res.failures.is_empty());
    }

    #[test]
    fn single_entry_path_selects_zero() {
        let path = CoefficientPath {
            labels: vec![TuningLabel::Step(0)],
            betas: vec![vec![0.0; 2]],
        };
        let val = Dataset::new(Matrix::identity(2), vec![1.0, 2.0]).unwrap();
        assert_eq!(tune_validation(&path, &val).unwrap(), 0);
    }

    #[test]
    fn validation_ties_prefer_sparser() {
        let path = CoefficientPath {
            labels: vec![TuningLabel::Step(0), TuningLabel::Step(1)],
            betas: vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        };
        let val = Dataset::new(Matrix::identity(2), vec![1.0, 0.0]).unwrap();
        assert_eq!(tune_validation(&path, &val).unwrap(), 0);
        let path = CoefficientPath {
            labels: vec![TuningLabel::Step(0), TuningLabel::Step(1)],
            betas: vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        };
        let val = Dataset::new(Matrix::identity(2), vec![0.75, 0.25]).unwrap();
        // equal error 0.125 each, second is sparser
        assert_eq!(tune_validation(&path, &val).unwrap(), 1);
    }

    #[test]
    fn oracle_rejects_mismatched_grids() {
        let risks = vec![vec![1.0, 0.5], vec![1.0]];
        let nnz = vec![vec![0, 1], vec![0]];
        assert!(oracle_index(&risks, &nnz).is_err());
        let risks = vec![vec![1.0, 0.5, 0.7]];
        let nnz = vec![vec![0, 1, 2]];
        assert_eq!(oracle_index(&risks, &nnz).unwrap(), 1);
    }

    #[test]
    fn oracle_is_order_invariant() {
        let a = vec![vec![1.0, 0.4, 0.6], vec![1.0, 0.9, 0.3], vec![1.0, 0.5, 0.5]];
        let nnz = vec![vec![0, 1, 2]; 3];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(oracle_index(&a, &nnz).unwrap(), oracle_index(&b, &nnz).unwrap());
    }

    #[test]
    fn constant_records_have_zero_se() {
        let key = ScenarioKey::from_spec(&tiny_spec(2));
        let rec = |rep| MetricRecord {
            scenario: key.clone(),
            method: Method::Fs,
            rule: TuningRule::Validation,
            rep,
            rr: 0.5,
            rte: 1.5,
            pve: 0.25,
            nnz: 3,
        };
        let s = aggregate(&[rec(0), rec(1), rec(2)]);
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|r| r.se == 0.0 && r.count == 3));
    }

    #[test]
    fn truncated_steps_are_padded() {
        let p = CoefficientPath::from_steps(vec![vec![0.0], vec![1.0]], 3);
        assert_eq!(p.len(), 4);
        assert_eq!(p.betas[3], vec![1.0]);
    }

    #[test]
    fn kmax_defaults() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.kmax_for(100, 10), 10);
        assert_eq!(cfg.kmax_for(500, 100), 50);
        assert_eq!(cfg.kmax_for(50, 1000), 50);
        assert_eq!(cfg.nlambda_for("low"), 50);
        assert_eq!(cfg.nlambda_for("medium"), 100);
    }
}
