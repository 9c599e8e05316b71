use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use sparsebench::datagen::ScenarioFile;
use sparsebench::harness::{run_scenario, Method, ScenarioKey, SolverConfig, Tuning};
use sparsebench::io;

use crate::output::{InputError, OutDir};
use crate::{SimulateArgs, TuningArg};

pub const LONG: &str = "results_long.csv";
pub const SUMMARY: &str = "summary.csv";
pub const TIMING: &str = "timing.csv";
pub const FAILURES: &str = "failures.csv";

pub fn run(a: SimulateArgs) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(&a.scenario)
        .with_context(|| format!("reading {}", a.scenario.display()))?;
    let mut file = ScenarioFile::from_json(&text).with_context(|| format!("in {}", a.scenario.display()))?;
    if let Some(r) = a.reps {
        file.reps = r;
    }
    if let Some(s) = a.seed {
        file.seed = s;
    }
    let specs = file.expand().with_context(|| format!("in {}", a.scenario.display()))?;
    let methods = Method::parse_list(&a.methods)?;
    let tuning = match a.tuning {
        TuningArg::Val => Tuning::Validation,
        TuningArg::Oracle => Tuning::Oracle,
        TuningArg::Both => Tuning::Both,
    };
    let mut cfg = SolverConfig::default();
    cfg.apply_overrides(&file.solver);
    if let Some(b) = a.budget_seconds {
        if !(b >= 0.0) {
            return Err(InputError(format!("--budget-seconds must be nonnegative (got {b})")).into());
        }
        cfg.bnb.budget_seconds = b;
    }

    let out = OutDir::prepare(&a.out.out, &[LONG, SUMMARY, TIMING, FAILURES], a.out.force)?;
    let mut long = out.create(LONG)?;
    let mut failures = out.create(FAILURES)?;
    io::write_failures_header(&mut failures)?;
    io::write_long_header(&mut long)?;
    let mut summary = Vec::new();
    let mut timing = Vec::new();
    let mut partial = false;
    for spec in &specs {
        let t = Instant::now();
        let res = run_scenario(spec, &methods, tuning, &cfg)?;
        io::write_long_rows(&res.records, &mut long)?;
        io::write_failure_rows(&ScenarioKey::from_spec(spec), &res.failures, &mut failures)?;
        partial |= res.is_partial();
        println!(
            "{} n={} p={} s={} type={} rho={} snr={}: {} reps, {} records, {} failures, {:.1}s",
            spec.setting,
            spec.n,
            spec.p,
            spec.s,
            spec.beta_type.code(),
            spec.rho,
            spec.snr,
            spec.reps,
            res.records.len(),
            res.failures.len(),
            t.elapsed().as_secs_f64()
        );
        summary.extend(res.summary);
        timing.extend(res.timing_summary);
    }
    long.flush()?;
    failures.flush()?;
    io::write_summary(&summary, out.create(SUMMARY)?)?;
    io::write_timing(&timing, out.create(TIMING)?)?;
    Ok(if partial { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
