use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use sparsebench::datagen::{child_stream, StreamPurpose};
use sparsebench::harness::{tune_validation, CoefficientPath, Method, SolverConfig, TuningLabel};
use sparsebench::io;
use sparsebench::lasso::{gamma_grid, lambda_grid, lasso_path, relaxed_path};
use sparsebench::stepwise::fs_path;
use sparsebench::subset::bs_path;

use crate::output::{open, InputError, OutDir};
use crate::FitArgs;

pub const TUNED: &str = "tuned.csv";

fn path_file(m: Method) -> &'static str {
    match m {
        Method::Lasso => "lasso_path.csv",
        Method::Relaxo => "relaxo_path.csv",
        Method::Fs => "fs_path.csv",
        Method::Bs => "bs_path.csv",
    }
}

fn extra_file(m: Method) -> Option<&'static str> {
    match m {
        Method::Lasso => Some("lasso_support.csv"),
        Method::Bs => Some("bs_coefficients.csv"),
        _ => None,
    }
}

pub fn run(a: FitArgs) -> anyhow::Result<ExitCode> {
    let method = Method::parse(&a.method)
        .ok_or_else(|| InputError(format!("unknown method {:?} (lasso, relaxo, fs, bs)", a.method)))?;
    let data = io::read_dataset(open(&a.data)?).with_context(|| format!("in {}", a.data.display()))?;
    let val = match &a.validation {
        Some(p) => {
            let v = io::read_dataset(open(p)?).with_context(|| format!("in {}", p.display()))?;
            if v.p() != data.p() {
                return Err(InputError(format!(
                    "validation data has {} predictors, training data has {}",
                    v.p(),
                    data.p()
                ))
                .into());
            }
            Some(v)
        }
        None => None,
    };

    let mut cfg = SolverConfig {
        nlambda: a.nlambda,
        eps: a.eps,
        kmax: a.kmax,
        ..SolverConfig::default()
    };
    if let Some(b) = a.budget_seconds {
        cfg.bnb.budget_seconds = b;
    }
    let mut files = vec![path_file(method)];
    files.extend(extra_file(method));
    if val.is_some() {
        files.push(TUNED);
    }
    let out = OutDir::prepare(&a.out.out, &files, a.out.force)?;

    let (x, y) = (&data.x, &data.y);
    let (n, p) = (data.n(), data.p());
    let kmax = cfg.kmax_for(n, p);
    let coef_path = match method {
        Method::Lasso | Method::Relaxo => {
            let grid = lambda_grid(x, y, cfg.nlambda_for("custom"), cfg.eps_for(n, p))?;
            let path = lasso_path(x, y, &grid.values, &cfg.cd)?;
            if method == Method::Lasso {
                io::write_lasso_path(&path, out.create(path_file(method))?)?;
                io::write_lasso_support(&path, x, y, out.create("lasso_support.csv")?)?;
                CoefficientPath::from_lasso(&path)
            } else {
                let relaxed = relaxed_path(x, y, path, &gamma_grid(cfg.ngamma))?;
                io::write_relaxed_path(&relaxed, out.create(path_file(method))?)?;
                CoefficientPath::from_relaxed(&relaxed)
            }
        }
        Method::Fs => {
            let path = fs_path(x, y, kmax)?;
            io::write_fs_path(&path, out.create(path_file(method))?)?;
            CoefficientPath::from_steps(path.betas, kmax)
        }
        Method::Bs => {
            let mut rng = child_stream(a.seed, 0, StreamPurpose::Subset, 0);
            let path = bs_path(x, y, kmax, &cfg.bnb, &mut rng)?;
            io::write_bs_summary(&path, out.create(path_file(method))?)?;
            io::write_bs_coefficients(&path, out.create("bs_coefficients.csv")?)?;
            println!("bs: {}/{} sizes certified", path.certified_count(), path.solutions.len());
            CoefficientPath::from_steps(path.solutions.into_iter().map(|s| s.beta).collect(), kmax)
        }
    };
    println!("{}: {} path entries written to {}", method.token(), coef_path.len(), out.path(path_file(method)).display());

    if let Some(val) = &val {
        let idx = tune_validation(&coef_path, val)?;
        let (lambda, gamma, k) = match coef_path.labels[idx] {
            TuningLabel::Lambda(l) => (io::fmt_f64(l), String::new(), String::new()),
            TuningLabel::Relaxed { lambda, gamma } => (io::fmt_f64(lambda), io::fmt_f64(gamma), String::new()),
            TuningLabel::Step(k) => (String::new(), String::new(), k.to_string()),
        };
        let mut w = out.create(TUNED)?;
        writeln!(w, "method,path_index,lambda,gamma,k,index,value")?;
        for (j, &b) in coef_path.betas[idx].iter().enumerate() {
            writeln!(w, "{},{idx},{lambda},{gamma},{k},{},{}", method.token(), j + 1, io::fmt_f64(b))?;
        }
        w.flush()?;
        println!("validation choice: path index {idx}");
    }
    Ok(ExitCode::SUCCESS)
}
