use std::process::ExitCode;

use anyhow::Context;
use sparsebench::datagen::{BetaType, ScenarioFile, ScenarioSpec};
use sparsebench::harness::{df_study, DfConfig, DfMethod};
use sparsebench::io;
use sparsebench::{BnbOptions, CdOptions};

use crate::output::{InputError, OutDir};
use crate::DfArgs;

pub const DF: &str = "df.csv";

fn default_spec() -> ScenarioSpec {
    ScenarioSpec {
        setting: "custom".into(),
        n: 70,
        p: 30,
        s: 5,
        beta_type: BetaType::Leading,
        rho: 0.35,
        snr: 0.7,
        reps: 300,
        seed: 1,
    }
}

pub fn run(a: DfArgs) -> anyhow::Result<ExitCode> {
    let mut spec = match &a.scenario {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut specs = ScenarioFile::from_json(&text)
                .and_then(|f| f.expand())
                .with_context(|| format!("in {}", path.display()))?;
            if specs.len() != 1 {
                return Err(InputError(format!(
                    "{}: df needs exactly one (rho, snr) combination, found {}",
                    path.display(),
                    specs.len()
                ))
                .into());
            }
            specs.remove(0)
        }
        None => default_spec(),
    };
    if let Some(r) = a.reps {
        spec.reps = r;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let methods = DfMethod::parse_list(&a.methods)?;
    let cfg = DfConfig {
        nlambda: a.nlambda,
        kmax: a.kmax.unwrap_or(spec.p.min(spec.n).min(10)),
        cd: CdOptions::default(),
        bnb: BnbOptions {
            budget_seconds: a.budget_seconds,
            ..BnbOptions::default()
        },
    };
    let out = OutDir::prepare(&a.out.out, &[DF], a.out.force)?;
    let studies = df_study(&spec, &methods, &cfg)?;
    io::write_df_curves(&studies, out.create(DF)?)?;
    for st in &studies {
        let c = &st.curve;
        let shown: Vec<String> = c.df.iter().map(|d| format!("{d:.2}")).collect();
        println!(
            "{}: {} reps ({} dropped), df = [{}]",
            st.method.token(),
            c.reps_used,
            c.dropped,
            shown.join(", ")
        );
    }
    Ok(ExitCode::SUCCESS)
}
