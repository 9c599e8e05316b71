use std::process::ExitCode;

use anyhow::Context;
use sparsebench::harness::{aggregate, Metric};
use sparsebench::io;

use crate::output::{open, OutDir};
use crate::ReportArgs;

pub const SUMMARY: &str = "summary.csv";

pub fn run(a: ReportArgs) -> anyhow::Result<ExitCode> {
    let mut records = Vec::new();
    for path in &a.inputs {
        let recs = io::read_long(open(path)?).with_context(|| format!("in {}", path.display()))?;
        records.extend(recs);
    }
    let summary = aggregate(&records);
    let mut settings: Vec<String> = Vec::new();
    for r in &summary {
        if !settings.contains(&r.scenario.setting) {
            settings.push(r.scenario.setting.clone());
        }
    }
    let tables: Vec<String> = settings
        .iter()
        .flat_map(|s| Metric::ALL.map(|m| format!("tables/{s}_{}.csv", m.token())))
        .collect();
    let mut names: Vec<&str> = vec![SUMMARY];
    names.extend(tables.iter().map(String::as_str));
    let out = OutDir::prepare(&a.out.out, &names, a.out.force)?;
    io::write_summary(&summary, out.create(SUMMARY)?)?;
    for s in &settings {
        for m in Metric::ALL {
            io::write_metric_table(&summary, s, m, out.create(&format!("tables/{s}_{}.csv", m.token()))?)?;
        }
    }
    println!(
        "{} records from {} files, {} summary rows, {} tables in {}",
        records.len(),
        a.inputs.len(),
        summary.len(),
        tables.len(),
        out.path("").display()
    );
    Ok(ExitCode::SUCCESS)
}
