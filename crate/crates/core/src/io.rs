//! CSV formats for datasets, fitted paths and simulation results.
//!
//! Floats are written with 17 significant digits so values round-trip
//! exactly. Readers check the header and report the offending column or row.

use std::io::{Read, Write};

use crate::datagen::{BetaType, Dataset};
use crate::error::{Error, Result};
use crate::harness::{DfStudy, Failure, Method, Metric, MetricRecord, ScenarioKey, SummaryRow, TimingRow, TuningRule};
use crate::lasso::{objective, LassoPath, RelaxedPath};
use crate::linalg::Matrix;
use crate::stepwise::StepwisePath;
use crate::subset::SubsetPath;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn join(ix: &[usize]) -> String {
    ix.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

/// Reads `x1..xp,y`.
pub fn read_dataset<R: Read>(r: R) -> Result<Dataset<f64>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols.len() < 2 || cols[cols.len() - 1] != "y" {
        return Err(Error::Schema("last column must be `y` after at least one predictor".into()));
    }
    for (j, c) in cols[..cols.len() - 1].iter().enumerate() {
        if *c != format!("x{}", j + 1) {
            return Err(Error::Schema(format!("column {} must be `x{}` (found {c:?})", j + 1, j + 1)));
        }
    }
    let p = cols.len() - 1;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if rec.len() != p + 1 {
            return Err(Error::Schema(format!(
                "data row {row}: expected {} fields, found {}",
                p + 1,
                rec.len()
            )));
        }
        let mut vals = Vec::with_capacity(p + 1);
        for (j, f) in rec.iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| {
                Error::Schema(format!("data row {row}, column `{}`: not a number: {f:?}", cols[j]))
            })?;
            if !v.is_finite() {
                return Err(Error::Schema(format!(
                    "data row {row}, column `{}`: non-finite value",
                    cols[j]
                )));
            }
            vals.push(v);
        }
        y.push(vals.pop().expect("nonempty row"));
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::Schema("dataset has no rows".into()));
    }
    Dataset::new(Matrix::from_rows(&rows)?, y)
}

pub fn write_dataset<W: Write>(data: &Dataset<f64>, w: W) -> Result<()> {
    let mut wr = writer(w);
    let mut header: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    wr.write_record(&header)?;
    for i in 0..data.n() {
        let mut row: Vec<String> = data.x.row(i).into_iter().map(fmt_f64).collect();
        row.push(fmt_f64(data.y[i]));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Long format: one row per nonzero coefficient, `index` is 1-based. A grid
/// point with no nonzeros gets a single row with empty index and value.
fn write_sparse_rows<W: Write>(
    wr: &mut csv::Writer<W>,
    prefix: &[String],
    beta: &[f64],
) -> Result<()> {
    let mut any = false;
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            any = true;
            let mut row = prefix.to_vec();
            row.push((j + 1).to_string());
            row.push(fmt_f64(b));
            wr.write_record(&row)?;
        }
    }
    if !any {
        let mut row = prefix.to_vec();
        row.push(String::new());
        row.push(String::new());
        wr.write_record(&row)?;
    }
    Ok(())
}

/// `lambda,gamma,index,value`, with `gamma` empty for the plain lasso.
pub fn write_lasso_path<W: Write>(path: &LassoPath<f64>, w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["lambda", "gamma", "index", "value"])?;
    for (l, b) in path.lambdas.iter().zip(&path.betas) {
        write_sparse_rows(&mut wr, &[fmt_f64(*l), String::new()], b)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_relaxed_path<W: Write>(path: &RelaxedPath<f64>, w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["lambda", "gamma", "index", "value"])?;
    for (i, l) in path.base.lambdas.iter().enumerate() {
        for (g, gamma) in path.gammas.iter().enumerate() {
            write_sparse_rows(&mut wr, &[fmt_f64(*l), fmt_f64(*gamma)], &path.betas[i][g])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// `lambda,support,nnz,objective` per grid point.
pub fn write_lasso_support<W: Write>(
    path: &LassoPath<f64>,
    x: &Matrix<f64>,
    y: &[f64],
    w: W,
) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["lambda", "support", "nnz", "objective"])?;
    for ((l, b), s) in path.lambdas.iter().zip(&path.betas).zip(&path.supports) {
        let s1: Vec<usize> = s.iter().map(|j| j + 1).collect();
        wr.write_record([
            fmt_f64(*l),
            join(&s1),
            s.len().to_string(),
            fmt_f64(objective(x, y, b, *l)),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// `k,selected,score,rss,index,value`; step 0 is the empty model.
pub fn write_fs_path<W: Write>(path: &StepwisePath<f64>, w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["k", "selected", "score", "rss", "index", "value"])?;
    for (k, b) in path.betas.iter().enumerate() {
        let (sel, score) = if k == 0 {
            (String::new(), String::new())
        } else {
            ((path.order[k - 1] + 1).to_string(), fmt_f64(path.scores[k - 1]))
        };
        write_sparse_rows(&mut wr, &[k.to_string(), sel, score, fmt_f64(path.rss[k])], b)?;
    }
    wr.flush()?;
    Ok(())
}

/// `k,support,rss,certified,nodes_explored,wall_time`.
pub fn write_bs_summary<W: Write>(path: &SubsetPath<f64>, w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["k", "support", "rss", "certified", "nodes_explored", "wall_time"])?;
    for (k, s) in path.solutions.iter().enumerate() {
        let s1: Vec<usize> = s.support.iter().map(|j| j + 1).collect();
        wr.write_record([
            k.to_string(),
            join(&s1),
            fmt_f64(s.rss),
            s.certified.to_string(),
            s.nodes_explored.to_string(),
            fmt_f64(s.wall_time),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// `k,index,value` for every nonzero best-subset coefficient.
pub fn write_bs_coefficients<W: Write>(path: &SubsetPath<f64>, w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["k", "index", "value"])?;
    for (k, s) in path.solutions.iter().enumerate() {
        write_sparse_rows(&mut wr, &[k.to_string()], &s.beta)?;
    }
    wr.flush()?;
    Ok(())
}

const LONG_HEADER: [&str; 12] = [
    "setting",
    "n",
    "p",
    "s",
    "beta_type",
    "rho",
    "snr",
    "method",
    "tuning_rule",
    "rep",
    "metric",
    "value",
];

fn key_fields(k: &ScenarioKey) -> Vec<String> {
    vec![
        k.setting.clone(),
        k.n.to_string(),
        k.p.to_string(),
        k.s.to_string(),
        k.beta_type.to_string(),
        fmt_f64(k.rho),
        fmt_f64(k.snr),
    ]
}

pub fn write_long_header<W: Write>(w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(LONG_HEADER)?;
    wr.flush()?;
    Ok(())
}

/// Rows only; pair with [`write_long_header`] when appending scenarios.
pub fn write_long_rows<W: Write>(records: &[MetricRecord], w: W) -> Result<()> {
    let mut wr = writer(w);
    for r in records {
        for metric in Metric::ALL {
            let mut row = key_fields(&r.scenario);
            row.push(r.method.token().into());
            row.push(r.rule.token().into());
            row.push(r.rep.to_string());
            row.push(metric.token().into());
            row.push(match metric {
                Metric::Nnz => r.nnz.to_string(),
                m => fmt_f64(r.value(m)),
            });
            wr.write_record(&row)?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_long<W: Write>(records: &[MetricRecord], mut w: W) -> Result<()> {
    write_long_header(&mut w)?;
    write_long_rows(records, w)
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<Vec<usize>> {
    let names: Vec<&str> = found.iter().map(str::trim).collect();
    let mut pos = Vec::with_capacity(expected.len());
    for col in expected {
        match names.iter().position(|n| n == col) {
            Some(i) => pos.push(i),
            None => return Err(Error::Schema(format!("missing column `{col}`"))),
        }
    }
    if let Some(extra) = names.iter().find(|n| !expected.contains(n)) {
        return Err(Error::Schema(format!("unexpected column `{extra}`")));
    }
    Ok(pos)
}

fn field<'a>(rec: &'a csv::StringRecord, pos: &[usize], i: usize, row: usize) -> Result<&'a str> {
    rec.get(pos[i])
        .map(str::trim)
        .ok_or_else(|| Error::Schema(format!("row {row}: missing value for `{}`", LONG_HEADER[i])))
}

fn parse_num<T: std::str::FromStr>(s: &str, col: &str, row: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Schema(format!("row {row}, column `{col}`: cannot parse {s:?}")))
}

/// Reads a long-format results file back into records. Rows of the four
/// metrics for one `(scenario, method, rule, rep)` must be present.
pub fn read_long<R: Read>(r: R) -> Result<Vec<MetricRecord>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let pos = check_header(rdr.headers()?, &LONG_HEADER)?;
    let mut out: Vec<MetricRecord> = Vec::new();
    let mut seen: Vec<[bool; 4]> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let f = |k| field(&rec, &pos, k, row);
        let beta_code: u8 = parse_num(f(4)?, "beta_type", row)?;
        BetaType::try_from(beta_code)
            .map_err(|e| Error::Schema(format!("row {row}, column `beta_type`: {e}")))?;
        let scenario = ScenarioKey {
            setting: f(0)?.to_string(),
            n: parse_num(f(1)?, "n", row)?,
            p: parse_num(f(2)?, "p", row)?,
            s: parse_num(f(3)?, "s", row)?,
            beta_type: beta_code,
            rho: parse_num(f(5)?, "rho", row)?,
            snr: parse_num(f(6)?, "snr", row)?,
        };
        let method = Method::parse(f(7)?)
            .ok_or_else(|| Error::Schema(format!("row {row}, column `method`: unknown {:?}", f(7).unwrap())))?;
        let rule = TuningRule::parse(f(8)?).ok_or_else(|| {
            Error::Schema(format!("row {row}, column `tuning_rule`: unknown {:?}", f(8).unwrap()))
        })?;
        let rep: usize = parse_num(f(9)?, "rep", row)?;
        let metric = Metric::parse(f(10)?).ok_or_else(|| {
            Error::Schema(format!("row {row}, column `metric`: unknown {:?}", f(10).unwrap()))
        })?;
        let value: f64 = parse_num(f(11)?, "value", row)?;
        let id = format!(
            "{}|{}|{}|{}|{}|{:x}|{:x}|{}|{}|{}",
            scenario.setting,
            scenario.n,
            scenario.p,
            scenario.s,
            scenario.beta_type,
            scenario.rho.to_bits(),
            scenario.snr.to_bits(),
            method.token(),
            rule.token(),
            rep
        );
        let slot = *index.entry(id).or_insert_with(|| {
            out.push(MetricRecord {
                scenario,
                method,
                rule,
                rep,
                rr: f64::NAN,
                rte: f64::NAN,
                pve: f64::NAN,
                nnz: 0,
            });
            seen.push([false; 4]);
            out.len() - 1
        });
        let m = metric as usize;
        if seen[slot][m] {
            return Err(Error::Schema(format!("row {row}: duplicate `{}` entry", metric.token())));
        }
        seen[slot][m] = true;
        let rec = &mut out[slot];
        match metric {
            Metric::Rr => rec.rr = value,
            Metric::Rte => rec.rte = value,
            Metric::Pve => rec.pve = value,
            Metric::Nnz => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::Schema(format!(
                        "row {row}, column `value`: nnz must be a nonnegative integer"
                    )));
                }
                rec.nnz = value as usize;
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| s.iter().any(|b| !b)) {
        let r = &out[i];
        return Err(Error::Schema(format!(
            "incomplete metrics for method {} rule {} rep {}",
            r.method.token(),
            r.rule.token(),
            r.rep
        )));
    }
    Ok(out)
}

pub fn write_failures_header<W: Write>(w: W) -> Result<()> {
    let mut wr = writer(w);
    let mut header: Vec<&str> = LONG_HEADER[..8].to_vec();
    header.extend(["rep", "message"]);
    wr.write_record(&header)?;
    wr.flush()?;
    Ok(())
}

/// Failed `(method, rep)` fits of one scenario; `rep` is empty for failures
/// that are not tied to one repetition.
pub fn write_failure_rows<W: Write>(key: &ScenarioKey, failures: &[Failure], w: W) -> Result<()> {
    let mut wr = writer(w);
    for f in failures {
        let mut row = key_fields(key);
        row.push(f.method.token().into());
        row.push(if f.rep == usize::MAX { String::new() } else { f.rep.to_string() });
        row.push(f.message.clone());
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], w: W) -> Result<()> {
    let mut wr = writer(w);
    let mut header: Vec<&str> = LONG_HEADER[..9].to_vec();
    header.extend(["metric", "mean", "se", "count", "null_rte", "perfect_pve", "true_s"]);
    wr.write_record(&header)?;
    for r in rows {
        let mut row = key_fields(&r.scenario);
        row.extend([
            r.method.token().to_string(),
            r.rule.token().to_string(),
            r.metric.token().to_string(),
            fmt_f64(r.mean),
            fmt_f64(r.se),
            r.count.to_string(),
            fmt_f64(r.null_rte),
            fmt_f64(r.perfect_pve),
            r.true_s.to_string(),
        ]);
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_timing<W: Write>(rows: &[TimingRow], w: W) -> Result<()> {
    let mut wr = writer(w);
    let mut header: Vec<&str> = LONG_HEADER[..7].to_vec();
    header.extend(["method", "seconds_mean", "seconds_se", "paths", "path_len", "certified_mean"]);
    wr.write_record(&header)?;
    for r in rows {
        let mut row = key_fields(&r.scenario);
        row.extend([
            r.method.token().to_string(),
            fmt_f64(r.mean_seconds),
            fmt_f64(r.se_seconds),
            r.paths.to_string(),
            r.path_len.to_string(),
            fmt_opt(r.mean_certified),
        ]);
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// `method,index,tuning,df,se,mean_nnz,reps_used,dropped`; `tuning` holds
/// the grid value behind each index.
pub fn write_df_curves<W: Write>(studies: &[DfStudy], w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["method", "index", "tuning", "df", "se", "mean_nnz", "reps_used", "dropped"])?;
    for st in studies {
        let c = &st.curve;
        for t in 0..c.df.len() {
            wr.write_record([
                st.method.token().to_string(),
                t.to_string(),
                fmt_f64(st.tuning[t]),
                fmt_f64(c.df[t]),
                fmt_f64(c.se[t]),
                fmt_f64(c.mean_nnz[t]),
                c.reps_used.to_string(),
                c.dropped.to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Table of `metric` for one setting: rows are `(rho, snr)`, columns are
/// `method:rule` with `mean` and `se`.
pub fn write_metric_table<W: Write>(rows: &[SummaryRow], setting: &str, metric: Metric, w: W) -> Result<()> {
    let sel: Vec<&SummaryRow> = rows
        .iter()
        .filter(|r| r.scenario.setting == setting && r.metric == metric)
        .collect();
    let mut cols: Vec<(Method, TuningRule)> = Vec::new();
    let mut keys: Vec<(u64, u64, f64, f64)> = Vec::new();
    for r in &sel {
        if !cols.contains(&(r.method, r.rule)) {
            cols.push((r.method, r.rule));
        }
        let k = (r.scenario.rho.to_bits(), r.scenario.snr.to_bits(), r.scenario.rho, r.scenario.snr);
        if !keys.iter().any(|x| x.0 == k.0 && x.1 == k.1) {
            keys.push(k);
        }
    }
    cols.sort();
    keys.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.3.total_cmp(&b.3)));
    let mut wr = writer(w);
    let mut header = vec!["rho".to_string(), "snr".to_string()];
    for (m, r) in &cols {
        header.push(format!("{}:{}:mean", m.token(), r.token()));
        header.push(format!("{}:{}:se", m.token(), r.token()));
    }
    if metric == Metric::Rte {
        header.push("null_rte".into());
    }
    if metric == Metric::Pve {
        header.push("perfect_pve".into());
    }
    if metric == Metric::Nnz {
        header.push("true_s".into());
    }
    wr.write_record(&header)?;
    for (rb, sb, rho, snr) in keys {
        let mut row = vec![fmt_f64(rho), fmt_f64(snr)];
        let mut reference = String::new();
        for &(m, rule) in &cols {
            match sel.iter().find(|r| {
                r.method == m && r.rule == rule && r.scenario.rho.to_bits() == rb && r.scenario.snr.to_bits() == sb
            }) {
                Some(r) => {
                    row.push(fmt_f64(r.mean));
                    row.push(fmt_f64(r.se));
                    reference = match metric {
                        Metric::Rte => fmt_f64(r.null_rte),
                        Metric::Pve => fmt_f64(r.perfect_pve),
                        Metric::Nnz => r.true_s.to_string(),
                        Metric::Rr => String::new(),
                    };
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        if metric != Metric::Rr {
            row.push(reference);
        }
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}
