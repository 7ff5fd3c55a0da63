//! CSV ingestion and the structured output formats.
//!
//! Summary records are JSON objects, one per line, each carrying
//! `schema_version` and a `record` tag. Tables are flat CSV with a header
//! row. Field-by-field documentation lives in the repository README.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::{FamilyKind, GlmFamily};
use crate::model::ModelIndicator;
use crate::sampler::{AcceptanceStats, ChainOutput, Diagnostics, MoveStats};
use crate::sim::ReplicationReport;
use crate::summary::{ModelProbability, PosteriorSummary, ShrinkageStats};

/// Version of every record and table layout written by this module.
pub const SCHEMA_VERSION: u32 = 1;

/// Models listed in a summary record.
pub const TOP_MODELS: usize = 20;

fn csv_error(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_cell(value: &str, line: u64, column: &str) -> Result<f64> {
    let v = value.trim();
    if v.is_empty() || v.eq_ignore_ascii_case("na") {
        return Err(Error::MissingValue {
            line,
            column: column.to_string(),
        });
    }
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::NonNumeric {
            line,
            column: column.to_string(),
            value: value.to_string(),
        }),
    }
}

/// Reads a comma-separated file with a header row. Every column other than
/// the response and the trials column becomes a covariate, in file order.
/// With no trials column a binomial response is Bernoulli.
fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

pub fn load_csv(path: impl AsRef<Path>, family: FamilyKind, response: &str, trials: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let y_col = find(response)?;
    let t_col = trials.map(find).transpose()?;
    if t_col.is_some() && family != FamilyKind::Binomial {
        return Err(Error::Config("a trials column only applies to the binomial family".into()));
    }
    let x_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != y_col && Some(c) != t_col).collect();

    let mut y = Vec::new();
    let mut n_trials = Vec::new();
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |c: usize| parse_cell(rec.get(c).unwrap_or(""), line, &headers[c]);
        y.push(get(y_col)?);
        if let Some(c) = t_col {
            n_trials.push(get(c)?);
        }
        for &c in &x_cols {
            cells.push(get(c)?);
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let fam = match family {
        FamilyKind::Binomial if t_col.is_some() => GlmFamily::binomial(n_trials),
        FamilyKind::Binomial => GlmFamily::bernoulli(n),
        FamilyKind::Poisson => GlmFamily::Poisson,
        FamilyKind::Gaussian => GlmFamily::Gaussian,
    };
    let raw = DMatrix::from_row_slice(n, x_cols.len(), &cells);
    let names = x_cols.iter().map(|&c| headers[c].clone()).collect();
    Ok(Dataset::new(fam, DVector::from_vec(y), raw, names)?.with_response_name(&headers[y_col]))
}

/// Covariate names of the bundled diabetes data, in file order.
pub const PIMA_COLUMNS: [&str; 7] = ["npreg", "glu", "bp", "skin", "bmi", "ped", "age"];
pub const PIMA_N: usize = 532;

/// Path of the bundled diabetes data set.
pub fn pima_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("pima.csv")
}

/// Loads the bundled diabetes data and checks its size and columns.
pub fn load_pima() -> Result<Dataset> {
    let d = load_csv(pima_path(), FamilyKind::Binomial, "diabetes", None)?;
    if d.n() != PIMA_N || d.names != PIMA_COLUMNS {
        return Err(Error::Config(format!(
            "bundled diabetes data has n = {} and columns {:?}",
            d.n(),
            d.names
        )));
    }
    Ok(d)
}

/// Header row of a CSV file.
pub fn csv_headers(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_reader(open(path)?);
    Ok(rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect())
}

/// Writes covariates as supplied, then the response, then a `trials`
/// column for a binomial family with any trial count other than one.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let trials = match &data.family {
        GlmFamily::Binomial { trials } if trials.iter().any(|&t| t != 1.0) => Some(trials),
        _ => None,
    };
    let mut header: Vec<&str> = data.names.iter().map(String::as_str).collect();
    header.push(&data.response_name);
    if trials.is_some() {
        header.push("trials");
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for i in 0..data.n() {
        let mut row: Vec<String> = data.raw.row(i).iter().map(|v| format!("{v:?}")).collect();
        row.push(format!("{:?}", data.y[i]));
        if let Some(t) = trials {
            row.push(format!("{:?}", t[i]));
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Appends one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a file written by [`write_jsonl`].
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Acceptance rates of the Metropolis–Hastings moves; `None` when a move
/// never ran.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub beta: Option<f64>,
    pub beta0: Option<f64>,
    pub y_star: Option<f64>,
    pub hyper: Option<f64>,
}

impl From<&AcceptanceStats> for AcceptanceRates {
    fn from(a: &AcceptanceStats) -> Self {
        let r = |m: &MoveStats| m.rate();
        Self {
            beta: r(&a.beta),
            beta0: r(&a.beta0),
            y_star: r(&a.y_star),
            hyper: r(&a.hyper),
        }
    }
}

/// Settings echoed into every record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub method: String,
    pub family: String,
    pub baseline: String,
    pub model_prior: String,
    pub a: f64,
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
}

/// `record = "summary"`: the result of `select`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub schema_version: u32,
    pub record: String,
    #[serde(flatten)]
    pub run: RunEcho,
    pub n: usize,
    pub draws: usize,
    pub predictors: Vec<String>,
    pub inclusion_probs: Vec<f64>,
    pub map_model: ModelIndicator,
    pub map_probability: f64,
    pub mpm_model: ModelIndicator,
    pub top_models: Vec<ModelProbability>,
    pub hyper_name: String,
    pub shrinkage: Option<ShrinkageStats>,
    pub acceptance: AcceptanceRates,
    pub diagnostics: Diagnostics,
}

impl SummaryRecord {
    pub fn new(run: RunEcho, n: usize, s: &PosteriorSummary) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            record: "summary".into(),
            run,
            n,
            draws: s.draws,
            predictors: s.names.clone(),
            inclusion_probs: s.inclusion_probs.clone(),
            map_model: s.map_model.clone(),
            map_probability: s.map_visits as f64 / s.draws as f64,
            mpm_model: s.mpm_model.clone(),
            top_models: s.model_probs.iter().take(TOP_MODELS).cloned().collect(),
            hyper_name: s.hyper_name.clone(),
            shrinkage: s.shrinkage,
            acceptance: AcceptanceRates::from(&s.acceptance),
            diagnostics: s.diagnostics,
        }
    }
}

/// `record = "predictive"`: one line per evaluated model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveRecord {
    pub schema_version: u32,
    pub record: String,
    #[serde(flatten)]
    pub run: RunEcho,
    pub split_seed: u64,
    pub train_n: usize,
    pub test_n: usize,
    /// `map` or `mpm`.
    pub model_kind: String,
    pub model: ModelIndicator,
    pub rule: String,
    pub false_negative_pct: f64,
    pub false_positive_pct: f64,
    pub draws: usize,
}

/// `record = "replication"`: one method on one simulated data set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub schema_version: u32,
    pub record: String,
    pub study: u8,
    pub family: String,
    pub scenario: String,
    pub r: f64,
    pub replication: usize,
    pub method: String,
    pub true_model: ModelIndicator,
    pub map_model: ModelIndicator,
    pub map_is_true: bool,
    pub inclusion_probs: Vec<f64>,
}

pub fn replication_records(report: &ReplicationReport) -> Vec<ReplicationRecord> {
    let spec = &report.spec;
    report
        .records
        .iter()
        .map(|r| ReplicationRecord {
            schema_version: SCHEMA_VERSION,
            record: "replication".into(),
            study: study_number(report),
            family: spec.family.to_string(),
            scenario: spec.scenario.to_string(),
            r: spec.r,
            replication: r.replication,
            method: r.method.to_string(),
            true_model: report.true_model.clone(),
            map_model: r.map_model.clone(),
            map_is_true: r.map_is_true,
            inclusion_probs: r.inclusion_probs.clone(),
        })
        .collect()
}

fn study_number(report: &ReplicationReport) -> u8 {
    match report.spec.study {
        crate::sim::Study::One => 1,
        crate::sim::Study::Two => 2,
    }
}

/// `record = "oracle-check"`: chain frequencies against the exact model posterior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckRecord {
    pub schema_version: u32,
    pub record: String,
    #[serde(flatten)]
    pub run: RunEcho,
    pub normalizer: String,
    pub models: Vec<OracleModelRow>,
    pub max_abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleModelRow {
    pub model: ModelIndicator,
    pub oracle: f64,
    pub chain: f64,
}

/// `iteration,gamma,<hyper>` for every retained draw.
pub fn write_trace_csv(chain: &ChainOutput, burnin: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["iteration", "gamma", chain.hyper_name])
        .map_err(|e| csv_error(path, e))?;
    for (k, (g, h)) in chain.gamma_draws.iter().zip(&chain.hyper_draws).enumerate() {
        w.write_record([(burnin + k + 1).to_string(), g.to_string(), format!("{h:?}")])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// `batch,<predictor>...` with one row of inclusion frequencies per batch.
pub fn write_batch_csv(summary: &PosteriorSummary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["batch".to_string()];
    header.extend(summary.names.iter().cloned());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (b, row) in summary.batches.estimates.iter().enumerate() {
        let mut rec = vec![(b + 1).to_string()];
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// `predictor,batches,min,q25,median,q75,max,mean` across batches.
pub fn write_boxplot_csv(summary: &PosteriorSummary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["predictor", "batches", "min", "q25", "median", "q75", "max", "mean"])
        .map_err(|e| csv_error(path, e))?;
    let batches = summary.batches.estimates.len().to_string();
    for (name, q) in summary.names.iter().zip(summary.batches.boxplot()) {
        let vals = [q.min, q.q25, q.median, q.q75, q.max, q.mean].map(|v| format!("{v:?}"));
        let mut rec = vec![name.clone(), batches.clone()];
        rec.extend(vals);
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// `study,family,scenario,r,method,completed,failed,map_successes` per
/// report and method.
pub fn write_success_csv(reports: &[ReplicationReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["study", "family", "scenario", "r", "method", "completed", "failed", "map_successes"])
        .map_err(|e| csv_error(path, e))?;
    for rep in reports {
        for a in &rep.aggregates {
            w.write_record([
                study_number(rep).to_string(),
                rep.spec.family.to_string(),
                rep.spec.scenario.to_string(),
                format!("{:?}", rep.spec.r),
                a.method.to_string(),
                a.completed.to_string(),
                a.failed.to_string(),
                a.map_successes.to_string(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `study,family,scenario,r,method,predictor,min,q25,median,q75,max,mean`:
/// spread of inclusion probabilities across replications.
pub fn write_inclusion_quantiles_csv(reports: &[ReplicationReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record([
        "study", "family", "scenario", "r", "method", "predictor", "min", "q25", "median", "q75", "max", "mean",
    ])
    .map_err(|e| csv_error(path, e))?;
    for rep in reports {
        for a in &rep.aggregates {
            for (j, q) in a.inclusion_quantiles.iter().enumerate() {
                let mut rec = vec![
                    study_number(rep).to_string(),
                    rep.spec.family.to_string(),
                    rep.spec.scenario.to_string(),
                    format!("{:?}", rep.spec.r),
                    a.method.to_string(),
                    format!("X{}", j + 1),
                ];
                rec.extend([q.min, q.q25, q.median, q.q75, q.max, q.mean].map(|v| format!("{v:?}")));
                w.write_record(&rec).map_err(|e| csv_error(path, e))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn loads_and_centres() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "a,y,b\n1,0,2\n3,1,4\n5,1,9\n");
        let d = load_csv(&p, FamilyKind::Binomial, "y", None).unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.names, vec!["a", "b"]);
        assert!(matches!(&d.family, GlmFamily::Binomial { trials } if trials == &[1.0; 3]));
        assert_eq!(d.x[(0, 1)], -2.0);
        assert_eq!(d.response_name, "y");
    }

    #[test]
    fn distinct_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let header_only = write(&dir, "h.csv", "a,y\n");
        assert!(matches!(load_csv(&header_only, FamilyKind::Poisson, "y", None), Err(Error::EmptyDataset)));
        let text = write(&dir, "t.csv", "a,y\n1,2\nx,3\n");
        assert!(matches!(
            load_csv(&text, FamilyKind::Poisson, "y", None),
            Err(Error::NonNumeric { line: 3, .. })
        ));
        let missing = write(&dir, "m.csv", "a,y\n1,\n");
        assert!(matches!(load_csv(&missing, FamilyKind::Poisson, "y", None), Err(Error::MissingValue { .. })));
        let ragged = write(&dir, "r.csv", "a,y\n1,2,3\n");
        assert!(matches!(load_csv(&ragged, FamilyKind::Poisson, "y", None), Err(Error::Csv { .. })));
        assert!(matches!(load_csv(&text, FamilyKind::Poisson, "z", None), Err(Error::MissingColumn(_))));
        match load_csv(dir.path().join("absent.csv"), FamilyKind::Poisson, "y", None) {
            Err(e @ Error::Io(_)) => assert!(e.to_string().contains("absent.csv")),
            other => panic!("expected an io error, got {other:?}"),
        }
    }

    #[test]
    fn trials_column_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "b.csv", "x,succ,n\n0.5,1,3\n-0.5,2,2\n0.25,0,4\n");
        let d = load_csv(&p, FamilyKind::Binomial, "succ", Some("n")).unwrap();
        assert_eq!(d.family, GlmFamily::binomial(vec![3.0, 2.0, 4.0]));
        let out = dir.path().join("out.csv");
        write_csv(&d, &out).unwrap();
        let back = load_csv(&out, FamilyKind::Binomial, "succ", Some("trials")).unwrap();
        assert_eq!(back.raw, d.raw);
        assert_eq!(back.y, d.y);
        assert_eq!(back.family, d.family);
    }

    #[test]
    fn bundled_diabetes_data() {
        let d = load_pima().unwrap();
        assert_eq!((d.n(), d.p()), (532, 7));
        assert_eq!(d.y.sum(), 177.0);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        let rows = vec![OracleModelRow {
            model: "01".parse().unwrap(),
            oracle: 0.25,
            chain: 0.26,
        }];
        write_jsonl(&p, &rows).unwrap();
        let back: Vec<OracleModelRow> = read_jsonl(&p).unwrap();
        assert_eq!(back, rows);
    }
}
