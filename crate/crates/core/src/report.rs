//! Report tables: one row per estimator and configuration.
//!
//! CSV output starts with `# ` metadata lines (version, command, seed, wall
//! time) followed by a header row and a body that depends only on the seed
//! and flags. JSON output is an array of flat records that also carry each
//! row's run time.

use serde::Serialize;

use crate::estimators::EstimateSummary;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub estimator: String,
    pub parameter: String,
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub seed: u64,
    pub seconds: f64,
}

impl ReportRow {
    pub fn new(experiment: &str, estimator: &str, parameter: impl ToString, s: &EstimateSummary) -> Self {
        ReportRow {
            experiment: experiment.to_string(),
            estimator: estimator.to_string(),
            parameter: parameter.to_string(),
            n: s.n,
            mean: s.mean,
            variance: s.variance,
            stderr: s.stderr,
            seed: s.seed,
            seconds: s.seconds,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    /// Extra `key: value` lines for the CSV header, such as exact references.
    pub notes: Vec<(String, String)>,
}

const CSV_COLUMNS: [&str; 8] = ["experiment", "estimator", "parameter", "n", "mean", "variance", "stderr", "seed"];

impl Report {
    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    /// Header row and data rows, without metadata.
    pub fn csv_body(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.experiment.clone(),
                r.estimator.clone(),
                r.parameter.clone(),
                r.n.to_string(),
                r.mean.to_string(),
                r.variance.to_string(),
                r.stderr.to_string(),
                r.seed.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn to_csv(&self, meta: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in meta.iter().chain(&self.notes) {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.csv_body());
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.rows).expect("rows serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format, meta: &[(String, String)]) -> String {
        match format {
            Format::Csv => self.to_csv(meta),
            Format::Json => self.to_json(),
        }
    }
}

/// Drop `# ` metadata lines, leaving the header row and data.
pub fn strip_metadata(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with("# ")).map(|l| format!("{l}\n")).collect()
}
