//! File formats: versioned trace documents, CSV tables and flat config files.
//!
//! A trace document is one JSON object:
//!
//! ```json
//! {
//!   "schema_id": "creditfair.trace.v1",
//!   "mechanism": {"kind": "lend_recoup"},
//!   "seed": 3,
//!   "rng": "chacha8",
//!   "instance": {"endowments": ["1", "1"], "demands": [["0", "2"]]},
//!   "trace": {"allocations": [["0", "2"]], "credits": [["0", "0"], ["1", "-1"]],
//!             "utilities": [["0", "2"]], "cumulative_utilities": [["0", "2"]]},
//!   "branches": ["no_shortage"]
//! }
//! ```
//!
//! Every number is an exact rational string. CSV output uses floats with
//! twelve significant digits.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanisms::{Branch, Mechanism, RunOutput};
use crate::metrics::{MetricsRow, SummaryRow};
use crate::model::{AllocationTrace, Instance};

pub const SCHEMA_ID: &str = "creditfair.trace.v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: unsupported schema `{found}`, expected `{SCHEMA_ID}`")]
    Schema { path: String, found: String },
    #[error("{path} line {line}: expected `key = value`")]
    Config { path: String, line: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub schema_id: String,
    pub mechanism: Mechanism,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    pub instance: Instance,
    pub trace: AllocationTrace,
    #[serde(default)]
    pub branches: Vec<Branch>,
}

impl TraceDocument {
    pub fn new(mechanism: Mechanism, instance: Instance, output: RunOutput) -> Self {
        TraceDocument {
            schema_id: SCHEMA_ID.to_string(),
            mechanism,
            seed: None,
            rng: None,
            instance,
            trace: output.trace,
            branches: output.branches,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace documents always serialize")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, IoError> {
        let doc: TraceDocument = serde_json::from_str(text).map_err(|source| IoError::Json {
            path: origin.to_string(),
            source,
        })?;
        if doc.schema_id != SCHEMA_ID {
            return Err(IoError::Schema {
                path: origin.to_string(),
                found: doc.schema_id,
            });
        }
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        write_text(path, &self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(file_err(path))?;
        Self::from_json(&text, &path.display().to_string())
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(file_err(dir))?;
    }
    let mut f = fs::File::create(path).map_err(file_err(path))?;
    f.write_all(text.as_bytes()).map_err(file_err(path))?;
    if !text.ends_with('\n') {
        f.write_all(b"\n").map_err(file_err(path))?;
    }
    Ok(())
}

pub fn load_instance_json(path: &Path) -> Result<Instance, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Twelve significant digits, trailing zeros trimmed; exponent form only
/// for very large or very small magnitudes.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn opt_float(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `mechanism,nw,min_six,pct_si_violations,wmm,nmm,weq,neq`; undefined cells empty.
pub fn metrics_csv(rows: &[MetricsRow]) -> Result<String, IoError> {
    csv_string(
        &MetricsRow::HEADER,
        rows.iter().map(|r| {
            let mut rec = vec![r.mechanism.clone()];
            rec.extend(r.values().iter().map(|v| opt_float(*v)));
            rec
        }),
    )
}

/// Mean and std per metric, interleaved as in [`SummaryRow::HEADER`].
pub fn summary_csv(rows: &[SummaryRow]) -> Result<String, IoError> {
    csv_string(
        &SummaryRow::HEADER,
        rows.iter().map(|r| {
            let mut rec = vec![r.mechanism.clone()];
            for k in 0..7 {
                rec.push(opt_float(r.mean[k]));
                rec.push(opt_float(r.std[k]));
            }
            rec
        }),
    )
}

/// One row per (round, agent), 1-based indices.
pub fn trace_csv(doc: &TraceDocument) -> Result<String, IoError> {
    let inst = &doc.instance;
    let mut rows = Vec::with_capacity(inst.rounds() * inst.agents());
    for t in 0..inst.rounds() {
        for i in 0..inst.agents() {
            let credit = doc.trace.credits.as_ref().map(|c| fmt_float(c[t + 1][i].to_f64()));
            rows.push(vec![
                (t + 1).to_string(),
                (i + 1).to_string(),
                fmt_float(inst.endowments()[i].to_f64()),
                fmt_float(inst.demands()[t][i].to_f64()),
                fmt_float(doc.trace.allocations[t][i].to_f64()),
                fmt_float(doc.trace.utilities[t][i].to_f64()),
                fmt_float(doc.trace.cumulative_utilities[t][i].to_f64()),
                credit.unwrap_or_default(),
            ]);
        }
    }
    csv_string(
        &[
            "round",
            "agent",
            "endowment",
            "report",
            "allocation",
            "utility",
            "cumulative_utility",
            "credit_after",
        ],
        rows,
    )
}

/// Flat `key = value` lines; `#` starts a comment, blank lines are ignored.
pub fn parse_config(text: &str, origin: &str) -> Result<BTreeMap<String, String>, IoError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(IoError::Config {
            path: origin.to_string(),
            line: n + 1,
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    parse_config(&text, &path.display().to_string())
}
