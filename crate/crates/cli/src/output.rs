//! CSV tables, JSON reports and the run manifest.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::run::{RunOutput, Table};
use crate::scenario::{Expectation, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub quantity: String,
    pub value: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub kind: String,
    pub name: Option<String>,
    pub seed: u64,
    /// SHA-256 of the canonical scenario text.
    pub parameter_hash: String,
    /// Canonical scenario, with the effective seed and reduction mode.
    pub scenario: String,
    pub threads: usize,
    pub wall_time_s: f64,
    pub diverged: Option<usize>,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    pub status: i32,
    pub error: Option<String>,
}

pub fn parameter_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new(scenario: &Scenario, threads: usize, wall_time_s: f64) -> Self {
        let canonical = scenario.to_toml();
        Self {
            tool: "qphase",
            version: env!("CARGO_PKG_VERSION"),
            kind: scenario.kind().name().to_string(),
            name: scenario.name.clone(),
            seed: scenario.seed,
            parameter_hash: parameter_hash(&canonical),
            scenario: canonical,
            threads,
            wall_time_s,
            diverged: None,
            outputs: Vec::new(),
            checks: Vec::new(),
            status: 0,
            error: None,
        }
    }
}

pub fn evaluate(expect: &[Expectation], out: &RunOutput) -> Vec<Check> {
    expect
        .iter()
        .map(|e| {
            let value = out.quantity(&e.quantity);
            let pass = value.is_some_and(|v| e.min.is_none_or(|m| v >= m) && e.max.is_none_or(|m| v <= m));
            Check {
                quantity: e.quantity.clone(),
                value,
                min: e.min,
                max: e.max,
                pass,
            }
        })
        .collect()
}

/// Shortest text that parses back to the same double, in exponent form
/// for very small or large magnitudes.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv(path: &Path, table: &Table) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    w.flush()
}

fn report_json(scenario: &Scenario, out: &RunOutput) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    m.insert("kind".into(), scenario.kind().name().into());
    m.insert("seed".into(), scenario.seed.into());
    for (k, v) in &out.scalars {
        // JSON has no NaN; missing values are null
        m.insert(k.clone(), serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into));
    }
    for (k, v) in &out.flags {
        m.insert(k.clone(), (*v).into());
    }
    for (k, v) in &out.text {
        m.insert(k.clone(), v.clone().into());
    }
    m.insert("summary".into(), out.summary.clone().into());
    serde_json::Value::Object(m)
}

/// Writes the tables and report; returns the file names.
pub fn write_all(dir: &Path, scenario: &Scenario, out: &RunOutput) -> io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let stem = scenario.stem();
    let mut files = Vec::new();
    for t in &out.tables {
        let name = if out.tables.len() == 1 {
            format!("{stem}.csv")
        } else {
            format!("{stem}_{}.csv", t.name)
        };
        write_csv(&dir.join(&name), t)?;
        files.push(name);
    }
    let name = format!("{stem}.json");
    let text = serde_json::to_string_pretty(&report_json(scenario, out)).map_err(io::Error::other)?;
    fs::write(dir.join(&name), text + "\n")?;
    files.push(name);
    Ok(files)
}

pub fn write_manifest(dir: &Path, scenario: &Scenario, manifest: &Manifest) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(manifest).map_err(io::Error::other)?;
    fs::write(dir.join(format!("{}.manifest.json", scenario.stem())), text + "\n")
}
