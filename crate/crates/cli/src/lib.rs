//! Declarative scenario runner for the qphase engines.
//!
//! A scenario is a TOML file naming a `kind` and its `model`, `method`,
//! `initial` and `observables` sections. Running one writes CSV tables, a JSON
//! report and a manifest that pins everything needed to repeat the run.

pub mod output;
pub mod run;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use output::{Check, Manifest};
pub use run::{execute, RunError, RunOutput, Table};
pub use scenario::{parse_scenario, Issue, Kind, Scenario, ValidationErrors};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "QPHASE_OUT";
pub const DEFAULT_OUT: &str = "qphase-out";

/// Scenarios shipped with the tool, usable by name in place of a file.
pub const FIXTURES: &[(&str, &str)] = &[
    ("dimension-count", include_str!("../fixtures/dimension-count.toml")),
    ("doublewell-rb", include_str!("../fixtures/doublewell-rb.toml")),
    ("entropy-thermal", include_str!("../fixtures/entropy-thermal.toml")),
    ("entropy-fermion-mixture", include_str!("../fixtures/entropy-fermion-mixture.toml")),
    ("plusp-kerr", include_str!("../fixtures/plusp-kerr.toml")),
    ("plusp-reverse", include_str!("../fixtures/plusp-reverse.toml")),
    ("variational-kerr", include_str!("../fixtures/variational-kerr.toml")),
    ("wigner-kerr", include_str!("../fixtures/wigner-kerr.toml")),
    ("wigner-twin-squeezing", include_str!("../fixtures/wigner-twin-squeezing.toml")),
];

pub fn fixture(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Validation,
    Runtime,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Validation => 2,
            Status::Runtime => 3,
            Status::Inconclusive => 4,
        }
    }
}

/// Where a scenario came from: a file or a bundled fixture.
#[derive(Debug, Clone)]
pub struct Source {
    pub text: String,
    pub base: PathBuf,
    pub label: String,
}

impl Source {
    pub fn load(arg: &str) -> std::io::Result<Source> {
        let path = Path::new(arg);
        if !path.exists() {
            if let Some(t) = fixture(arg) {
                return Ok(Source {
                    text: t.to_string(),
                    base: PathBuf::from("."),
                    label: format!("fixture {arg}"),
                });
            }
        }
        Ok(Source {
            text: std::fs::read_to_string(path)?,
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            label: path.display().to_string(),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub deterministic: bool,
}

#[derive(Debug)]
pub struct RunReport {
    pub scenario: Scenario,
    pub output: Option<RunOutput>,
    pub manifest: Manifest,
    pub status: Status,
    pub error: Option<String>,
    pub out_dir: PathBuf,
}

/// --out, then the environment, then the scenario, then the default.
pub fn output_dir(opts: &RunOptions, scenario: &Scenario) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| scenario.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Parses, runs and writes outputs. Validation problems come back as `Err`.
pub fn run_scenario(source: &Source, opts: &RunOptions) -> Result<RunReport, ValidationErrors> {
    let mut scenario = parse_scenario(&source.text)?;
    if let Some(s) = opts.seed {
        // the manifest records the seed as a TOML integer
        if s > i64::MAX as u64 {
            return Err(ValidationErrors(vec![Issue {
                path: "--seed".into(),
                message: format!("must be at most {}", i64::MAX),
            }]));
        }
        scenario.seed = s;
    }
    if opts.deterministic {
        scenario.make_deterministic();
    }
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = opts.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| {
            ValidationErrors(vec![Issue {
                path: "--threads".into(),
                message: e.to_string(),
            }])
        })?
    };
    let out_dir = output_dir(opts, &scenario);
    let start = Instant::now();
    let result = pool.install(|| execute(&scenario, &source.base));
    let wall = start.elapsed().as_secs_f64();

    let mut manifest = Manifest::new(&scenario, pool.current_num_threads(), wall);
    let (output, mut status, mut error) = match result {
        Ok(o) => {
            let status = if o.inconclusive { Status::Inconclusive } else { Status::Ok };
            (Some(o), status, None)
        }
        Err(RunError::Input(m)) => (None, Status::Validation, Some(m)),
        Err(e) => (None, Status::Runtime, Some(e.to_string())),
    };
    if let Some(o) = &output {
        manifest.diverged = Some(o.diverged);
        manifest.checks = output::evaluate(&scenario.expect, o);
        if status == Status::Ok && manifest.checks.iter().any(|c| !c.pass) {
            status = Status::Runtime;
            error = Some("expectation failed".into());
        }
        match output::write_all(&out_dir, &scenario, o) {
            Ok(files) => manifest.outputs = files,
            Err(e) => {
                status = Status::Runtime;
                error = Some(format!("writing outputs: {e}"));
            }
        }
    }
    manifest.status = status.exit_code();
    manifest.error = error.clone();
    if let Err(e) = output::write_manifest(&out_dir, &scenario, &manifest) {
        if error.is_none() {
            error = Some(format!("writing manifest: {e}"));
        }
        status = Status::Runtime;
    }
    Ok(RunReport {
        scenario,
        output,
        manifest,
        status,
        error,
        out_dir,
    })
}
