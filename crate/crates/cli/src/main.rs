use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qphase_cli::{parse_scenario, run_scenario, RunOptions, Source, Status, FIXTURES, OUT_ENV};

#[derive(Parser)]
#[command(name = "qphase", version, about = "Run phase-space and variational quantum dynamics scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the QPHASE_OUT environment variable.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Force fixed-order reduction so results do not depend on threading.
        #[arg(long)]
        deterministic: bool,
    },
    /// Check a scenario without running it.
    Validate { scenario: String },
    /// List the bundled scenarios.
    ListScenarios,
}

fn load(arg: &str) -> Result<Source, ExitCode> {
    Source::load(arg).map_err(|e| {
        eprintln!("error: cannot read {arg}: {e}");
        ExitCode::from(Status::Validation.exit_code() as u8)
    })
}

fn code(s: Status) -> ExitCode {
    ExitCode::from(s.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            for (name, text) in FIXTURES {
                let s = parse_scenario(text).expect("bundled scenarios are valid");
                let desc = s.description.as_deref().unwrap_or("");
                println!("{name:<26} {:<17} {desc}", s.kind().name());
            }
            println!("\noutput directory default: ${OUT_ENV} or ./{}", qphase_cli::DEFAULT_OUT);
            code(Status::Ok)
        }
        Command::Validate { scenario } => {
            let src = match load(&scenario) {
                Ok(s) => s,
                Err(c) => return c,
            };
            match parse_scenario(&src.text) {
                Ok(s) => {
                    println!("{}: valid {} scenario", src.label, s.kind().name());
                    code(Status::Ok)
                }
                Err(errs) => {
                    for e in &errs.0 {
                        eprintln!("error: {e}");
                    }
                    code(Status::Validation)
                }
            }
        }
        Command::Run {
            scenario,
            seed,
            out,
            threads,
            deterministic,
        } => {
            let src = match load(&scenario) {
                Ok(s) => s,
                Err(c) => return c,
            };
            let opts = RunOptions {
                seed,
                out,
                threads,
                deterministic,
            };
            let report = match run_scenario(&src, &opts) {
                Ok(r) => r,
                Err(errs) => {
                    for e in &errs.0 {
                        eprintln!("error: {e}");
                    }
                    return code(Status::Validation);
                }
            };
            if let Some(o) = &report.output {
                println!("{}", o.summary);
            }
            for c in &report.manifest.checks {
                let v = c.value.map_or("missing".to_string(), |v| v.to_string());
                let range = format!(
                    "[{}, {}]",
                    c.min.map_or("-inf".into(), |v| v.to_string()),
                    c.max.map_or("inf".into(), |v| v.to_string())
                );
                println!("{} {} = {v} in {range}", if c.pass { "PASS" } else { "FAIL" }, c.quantity);
            }
            if let Some(e) = &report.error {
                eprintln!("error: {e}");
            }
            if report.status == Status::Inconclusive {
                eprintln!("inconclusive: sampling error exceeded the configured ceiling");
            }
            println!("outputs in {}", report.out_dir.display());
            code(report.status)
        }
    }
}
