//! `toa`: run named time-of-arrival experiments and the acceptance suite.
//!
//! Exit codes: 0 success, 2 a validation threshold was missed, 3 bad
//! configuration, 4 the numerics did not converge.

mod experiments;
mod params;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use toa_core::io::{write_columns_to, write_json_to};
use toa_core::validation::{run_all, Profile};

use experiments::{Experiment, Outcome};
use params::Params;

const OUTPUT_ENV: &str = "TOA_OUTPUT_DIR";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "toa", version, about = "Time-of-arrival experiments and validation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write CSV curves, summary.json and manifest.json.
    Run {
        /// kijowski-bullet, kijowski-wave, walk-validate, continuum, sqm-detect,
        /// tqm-detect, slit-sweep, metric-compare, laplace-check or ms-evolve
        experiment: String,
        /// Flat `key = value` parameter file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to $TOA_OUTPUT_DIR, then ./toa-output/<experiment>.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        threads: Option<usize>,
        /// Experiment parameters as `--key value`, e.g. `--sigma-x 100 --W 10,1,0.1`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        params: Vec<String>,
    },
    /// Run every acceptance criterion.
    Validate {
        #[arg(long, default_value = "fast")]
        profile: String,
        #[arg(long)]
        threads: Option<usize>,
        /// Also write the report as validation.json here.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(toa_core::Error),
    Validation(String),
}

impl From<toa_core::Error> for CliError {
    fn from(e: toa_core::Error) -> Self {
        CliError::Compute(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        use toa_core::Error as E;
        match self {
            CliError::Validation(_) => 2,
            CliError::Config(_) => 3,
            CliError::Compute(E::NonConvergence { .. } | E::UnderResolved(..) | E::GridTooNarrow(..) | E::AbsorptionOverflow { .. }) => 4,
            CliError::Compute(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self.code() {
            2 => "validation_failure",
            4 => "non_convergence",
            _ => "configuration",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Validation(m) => m.clone(),
            CliError::Compute(e) => e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Config(e.to_string().trim().to_string())),
    };
    let result = match cli.command {
        Command::Run { experiment, config, seed, output_dir, threads, params } => {
            run(&experiment, config.as_deref(), seed, output_dir, threads, &params)
        }
        Command::Validate { profile, threads, output_dir } => validate(&profile, threads, output_dir.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    let body = json!({ "error": e.kind(), "exit_code": e.code(), "message": e.message() });
    eprintln!("{body}");
    ExitCode::from(e.code())
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    if threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker threads: {e}")))
}

fn run(
    name: &str,
    config: Option<&Path>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    threads: Option<usize>,
    args: &[String],
) -> Result<(), CliError> {
    let exp: Experiment = name.parse()?;
    let mut p = Params::default();
    p.load_flags(args)?;
    if let Some(path) = config {
        p.load_file(path)?;
    }
    // run-level settings may also come from the file or after the experiment name
    let parse_u64 = |key: &str, v: String| v.trim().parse::<u64>().map_err(|_| CliError::Config(format!("{key}: cannot parse '{v}'")));
    let seed = match (seed, p.take("seed")) {
        (Some(s), _) => s,
        (None, Some(v)) => parse_u64("seed", v)?,
        (None, None) => DEFAULT_SEED,
    };
    let threads = match (threads, p.take("threads")) {
        (Some(t), _) => Some(t),
        (None, Some(v)) => Some(parse_u64("threads", v)? as usize),
        (None, None) => None,
    };
    let output_dir = output_dir
        .or_else(|| p.take("output-dir").map(PathBuf::from))
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| Path::new("toa-output").join(exp.name()));

    let pool = thread_pool(threads)?;
    let outcome: Outcome = pool.install(|| experiments::run(exp, &mut p, seed))?;

    fs::create_dir_all(&output_dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", output_dir.display())))?;
    let mut files = Vec::new();
    for t in &outcome.tables {
        let headers: Vec<&str> = t.headers.iter().map(String::as_str).collect();
        let columns: Vec<&[f64]> = t.columns.iter().map(Vec::as_slice).collect();
        write_columns_to(&output_dir.join(&t.file), &headers, &columns)?;
        files.push(t.file.clone());
    }
    let summary = json!({
        "experiment": exp.name(),
        "passed": outcome.failure.is_none(),
        "result": outcome.summary,
    });
    write_json_to(&output_dir.join("summary.json"), &summary)?;
    files.push("summary.json".into());
    let manifest = json!({
        "experiment": exp.name(),
        "library_version": toa_core::VERSION,
        "cli_version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "seed_used": exp.uses_seed(),
        "threads": pool.current_num_threads(),
        "output_dir": output_dir,
        "config_file": config,
        "parameters": p.resolved(),
        "tolerances": p.tolerances(),
        "files": files,
    });
    write_json_to(&output_dir.join("manifest.json"), &manifest)?;

    println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
    match outcome.failure {
        Some(f) => Err(CliError::Validation(f)),
        None => Ok(()),
    }
}

fn validate(profile: &str, threads: Option<usize>, output_dir: Option<&Path>) -> Result<(), CliError> {
    let profile: Profile = profile.parse().map_err(|e: toa_core::Error| CliError::Config(e.to_string()))?;
    let reports = thread_pool(threads)?.install(|| run_all(profile));
    for r in &reports {
        println!("{r}");
    }
    if let Some(dir) = output_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        write_json_to(&dir.join("validation.json"), &json!({ "profile": profile, "criteria": reports }))?;
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("criterion {} {}: observed {}; required {}", r.id, r.name, r.observed, r.required))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join(" | ")))
    }
}
