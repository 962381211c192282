//! The `tempus` command line.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 run completed with
//! missing cells.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::aggregate::aggregate_all;
use crate::error::{Error, Result};
use crate::forecasters::ParamValue;
use crate::io::{
    aggregate_to_csv, config_hash, effective_seed, generated_to_csv, read_pivot_csv, rebuild_reports, write_reports,
    write_text, Manifest, RunMetadata, SEED_ENV,
};
use crate::pipeline::run_benchmark;
use crate::protocol::{AdapterCommand, AdapterProcess, ForecastRequest, PROTOCOL_VERSION};
use crate::synth::{generate, GenSpec};
use crate::Matrix64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tempus", version, about = "Forecasting benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic series from a JSON generator spec.
    Generate {
        spec: PathBuf,
        out: PathBuf,
        /// Also write the noise-free signal as `y_base`.
        #[arg(long)]
        with_base: bool,
    },
    /// Tune, evaluate and report every task/model cell of a manifest.
    Eval { manifest: PathBuf },
    /// Win rate and skill score from a pivot CSV.
    Aggregate {
        pivot: PathBuf,
        #[arg(long, default_value = "seasonal_naive")]
        baseline: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild leaderboard and summary from a run directory.
    Report { run_dir: PathBuf },
    /// Check that an adapter speaks the forecast protocol.
    AdapterCheck {
        /// Per-request timeout in seconds.
        #[arg(long)]
        timeout: Option<f64>,
        #[arg(required = true, trailing_var_arg = true, allow_hyphen_values = true)]
        command: Vec<String>,
    },
}

/// Runs the CLI on `argv` (including the program name), writing to the given
/// streams, and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let seed_env = std::env::var(SEED_ENV).ok();
    let result = match cli.command {
        Command::Generate { spec, out: path, with_base } => cmd_generate(&spec, &path, with_base, seed_env.as_deref(), out),
        Command::Eval { manifest } => cmd_eval(&manifest, seed_env.as_deref(), out),
        Command::Aggregate { pivot, baseline, out: path } => cmd_aggregate(&pivot, &baseline, path.as_ref(), out),
        Command::Report { run_dir } => cmd_report(&run_dir, out),
        Command::AdapterCheck { timeout, command } => cmd_adapter_check(&command, timeout, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {} ({})", e, e.kind());
            EXIT_INVALID
        }
    }
}

fn cmd_generate(
    spec_path: &PathBuf,
    out_path: &PathBuf,
    with_base: bool,
    seed_env: Option<&str>,
    out: &mut dyn Write,
) -> Result<i32> {
    let text = fs::read_to_string(spec_path).map_err(|e| Error::io(spec_path, e))?;
    let mut spec: GenSpec = serde_json::from_str(&text)?;
    spec.seed = effective_seed(spec.seed, seed_env)?;
    let series = generate(&spec)?;
    write_text(out_path, &generated_to_csv(&series, with_base)?)?;
    let _ = writeln!(out, "wrote {} points to {}", series.y.len(), out_path.display());
    Ok(EXIT_OK)
}

fn cmd_eval(manifest_path: &PathBuf, seed_env: Option<&str>, out: &mut dyn Write) -> Result<i32> {
    let run = Manifest::load(manifest_path, seed_env)?;
    let config = run.bench_config();
    let result = run_benchmark(&run.tasks, &run.models, &config);
    let baseline = &run.manifest.baseline;
    let aggregates = result
        .pivots
        .iter()
        .map(|p| aggregate_all(p, baseline))
        .collect::<Result<Vec<_>>>()?;
    let missing = result.missing_cells();
    let meta = RunMetadata {
        run_id: config.run_id.clone(),
        seed: run.seed,
        config_hash: config_hash(&run.manifest_bytes),
        harness_version: env!("CARGO_PKG_VERSION").to_string(),
        protocol_version: PROTOCOL_VERSION,
        baseline: baseline.clone(),
        n_tune: config.n_tune,
        n_test: config.n_test,
        tasks: result.tasks.clone(),
        models: result.models.clone(),
        missing_cells: missing,
    };
    let bundle = write_reports(&result.pivots, &aggregates, &result.audit, &meta, &run.output_dir)?;
    let _ = writeln!(
        out,
        "{} tasks x {} models, {} missing cells; reports in {}",
        meta.tasks.len(),
        meta.models.len(),
        missing,
        bundle.dir.display()
    );
    for cell in result.cells.iter().filter(|c| c.error.is_some()) {
        let _ = writeln!(out, "  failed {}/{}: {}", cell.task_id, cell.model, cell.error.as_deref().unwrap_or(""));
    }
    Ok(if missing > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn cmd_aggregate(pivot_path: &PathBuf, baseline: &str, out_path: Option<&PathBuf>, out: &mut dyn Write) -> Result<i32> {
    let pivot = read_pivot_csv(pivot_path)?;
    let text = aggregate_to_csv(&aggregate_all(&pivot, baseline)?)?;
    match out_path {
        Some(path) => write_text(path, &text)?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(EXIT_OK)
}

fn cmd_report(dir: &PathBuf, out: &mut dyn Write) -> Result<i32> {
    let bundle = rebuild_reports(dir)?;
    let _ = writeln!(
        out,
        "rebuilt {} files in {}, {} missing cells",
        bundle.files.len(),
        dir.display(),
        bundle.missing_cells
    );
    Ok(if bundle.missing_cells > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

/// Handshake, one seasonal-naive-shaped forecast, a repeat of the same
/// request, and a covariate request when the adapter claims support.
fn cmd_adapter_check(command: &[String], timeout: Option<f64>, out: &mut dyn Write) -> Result<i32> {
    let cmd = AdapterCommand {
        command: command[0].clone(),
        args: command[1..].to_vec(),
        timeout_secs: timeout,
    };
    let mut failures = 0;
    let mut report = |name: &str, result: std::result::Result<String, String>| {
        let (tag, detail) = match result {
            Ok(d) => ("ok", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        let _ = writeln!(out, "{tag:<4} {name}: {detail}");
    };

    let mut process = AdapterProcess::spawn(&cmd)?;
    let caps = match process.hello() {
        Ok(c) => c,
        Err(e) => {
            report("handshake", Err(e.to_string()));
            return Ok(EXIT_INVALID);
        }
    };
    report(
        "handshake",
        Ok(format!(
            "name={} supports_covariates={} grid={}",
            caps.name,
            caps.supports_covariates,
            caps.hyper_grid.as_ref().map_or(0, |_| caps.expand_grid().len())
        )),
    );

    let context = Matrix64::row_vector(vec![10.0, 20.0, 30.0, 40.0]);
    let mut request = ForecastRequest::new("adapter-check", &context, 3);
    if caps.hyper_grid.as_ref().is_some_and(|g| g.contains_key("L")) {
        request.params = Some([("L".to_string(), ParamValue::Int(2))].into());
    }
    let first = process.forecast(&request);
    report(
        "forecast",
        first.as_ref().map(|f| format!("{:?}", f.row(0))).map_err(|e| e.to_string()),
    );
    let second = process.forecast(&request);
    report(
        "stateless",
        match (&first, &second) {
            (Ok(a), Ok(b)) if a == b => Ok("repeat request gave the same values".into()),
            (_, Err(e)) => Err(e.to_string()),
            _ => Err("repeat request gave different values".into()),
        },
    );
    if caps.supports_covariates {
        let mut with_cov = ForecastRequest::new("adapter-check-cov", &context, 3);
        with_cov.covariates_past = vec![vec![1.0, 2.0, 3.0, 4.0]];
        with_cov.covariates_future = vec![vec![5.0, 6.0, 7.0]];
        report(
            "covariates",
            process.forecast(&with_cov).map(|_| "accepted".into()).map_err(|e| e.to_string()),
        );
    }
    Ok(if failures == 0 { EXIT_OK } else { EXIT_INVALID })
}
