//! Command-line front end: configuration-driven runs, estimate checks on
//! stored runs, closed-form tables and parameter sweeps.
//!
//! Exit codes: 0 success, 1 a check failed or was inconclusive, 2 invalid
//! configuration or artifacts, 3 the solver aborted.

pub mod config;
pub mod exact;
pub mod sweep;

use std::path::{Path, PathBuf};
use std::time::Instant;

use burgerslab::estimate_lab::{
    check_cigen, check_daf_tv, check_decay, check_estfond, check_gendec, check_grongen_diagonal, check_heat_linf,
    check_nonhom, check_xtau, EstimateReport, Provenance,
};
use burgerslab::flux_models::FluxSpec;
use burgerslab::fv_solver::{run, CellField, RunDiagnostics, RunMeta, RunOutput};
use burgerslab::Error as CoreError;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use config::{CheckSpec, ExperimentConfig, OUT_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run aborted: {0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }

    fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::BoundaryContact { .. }
            | CoreError::SupportExceedsGrid { .. }
            | CoreError::CflViolation { .. }
            | CoreError::DegenerateMoment { .. }
            | CoreError::EntropyDomain(..) => CliError::Runtime(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

#[derive(Parser, Debug)]
#[command(name = "burgerslab", version, about = "Entropy solutions of multi-d Burgers-type conservation laws")]
pub struct Cli {
    /// Worker threads for cell updates and sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one experiment and store its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output root; the run goes to OUT/<run_id>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate estimate checks on a stored run.
    Verify {
        run_dir: PathBuf,
        /// Comma-separated check kinds; replaces the configured list.
        #[arg(long)]
        checks: Option<String>,
        /// Time window T0:T1 applied to every check.
        #[arg(long)]
        window: Option<String>,
    },
    /// Print closed-form values.
    Exact {
        /// Write the table to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(subcommand)]
        what: exact::ExactCommand,
    },
    /// Run a template experiment over one parameter axis.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: sweep::SweepAxis,
        /// Comma-separated values; exponent lists are separated by ';'.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses arguments, executes the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("configuration error: --threads must be at least 1");
            return 2;
        }
        // fails harmlessly when a pool already exists (repeated in-process calls)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out.as_deref()).map(|_| 0),
        Command::Verify { run_dir, checks, window } => cmd_verify(&run_dir, checks.as_deref(), window.as_deref()),
        Command::Exact { output, what } => exact::cmd_exact(&what, output.as_deref()).map(|_| 0),
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => sweep::cmd_sweep(&config, axis, &values, out.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

/// Output root: flag, then config, then environment, then `burgerslab-out`.
pub fn output_root(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("burgerslab-out"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub run_id: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<RunMeta>,
    pub wall_time_s: f64,
    pub threads: usize,
    pub files: Vec<String>,
}

pub const MANIFEST: &str = "manifest.json";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const INITIAL: &str = "initial.snap";
pub const FINAL: &str = "final.snap";

/// Executes a normalized config and writes its artifacts to `dir`.
pub fn run_into(config: &ExperimentConfig, dir: &Path) -> Result<RunOutput, CliError> {
    let start = Instant::now();
    let result = run(config.grid(), &config.data, &config.flux, &config.solver);
    let mut manifest = Manifest {
        tool: "burgerslab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        run_id: config.run_id.clone(),
        status: RunStatus::Completed,
        error: None,
        config: config.clone(),
        meta: None,
        wall_time_s: 0.0,
        threads: rayon::current_num_threads(),
        files: Vec::new(),
    };
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let out = match result {
        Ok(out) => out,
        Err(e) => {
            let err = CliError::from_core(e);
            manifest.status = RunStatus::Aborted;
            manifest.error = Some(err.to_string());
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            write_file(&dir.join(MANIFEST), &serde_json::to_string_pretty(&manifest).unwrap())?;
            return Err(err);
        }
    };
    write_file(&dir.join(DIAGNOSTICS), &out.diagnostics.to_csv())?;
    write_file(&dir.join(INITIAL), &out.initial.to_snapshot())?;
    write_file(&dir.join(FINAL), &out.final_field.to_snapshot())?;
    manifest.files = vec![DIAGNOSTICS.into(), INITIAL.into(), FINAL.into()];
    for (k, snap) in out.snapshots.iter().enumerate() {
        let name = format!("snapshots/snap_{k:04}.snap");
        write_file(&dir.join(&name), &snap.to_snapshot())?;
        manifest.files.push(name);
    }
    manifest.meta = Some(out.diagnostics.meta.clone());
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    write_file(&dir.join(MANIFEST), &serde_json::to_string_pretty(&manifest).unwrap())?;
    Ok(out)
}

pub fn cmd_run(config_path: &Path, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let config = ExperimentConfig::load(config_path)?.normalize()?;
    let dir = output_root(out, &config).join(&config.run_id);
    let result = run_into(&config, &dir)?;
    println!(
        "run {} completed: {} steps, {} samples, artifacts in {}",
        config.run_id,
        result.diagnostics.meta.steps,
        result.diagnostics.samples.len(),
        dir.display()
    );
    Ok(dir)
}

/// A stored run loaded back from disk.
pub struct StoredRun {
    pub manifest: Manifest,
    pub diagnostics: RunDiagnostics,
    pub initial: CellField,
}

pub fn load_run(dir: &Path) -> Result<StoredRun, CliError> {
    let bad = |m: String| CliError::Config(m);
    let read = |name: &str| {
        let p = dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| bad(format!("cannot read {}: {e}", p.display())))
    };
    let manifest: Manifest =
        serde_json::from_str(&read(MANIFEST)?).map_err(|e| bad(format!("invalid manifest: {e}")))?;
    if manifest.status != RunStatus::Completed {
        return Err(bad(format!(
            "run {} did not complete: {}",
            manifest.run_id,
            manifest.error.clone().unwrap_or_default()
        )));
    }
    let meta = manifest
        .meta
        .clone()
        .ok_or_else(|| bad("manifest lacks run metadata".into()))?;
    let diagnostics = RunDiagnostics::from_csv(meta, &read(DIAGNOSTICS)?).map_err(|e| bad(e.to_string()))?;
    let initial = CellField::from_snapshot(&read(INITIAL)?).map_err(|e| bad(e.to_string()))?;
    Ok(StoredRun {
        manifest,
        diagnostics,
        initial,
    })
}

fn parse_window(s: &str) -> Result<[f64; 2], CliError> {
    let bad = || CliError::Config(format!("window must look like T0:T1 with 0 <= T0 < T1, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if !(a >= 0.0 && b > a && b.is_finite()) {
        return Err(bad());
    }
    Ok([a, b])
}

/// Resolves the check list for `verify`: `--checks` replaces the configured
/// list, reusing configured parameters for kinds that appear in both.
pub fn select_checks(configured: &[CheckSpec], names: Option<&str>) -> Result<Vec<CheckSpec>, CliError> {
    let Some(names) = names else {
        return Ok(configured.to_vec());
    };
    names
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| match configured.iter().find(|c| c.kind() == name) {
            Some(c) => Ok(c.clone()),
            None => CheckSpec::default_for(name),
        })
        .collect()
}

/// Runs one check; evaluation errors become inconclusive reports.
pub fn evaluate(check: &CheckSpec, diag: &RunDiagnostics, initial: &CellField, spec: &FluxSpec) -> EstimateReport {
    let d = spec.n() + 1;
    let result = match check {
        CheckSpec::Estfond { options } => check_estfond(diag, d, options),
        CheckSpec::Nonhom { options } => check_nonhom(diag, d, options),
        CheckSpec::Decay { options } => check_decay(diag, d, options),
        CheckSpec::Gendec { q, options } => check_gendec(diag, *q, d, options),
        CheckSpec::DafTv { options } => check_daf_tv(diag, options),
        CheckSpec::HeatLinf { options } => check_heat_linf(diag, options),
        CheckSpec::Xtau { taus, options } => {
            let taus = if taus.is_empty() {
                let cutoff = diag.last().t / 10.0;
                diag.samples.iter().map(|s| s.t).filter(|&t| t <= cutoff).collect()
            } else {
                taus.clone()
            };
            check_xtau(diag, d, &taus, options)
        }
        CheckSpec::Cigen { options } => check_cigen(diag, initial, spec, options),
        CheckSpec::GrongenDiagonal { grid, options } => check_grongen_diagonal(diag, initial, spec, grid, options),
    };
    result.unwrap_or_else(|e| EstimateReport::inconclusive(check.kind(), e.to_string()))
}

pub const REPORTS_JSON: &str = "reports.json";
pub const REPORTS_CSV: &str = "reports.csv";

pub fn cmd_verify(dir: &Path, checks: Option<&str>, window: Option<&str>) -> Result<i32, CliError> {
    let stored = load_run(dir)?;
    let config = stored.manifest.config.clone().normalize()?;
    let mut list = select_checks(&config.checks, checks)?;
    if let Some(w) = window {
        let w = parse_window(w)?;
        for c in &mut list {
            c.options_mut().window = Some(w);
        }
    }
    let provenance = Provenance {
        grid: Some(config.grid().clone()),
        flux: Some(config.flux.clone()),
    };
    let reports: Vec<EstimateReport> = {
        use rayon::prelude::*;
        list.par_iter()
            .map(|c| {
                evaluate(c, &stored.diagnostics, &stored.initial, &config.flux)
                    .with_provenance(&config.run_id, provenance.clone())
            })
            .collect()
    };
    write_file(&dir.join(REPORTS_JSON), &serde_json::to_string_pretty(&reports).unwrap())?;
    let mut csv = String::from(EstimateReport::CSV_HEADER);
    csv.push('\n');
    for r in &reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    write_file(&dir.join(REPORTS_CSV), &csv)?;
    for r in &reports {
        let status = serde_json::to_value(r.status).unwrap();
        println!(
            "{:<18} {:<12} ratio {:<12.6e} slope {:<10} {}",
            r.estimate,
            status.as_str().unwrap(),
            r.ratio,
            r.slope.map_or("-".into(), |s| format!("{s:.4}")),
            r.notes.join("; ")
        );
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    println!("{} of {} checks passed", reports.len() - failed, reports.len());
    Ok(if failed == 0 { 0 } else { 1 })
}
