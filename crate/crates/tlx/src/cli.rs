//! `tlx` command line.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use tlx_core::{
    compute_focused_objects, metrics::metrics_from_summaries, metrics_report, CohortKey, EventSource,
    Variant, WeightingMode, DEFAULT_FOCUS_THRESHOLD_MS,
};

use crate::docs::{ResponseFile, ScoreDocument};
use crate::report::{render_metrics_table, render_report, ReportFormat};
use crate::service;
use crate::simulate::{self, SimulationSpec};
use crate::store::{Store, StoreError};
use crate::wire::parse_event_lines;

#[derive(Debug, Parser)]
#[command(name = "tlx", version, about = "XR NASA-TLX questionnaires and interaction metrics")]
pub struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "TLX_STORE", default_value = "tlx-store")]
    pub store: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
    /// Score a questionnaire response file and print the result as JSON.
    Score { file: PathBuf },
    /// Print session metrics for an event log.
    Metrics {
        file: PathBuf,
        /// Minimum single-gaze duration for an object to count as focused.
        #[arg(long, default_value_t = DEFAULT_FOCUS_THRESHOLD_MS)]
        threshold_ms: u64,
        /// Emit a report row (csv) or metrics document (json) instead of a table.
        #[arg(long)]
        format: Option<ReportFormat>,
    },
    /// Generate synthetic sessions from a simulation spec.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the simulation spec file.
        #[arg(long)]
        seed: Option<u64>,
        /// Also load the sessions into the store under a new study.
        #[arg(long)]
        load: bool,
    },
    /// Print the cohort metrics report for the store.
    Report {
        #[arg(long)]
        group_by: Option<String>,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Restrict to one study.
        #[arg(long)]
        study: Option<String>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    User(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::User(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io { .. } | StoreError::Corrupt { .. } => CliError::Io(e.to_string()),
            other => CliError::User(other.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn cmd_score(file: &Path) -> Result<String, CliError> {
    let text = read_file(file)?;
    let response: ResponseFile =
        serde_json::from_str(&text).map_err(|e| CliError::User(format!("{}: {e}", file.display())))?;
    let score = response.score().map_err(|e| CliError::User(e.to_string()))?;
    let mut out = serde_json::to_string(&ScoreDocument::from(&score)).expect("score serializes");
    out.push('\n');
    Ok(out)
}

fn cmd_metrics(file: &Path, threshold_ms: u64, format: Option<ReportFormat>) -> Result<String, CliError> {
    let text = read_file(file)?;
    let batch = parse_event_lines(&text, EventSource::File)
        .map_err(|e| CliError::User(format!("{}: {e}", file.display())))?;
    let events = batch.events();
    let objects = compute_focused_objects(events, threshold_ms)
        .map_err(|e| CliError::User(format!("{}: {e}", file.display())))?;
    let metrics = metrics_from_summaries(events, &objects);
    Ok(match format {
        None => render_metrics_table(&metrics, &objects),
        Some(f) => render_report(vec![metrics_report(metrics, &objects, None, None)], None, f),
    })
}

fn cmd_simulate(store: &Path, spec_path: &Path, out: &Path, seed: Option<u64>, load: bool) -> Result<String, CliError> {
    let text = read_file(spec_path)?;
    let mut spec: SimulationSpec =
        serde_json::from_str(&text).map_err(|e| CliError::User(format!("{}: {e}", spec_path.display())))?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let users = simulate::generate(&spec).map_err(|e| CliError::User(e.to_string()))?;
    let written =
        simulate::write_tree(&spec, &users, out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut summary = format!("wrote {} files to {}\n", written.len(), out.display());
    if load {
        let study_id = load_into_store(store, &spec)?;
        summary.push_str(&format!("loaded {} sessions into study {study_id}\n", users.len()));
    }
    Ok(summary)
}

/// Regenerates the users with store-issued session ids and ingests them.
fn load_into_store(root: &Path, spec: &SimulationSpec) -> Result<String, CliError> {
    let store = Store::open(root)?;
    let name = format!("simulation seed {}", spec.seed);
    let study = store.create_study(&name, Variant::Classic6, WeightingMode::Classic)?;
    let mut failure = None;
    let users = simulate::generate_with(spec, |i, profile| {
        match store.create_session(&study.study_id, &format!("user-{i:03}"), *profile) {
            Ok(s) => s.session_id,
            Err(e) => {
                failure.get_or_insert(e);
                String::from("unassigned")
            }
        }
    })
    .map_err(|e| CliError::User(e.to_string()))?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    for u in users {
        if u.events.is_empty() {
            continue;
        }
        let batch = tlx_core::EventBatch::new(u.events, EventSource::File)
            .map_err(|e| CliError::User(e.to_string()))?;
        store.append_events(&u.session_id, &batch)?;
    }
    Ok(study.study_id)
}

fn cmd_report(store: &Path, group_by: Option<&str>, format: ReportFormat, study: Option<&str>) -> Result<String, CliError> {
    let key = group_by
        .map(str::parse::<CohortKey>)
        .transpose()
        .map_err(|e| CliError::User(e.to_string()))?;
    if !store.is_dir() {
        return Err(CliError::User(format!("{}: no store at this path", store.display())));
    }
    let store = Store::open(store)?;
    let rows = store.report_rows(study, DEFAULT_FOCUS_THRESHOLD_MS)?;
    if rows.is_empty() {
        return Err(CliError::User("no sessions with events in the store".into()));
    }
    Ok(render_report(rows, key, format))
}

fn cmd_serve(store: &Path, bind: &str) -> Result<String, CliError> {
    let store = Arc::new(Store::open(store)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(format!("runtime: {e}")))?;
    runtime.block_on(async {
        let (listener, addr) = service::bind(bind)
            .await
            .map_err(|e| CliError::Io(format!("cannot bind {bind}: {e}")))?;
        eprintln!("listening on http://{addr}");
        service::serve_on(listener, store, service::shutdown_signal())
            .await
            .map_err(|e| CliError::Io(format!("server error: {e}")))
    })?;
    Ok(String::new())
}

pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Serve { bind } => cmd_serve(&cli.store, &bind),
        Command::Score { file } => cmd_score(&file),
        Command::Metrics {
            file,
            threshold_ms,
            format,
        } => cmd_metrics(&file, threshold_ms, format),
        Command::Simulate { spec, out, seed, load } => cmd_simulate(&cli.store, &spec, &out, seed, load),
        Command::Report {
            group_by,
            format,
            study,
        } => cmd_report(&cli.store, group_by.as_deref(), format, study.as_deref()),
    }
}

/// Parses `args`, runs the command, prints output to stdout and diagnostics
/// to stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
