//! `teamharness`: drive runs, validate answers, score, report and serve the rater API.
//!
//! Exit status: 0 on success, 1 when a command fails, 2 on usage errors.

mod commands;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use teamharness_core::model::Mode;
use teamharness_core::scoring::CALIBRATION_THRESHOLD;

#[derive(Debug, Parser)]
#[command(
    name = "teamharness",
    version,
    about = "Multi-agent creative problem solving benchmark harness"
)]
pub struct Cli {
    /// Workspace root holding runs/, packs/, scores/ and reports/.
    #[arg(long, short = 'w', global = true, env = "TEAMHARNESS_WORKSPACE", default_value = ".")]
    pub workspace: PathBuf,
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute one run against a model endpoint and store it.
    Run(RunArgs),
    /// Re-execute a stored run from its recorded exchanges.
    Replay(ReplayArgs),
    /// Parse and check the six step answers of a run or an answers file.
    Validate(ValidateArgs),
    /// Diversity, blank and efficiency metrics over the workspace.
    Metrics(MetricsArgs),
    /// Import or export score sheets and final scores.
    #[command(subcommand)]
    Score(ScoreCommand),
    /// Serve the rater-console HTTP API over this workspace.
    Serve(ServeArgs),
    /// Query a running rater API.
    Remote(RemoteArgs),
    /// Rebuild reports/ from stored runs and scores.
    Report,
    /// Statistical tests over final scores.
    #[command(subcommand)]
    Stats(StatsCommand),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run manifest (JSON); flags below override its fields.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub scenario: Option<String>,
    /// Defaults to `<mode>_<scenario>_<NNN>`, the next free number.
    #[arg(long)]
    pub run_id: Option<String>,
    /// Endpoint configuration (JSON). The API key is read from the variable it names.
    #[arg(long)]
    pub endpoint: Option<PathBuf>,
    /// Use the offline stub model instead of an HTTP endpoint.
    #[arg(long)]
    pub stub: bool,
    #[arg(long)]
    pub step_pack: Option<String>,
    #[arg(long)]
    pub scenario_pack: Option<String>,
    #[arg(long)]
    pub templates: Option<String>,
    /// Also write the replay script of the finished run here.
    #[arg(long)]
    pub save_script: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Stored run whose manifest drives the replay.
    pub run_id: String,
    /// Replay script; defaults to the run's own recorded exchanges.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Store the replayed run under this id instead of comparing it with the original.
    #[arg(long)]
    pub store_as: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Stored run id.
    #[arg(required_unless_present = "answers", conflicts_with = "answers")]
    pub run_id: Option<String>,
    /// An answers document with `===== Step k =====` headers.
    #[arg(long)]
    pub answers: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    /// Exit 1 when any step has violations.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TokenizationArg {
    Auto,
    Character,
    Whitespace,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long, value_enum, default_value = "auto")]
    pub tokenization: TokenizationArg,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum ScoreCommand {
    /// Import sheets (CSV or JSON) or a final-score table (CSV with a `model` column).
    Import(ScoreImportArgs),
    /// Export the latest sheet of every rater.
    Export(ScoreExportArgs),
}

#[derive(Debug, Args)]
pub struct ScoreImportArgs {
    pub file: PathBuf,
    /// Submit through a running rater API instead of writing the workspace directly.
    #[arg(long)]
    pub server: Option<String>,
    #[arg(long, default_value = "TEAMHARNESS_API_TOKEN")]
    pub token_env: String,
    #[arg(long, default_value_t = CALIBRATION_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SheetFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ScoreExportArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: SheetFormat,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Variable holding the shared bearer token; the API is open when it is unset.
    #[arg(long, default_value = "TEAMHARNESS_API_TOKEN")]
    pub token_env: String,
    #[arg(long, default_value_t = CALIBRATION_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct RemoteArgs {
    #[arg(long, env = "TEAMHARNESS_SERVER", default_value = "http://127.0.0.1:8080")]
    pub server: String,
    #[arg(long, default_value = "TEAMHARNESS_API_TOKEN")]
    pub token_env: String,
    #[command(subcommand)]
    pub command: RemoteCommand,
}

#[derive(Debug, Subcommand)]
pub enum RemoteCommand {
    Sessions,
    Consistency { session_id: String },
    Cases,
    Assign { case_id: String, rater_id: String },
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Paired signed-rank test per model between two conditions.
    Wilcoxon(WilcoxonArgs),
}

#[derive(Debug, Args)]
pub struct WilcoxonArgs {
    /// Final scores CSV (`model,condition,scenario,total`); defaults to reports/finals.csv.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, default_value = "teamllm")]
    pub treatment: String,
    #[arg(long, default_value = "baseline")]
    pub control: String,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long)]
    pub csv: bool,
}

/// Lets `teamharness ... | head` end quietly instead of panicking on EPIPE.
fn restore_default_sigpipe() {
    #[cfg(unix)]
    // SAFETY: runs first in main, before any other thread exists.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

fn main() -> ExitCode {
    restore_default_sigpipe();
    let cli = Cli::parse();
    let filter = if cli.verbose { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| filter.into()))
        .with_writer(std::io::stderr)
        .init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match runtime.block_on(commands::dispatch(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
