//! `toolcraft`: run trials, benchmarks, replays, scene validation and reports.

mod backend;
mod commands;
mod divergence;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "toolcraft", version, about = "Staged LLM tool-use planning: trials, benchmarks and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trial of a task with one method.
    Run {
        #[arg(long)]
        task: String,
        #[arg(long, default_value = "full")]
        method: String,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the trial record under this root.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run tasks x methods x n trials and emit the report tables.
    Bench {
        /// Comma-separated task slugs (default: the six benchmark tasks).
        #[arg(long, value_delimiter = ',')]
        tasks: Vec<String>,
        /// Comma-separated methods (default: all five).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Base seed; trial i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Write into <out> directly instead of a fresh timestamped subdirectory.
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Tool-use rate per variant of a discriminative task family.
    Discriminative {
        /// sofa-traversing or sofa-climbing
        #[arg(long)]
        family: String,
        #[arg(long, default_value = "full")]
        method: String,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Re-execute a stored script and compare against its stored trace.
    Replay {
        /// A trial record directory, or a script file with a sibling trace.json.
        path: PathBuf,
        /// Task slug when it cannot be read from a record.json.
        #[arg(long)]
        task: Option<String>,
        /// Scene or task JSON to execute against instead of the built-in scene.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Simulator seed (default: the record's seed, else 0).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check scene or task files (all built-in tasks when no path is given).
    Validate { paths: Vec<PathBuf> },
    /// Rebuild the report tables from stored trial records.
    Report {
        records: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        /// Also write report files into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Live,
    Replay,
    Stub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Markdown,
    Csv,
    Both,
}

#[derive(Debug, Clone, Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendKind::Replay)]
    backend: BackendKind,
    /// Fixture directory for the replay backend.
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Reject replayed responses whose recorded prompt differs from the current one.
    #[arg(long)]
    strict: bool,
    /// Chat-completions endpoint for the live backend.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4")]
    model: String,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    credential_env: String,
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: error.into() }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::usage(e)
    }
}

/// 0 on success, 1 on a task or verification failure.
pub type Outcome = Result<bool, Failure>;

/// The error chain joined with `: `, skipping causes already spelled out by
/// the message before them.
fn message(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut last = String::new();
    for cause in e.chain() {
        let m = cause.to_string();
        if !last.contains(&m) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&m);
        }
        last = m;
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { task, method, backend, seed, out } => commands::run(&task, &method, &backend, seed, out.as_deref()),
        Command::Bench { tasks, methods, backend, n, seed, parallelism, out, no_timestamp } => {
            commands::bench(&tasks, &methods, &backend, n, seed, parallelism, &out, no_timestamp)
        }
        Command::Discriminative { family, method, backend, n } => commands::discriminative(&family, &method, &backend, n),
        Command::Replay { path, task, scene, seed } => commands::replay(&path, task.as_deref(), scene.as_deref(), seed),
        Command::Validate { paths } => commands::validate(&paths),
        Command::Report { records, format, out } => commands::report(&records, format, out.as_deref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", message(&f.error));
            ExitCode::from(f.code)
        }
    }
}
