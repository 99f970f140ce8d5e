//! `crepe` command-line pipeline: simulate → correlate → embed → evaluate →
//! report, plus `sweep` over integration times, methods and tissue presets.
//!
//! Every subcommand writes a `manifest.json` (or `<output>.manifest.json`)
//! echoing its arguments and resolved configuration. Failures print one JSON
//! line on stderr, `{"error":{"stage":..,"kind":..,"message":..}}`, and exit
//! with 1; usage errors exit with 2.

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub mod correlate;
pub mod embed;
pub mod evaluate;
pub mod manifest;
pub mod report;
pub mod simulate;
pub mod sweep;
mod svg;

#[derive(Debug, Parser)]
#[command(name = "crepe", version, about = "Photon-count correlation and label-free event clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset of recordings plus labels.csv.
    Simulate(simulate::SimulateArgs),
    /// Turn recordings (or an in-memory simulation) into a feature CSV.
    Correlate(correlate::CorrelateArgs),
    /// Embed and cluster a feature CSV without labels.
    Embed(embed::EmbedArgs),
    /// Score cluster ids against labels.
    Evaluate(evaluate::EvaluateArgs),
    /// SVG scatter and accuracy plots with their data as CSV.
    Report(report::ReportArgs),
    /// Correlate/embed/evaluate over a grid of integration times, methods and tissues.
    Sweep(sweep::SweepArgs),
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Correlate(_) => "correlate",
            Command::Embed(_) => "embed",
            Command::Evaluate(_) => "evaluate",
            Command::Report(_) => "report",
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Stage(crepe_core::Error),
}

impl From<crepe_core::Error> for CliError {
    fn from(e: crepe_core::Error) -> Self {
        CliError::Stage(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Stage(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn error_line(stage: &str, kind: &str, message: &str) -> String {
    serde_json::json!({"error": {"stage": stage, "kind": kind, "message": message}}).to_string()
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("CREPE_THREADS") else {
        return Ok(());
    };
    let n: usize = match v.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return usage(format!("CREPE_THREADS must be a positive integer, got {v:?}")),
    };
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", "usage", first));
            eprint!("{msg}");
            return 2;
        }
    };
    let stage = cli.command.stage();
    let echo: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Simulate(a) => simulate::run(a, &echo),
        Command::Correlate(a) => correlate::run(a, &echo),
        Command::Embed(a) => embed::run(a, &echo),
        Command::Evaluate(a) => evaluate::run(a, &echo),
        Command::Report(a) => report::run(a, &echo),
        Command::Sweep(a) => sweep::run(a, &echo),
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("{}", error_line(stage, "usage", &msg));
            2
        }
        Err(CliError::Stage(e)) => {
            eprintln!("{}", error_line(stage, e.kind(), &e.to_string()));
            1
        }
    }
}

/// Comma-separated list parser shared by several flags.
pub(crate) fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return usage(format!("empty {what} list"));
    }
    items
        .iter()
        .map(|s| s.parse().map_err(|_| CliError::Usage(format!("bad {what} {s:?}"))))
        .collect()
}
