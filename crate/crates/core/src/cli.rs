//! Command-line driver: parse, solve, report.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::annotations::{AnnotationError, AnnotationSet, ResolvedAnnotations};
use crate::ir::{parse_program, IrError};
use crate::pta::{solve, SolveError};
use crate::reflection::{EngineConfig, Mode, Rule};
use crate::soundness::{build_report, Report, Verdict};

pub const EXIT_SOUND: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSOUND: i32 = 2;

/// Environment variable that overrides the solver's iteration budget.
pub const MAX_ITERS_VAR: &str = "SOLAR_MAX_ITERS";

#[derive(Debug, Parser)]
#[command(
    name = "refpta",
    version,
    about = "Reflection-aware points-to analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze a program and report unsound and imprecise reflective calls.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Solar,
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Json,
    Text,
}

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "solar")]
    pub mode: ModeArg,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub threshold_cast: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub threshold_targets: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub emit: Emit,
    /// Switch off a rule by name, e.g. `I-InvTp`. Repeatable.
    #[arg(long = "disable", value_parser = parse_rule)]
    pub disable: Vec<Rule>,
}

fn parse_rule(s: &str) -> Result<Rule, String> {
    Rule::from_name(s).ok_or_else(|| format!("unknown rule `{s}`"))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write report: {0}")]
    Write(#[from] std::io::Error),
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: IrError },
    #[error("{path}: {source}")]
    Annotations {
        path: PathBuf,
        source: AnnotationError,
    },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{MAX_ITERS_VAR} must be a positive integer, got `{0}`")]
    Budget(String),
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })
}

impl AnalyzeArgs {
    pub fn engine_config(&self, max_iters: Option<&str>) -> Result<EngineConfig, CliError> {
        let mut cfg = EngineConfig {
            mode: match self.mode {
                ModeArg::Solar => Mode::Solar,
                ModeArg::Probe => Mode::Probe,
            },
            cast_threshold: self.threshold_cast as usize,
            target_threshold: self.threshold_targets as usize,
            ..EngineConfig::default()
        };
        if let Some(raw) = max_iters {
            cfg.max_iterations = raw
                .trim()
                .parse()
                .ok()
                .filter(|&n: &usize| n > 0)
                .ok_or_else(|| CliError::Budget(raw.to_string()))?;
        }
        cfg.disabled.extend(self.disable.iter().copied());
        Ok(cfg)
    }
}

/// Parses, solves and builds the report for one invocation.
pub fn analyze(args: &AnalyzeArgs, max_iters: Option<&str>) -> Result<Report, CliError> {
    let cfg = args.engine_config(max_iters)?;
    let program = parse_program(&read(&args.input)?).map_err(|source| CliError::Parse {
        path: args.input.clone(),
        source,
    })?;
    let annotations = match &args.annotations {
        None => ResolvedAnnotations::default(),
        Some(path) => AnnotationSet::parse(&read(path)?)
            .and_then(|set| set.resolve(&program))
            .map_err(|source| CliError::Annotations {
                path: path.clone(),
                source,
            })?,
    };
    let state = solve(&program, &cfg, &annotations)?;
    Ok(build_report(&program, &state, &cfg))
}

fn render(report: &Report, emit: Emit) -> String {
    match emit {
        Emit::Json => report.to_json() + "\n",
        Emit::Text => report.to_string() + "\n",
    }
}

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_ERROR;
            }
            let _ = write!(out, "{e}");
            return EXIT_SOUND;
        }
    };
    let Command::Analyze(args) = cli.command;
    let max_iters = std::env::var(MAX_ITERS_VAR).ok();
    let result = analyze(&args, max_iters.as_deref()).and_then(|report| {
        let text = render(&report, args.emit);
        match &args.report {
            Some(path) => std::fs::write(path, text)?,
            None => out.write_all(text.as_bytes())?,
        }
        Ok(report.verdict)
    });
    match result {
        Ok(Verdict::Sound) => EXIT_SOUND,
        Ok(Verdict::Unsound) => EXIT_UNSOUND,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
