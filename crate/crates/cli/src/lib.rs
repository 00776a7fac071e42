//! Command-line front end: problem files, solves, reports and traces.

use std::io::Write;
use std::path::{Path, PathBuf};

use ddsolve_core::{follow, FollowerOptions, SolverConstants, TraceRow};
use thiserror::Error;

pub mod problem_file;
pub mod report;

pub use problem_file::{parse_problem_file, parse_problem_str, ParseError, ParsedProblem};
pub use report::{exit_code, CertificateReport, DiagnosticsReport, RunReport, VerificationSummary};

/// Exit code for unreadable or invalid input.
pub const INPUT_ERROR_EXIT: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("invalid problem: {0}")]
    Model(#[from] ddsolve_core::Error),
    #[error("invalid option: {0}")]
    Option(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        INPUT_ERROR_EXIT
    }
}

/// Flags of `ddsolve solve`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub eps: f64,
    pub xi: Option<f64>,
    pub kappa: Option<f64>,
    pub max_iters: usize,
    pub strict: bool,
    pub trace: Option<PathBuf>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            xi: None,
            kappa: None,
            max_iters: 500,
            strict: false,
            trace: None,
        }
    }
}

/// A finished solve: the report and every accepted trace row.
#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub report: RunReport,
    pub trace: Vec<TraceRow>,
}

/// Applies `--xi`/`--kappa` overrides to a parsed problem.
pub fn apply_overrides(parsed: ParsedProblem, options: &SolveOptions) -> Result<ParsedProblem, CliError> {
    if options.xi.is_none() && options.kappa.is_none() {
        return Ok(parsed);
    }
    let base = parsed.problem.constants();
    let constants = SolverConstants {
        xi: options.xi.unwrap_or(base.xi),
        kappa: options.kappa.unwrap_or(base.kappa),
    };
    let problem = parsed.problem.with_constants(constants)?;
    // y_τ,0 depends on ξ
    let start = ddsolve_core::StartData::from_z0(&problem, parsed.start.z0().clone())?;
    Ok(ParsedProblem { problem, start })
}

/// Runs the path follower and maps its outcome to a report.
pub fn run_solve(parsed: &ParsedProblem, options: &SolveOptions) -> Result<SolveOutput, CliError> {
    if !(options.eps > 0.0 && options.eps < 1.0) {
        return Err(CliError::Option(format!(
            "eps must lie in (0, 1), got {}",
            options.eps
        )));
    }
    if options.max_iters == 0 {
        return Err(CliError::Option("max-iters must be positive".into()));
    }
    let follower = FollowerOptions {
        eps: options.eps,
        strict: options.strict,
        max_iters: options.max_iters,
        ..FollowerOptions::default()
    };
    let outcome = follow(&parsed.problem, &parsed.start, &follower, &mut |_| {});
    let objective = outcome.report.x.as_ref().map(|x| parsed.problem.c().dot(x));
    let report = RunReport::new(&outcome.report, objective);
    if let Some(path) = &options.trace {
        write_trace(path, &outcome.trace)?;
    }
    Ok(SolveOutput {
        report,
        trace: outcome.trace,
    })
}

/// Trace CSV with a header row and shortest round-trip floats.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TraceRow::CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), CliError> {
    let io = |e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut file = std::fs::File::create(path).map_err(io)?;
    file.write_all(trace_csv(rows).as_bytes()).map_err(io)
}

/// Parses, solves and returns the report, or the input error.
pub fn solve_file(path: &Path, options: &SolveOptions) -> Result<SolveOutput, CliError> {
    let parsed = apply_overrides(parse_problem_file(path)?, options)?;
    run_solve(&parsed, options)
}
