use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddsolve::{solve_file, SolveOptions, INPUT_ERROR_EXIT};

#[derive(Parser)]
#[command(
    name = "ddsolve",
    version,
    about = "Path-following solver for inf <c, x> subject to Ax in D"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and print a JSON report.
    Solve {
        file: PathBuf,
        /// Target accuracy, in (0, 1).
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        /// Override the path constant xi (> 1).
        #[arg(long)]
        xi: Option<f64>,
        /// Override the neighborhood radius kappa.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        /// Write one CSV row per accepted iterate.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Upgrade weak certificates by projection before reporting them.
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors exit with the input-error code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(INPUT_ERROR_EXIT as u8);
        }
    };
    let Command::Solve {
        file,
        eps,
        xi,
        kappa,
        max_iters,
        trace,
        strict,
    } = cli.command;
    let options = SolveOptions {
        eps,
        xi,
        kappa,
        max_iters,
        strict,
        trace,
    };
    match solve_file(&file, &options) {
        Ok(out) => {
            println!("{}", out.report.to_json());
            log::info!(
                "{} after {} iterations",
                out.report.status,
                out.report.diagnostics.iterations
            );
            ExitCode::from(out.report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("ddsolve: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
