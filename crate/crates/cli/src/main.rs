//! Command-line front end: run experiment matrices and summarize their records.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cpsmoea::experiment::{
    compare_dirs, load_records, preset, run_matrix, summarize_dir, write_summary, ExperimentMatrix, Metric, RunnerOptions,
};
use cpsmoea::Error;

#[derive(Parser)]
#[command(name = "cpsmoea", version, about = "Classification-based preselection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment matrix described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Run one of the built-in matrices.
    Preset {
        /// paper_small, paper_large, sensitivity_M or sensitivity_cap.
        name: String,
        /// Print the matrix as JSON instead of running it.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Recompute the summary tables of a finished output directory.
    Summarize { dir: PathBuf },
    /// Compare the final IGD of runs shared by two output directories.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

#[derive(Args)]
struct ExecArgs {
    /// Output directory; defaults to $CPSMOEA_OUT, then results/<matrix name>.
    #[arg(long, env = "CPSMOEA_OUT")]
    out: Option<PathBuf>,
    /// Number of runs executed concurrently.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Recompute runs whose record already exists.
    #[arg(long)]
    overwrite: bool,
    /// Keep only the first N seeds of the matrix.
    #[arg(long)]
    runs: Option<usize>,
    /// Record the nondominated fraction of preselected offspring (costs extra, uncounted evaluations).
    #[arg(long)]
    instrument: bool,
    /// Write the training archives of CPS runs to <out>/archives/.
    #[arg(long)]
    dump_archives: bool,
}

enum Failure {
    Config(String),
    Partial(usize),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::Json(_) => Failure::Config(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn execute(mut matrix: ExperimentMatrix, exec: &ExecArgs) -> Result<(), Failure> {
    if let Some(runs) = exec.runs {
        matrix.limit_runs(runs);
    }
    if exec.instrument {
        matrix.instrumentation = true;
    }
    matrix.validate()?;
    let out = exec.out.clone().unwrap_or_else(|| Path::new("results").join(&matrix.name));
    let options = RunnerOptions {
        parallelism: exec.parallel,
        out_dir: Some(out.clone()),
        overwrite: exec.overwrite,
        dump_archives: exec.dump_archives,
    };
    let outcome = run_matrix(&matrix, &options)?;
    println!(
        "{}: {} records ({} reused), {} failed, output in {}",
        matrix.name,
        outcome.records.len(),
        outcome.reused,
        outcome.failures.len(),
        out.display()
    );
    for f in &outcome.failures {
        eprintln!("failed {} {} seed {}: {}", f.algorithm, f.problem, f.seed, f.error);
    }
    if !outcome.records.is_empty() {
        summarize(&out)?;
    }
    if outcome.is_complete() {
        Ok(())
    } else {
        Err(Failure::Partial(outcome.failures.len()))
    }
}

fn summarize(dir: &Path) -> Result<(), Failure> {
    let summary = summarize_dir(dir)?;
    write_summary(&summary, &load_records(dir)?, dir)?;
    for w in &summary.warnings {
        log::warn!("{w}");
    }
    for row in &summary.rows {
        println!(
            "{:<24} {:<16} runs {:>3}  IGD {:.4e} ± {:.2e}",
            row.algorithm, row.problem, row.runs, row.igd.mean, row.igd.std
        );
    }
    for t in summary.tallies.iter().filter(|t| t.metric == Metric::Igd) {
        println!("{} vs {} (IGD): {}/{}/{}", t.cps, t.baseline, t.plus, t.minus, t.tilde);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, exec } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Failure::Config(format!("{}: {e}", config.display())))?;
            execute(ExperimentMatrix::from_json(&text)?, &exec)
        }
        Command::Preset { name, print, exec } => {
            let matrix = preset(&name)?;
            if print {
                println!("{}", matrix.to_json()?);
                return Ok(());
            }
            execute(matrix, &exec)
        }
        Command::Summarize { dir } => summarize(&dir),
        Command::Compare { dir_a, dir_b, alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Failure::Config(format!("alpha must lie in (0, 1), got {alpha}")));
            }
            println!("algorithm,problem,common_runs,identical_runs,mean_igd_a,mean_igd_b,verdict");
            for row in compare_dirs(&dir_a, &dir_b, alpha)? {
                println!(
                    "{},{},{},{},{:e},{:e},{}",
                    row.algorithm,
                    row.problem,
                    row.common_runs,
                    row.identical_runs,
                    row.mean_igd_a,
                    row.mean_igd_b,
                    row.verdict.map_or('?', |v| v.symbol())
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Partial(n)) => {
            eprintln!("error: {n} runs failed");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
