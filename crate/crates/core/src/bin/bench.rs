use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectral_iv::bench::{
    csv_string, eval_bound, filter_table, run_coverage, run_figure, run_limit_check, run_mc, write_csv, BenchConfig,
    RunOptions,
};
use spectral_iv::Error;

/// Monte Carlo experiments for spectral regularization with estimated operators.
#[derive(Parser)]
#[command(name = "bench", version)]
struct Cli {
    /// JSON config with optional sections mc, figure, coverage, limit, bound, filters.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0, value_name = "U64")]
    seed: u64,
    /// Replications; overrides the config and --full.
    #[arg(long, global = true, value_name = "N")]
    reps: Option<usize>,
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Paper-scale replication counts (5000).
    #[arg(long, global = true)]
    full: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// L2 and sup errors of the NPIV estimator per (J0, n) cell.
    Mc,
    /// Mean estimate with pointwise percentile envelopes, CSV and SVG per panel.
    Figure,
    /// Empirical coverage of the uniform confidence bands.
    Coverage,
    /// KS distance between the degenerate statistic and its chi-square mixture limit.
    LimitCheck,
    /// Risk-bound terms and Monte Carlo risk over an alpha grid.
    Bound,
    /// Filter function values for audit.
    Filters,
}

fn run(cli: &Cli) -> spectral_iv::Result<()> {
    let config = match &cli.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig::default(),
    };
    let opts = RunOptions {
        seed: cli.seed,
        reps: cli.reps,
        full: cli.full,
        threads: cli.threads,
        out: cli.out.clone(),
    };
    match cli.command {
        Command::Mc => {
            let result = run_mc(&config.mc, &opts)?;
            print!("{}", csv_string(&result.rows())?);
        }
        Command::Figure => {
            let result = run_figure(&config.figure, &opts)?;
            for cell in &result.cells {
                println!(
                    "figure j0={} n={} written to {}",
                    cell.row.j0,
                    cell.row.n,
                    opts.out.display()
                );
            }
        }
        Command::Coverage => print!("{}", csv_string(&run_coverage(&config.coverage, &opts)?)?),
        Command::LimitCheck => print!("{}", csv_string(&run_limit_check(&config.limit, &opts)?)?),
        Command::Bound => {
            let report = eval_bound(&config.bound, &opts)?;
            print!("{}", csv_string(&report.rows)?);
            println!(
                "alpha minimizing bound: {:.3e}; alpha minimizing risk: {:.3e}; shape ok: {}",
                report.alpha_bound_min,
                report.alpha_risk_min,
                report.shape_ok()
            );
        }
        Command::Filters => {
            let rows = filter_table(&config.filters)?;
            std::fs::create_dir_all(&opts.out)?;
            write_csv(&opts.out.join("filters.csv"), &rows)?;
            print!("{}", csv_string(&rows)?);
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::GridMismatch(_) | Error::Io(_) => 2,
        Error::Decomposition(_)
        | Error::DegenerateDensity(_)
        | Error::DegenerateFunctional(_)
        | Error::EnvelopeViolation { .. }
        | Error::Numerical(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
