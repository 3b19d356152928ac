//! Monte Carlo harness behind the `bench` binary: Table and figure
//! reproduction, coverage and limit-law experiments, the risk-bound
//! diagnostic and a filter audit.
//!
//! Every experiment is a pure function of its config section and
//! [`RunOptions`]; replications run on a rayon pool and are aggregated in
//! replication order, so output does not depend on the thread count.

mod bound;
mod config;
mod coverage;
mod filters;
mod limit;
mod mc;
mod svg;

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

pub use bound::{eval_bound, BoundReport, BoundRow};
pub use config::{
    BenchConfig, BoundConfig, CoverageConfig, FiltersConfig, LimitConfig, McConfig, Model, DEFAULT_REPS, FULL_REPS,
};
pub use coverage::{run_coverage, CoverageRow};
pub use filters::{filter_table, FilterRow};
pub use limit::{run_limit_check, LimitRow};
pub use mc::{run_figure, run_mc, simulate_cell, CellSummary, McResult, McRow};
pub use svg::{figure_svg, Series};

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    /// Overrides the config and `full`.
    pub reps: Option<usize>,
    /// Paper-scale replication counts.
    pub full: bool,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            reps: None,
            full: false,
            threads: None,
            out: PathBuf::from("out"),
        }
    }
}

impl RunOptions {
    /// Replication count: explicit flag, then `--full`, then the config, then `default`.
    pub fn resolve_reps(&self, configured: Option<usize>, default: usize) -> Result<usize> {
        let reps = match (self.reps, self.full) {
            (Some(r), _) => r,
            (None, true) => FULL_REPS,
            (None, false) => configured.unwrap_or(default),
        };
        if reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        Ok(reps)
    }

    /// Runs `f` on a pool with the requested thread count.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(Error::Config("threads must be at least 1".into()));
            }
            builder = builder.num_threads(t);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }

    pub(crate) fn out_path(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }
}

/// Per-replication seed.
pub(crate) fn rep_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV text with a header row, for rows with at least one record.
pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Numerical(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Numerical(format!("csv is not utf-8: {e}")))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv: {other:?}")),
    }
}

/// Mean and standard error of the mean.
pub(crate) fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
