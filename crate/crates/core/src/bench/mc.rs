use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bench::config::McConfig;
use crate::bench::svg::{figure_svg, Series};
use crate::bench::{mean_se, rep_seed, write_csv, RunOptions, DEFAULT_REPS};
use crate::dgp::{best_approx, structural_function, Dgp, DgpConfig, J0};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid};
use crate::inference::stats::quantile_sorted;
use crate::npiv::npiv_fit;

/// One Table 1 cell. Errors are measured against `φ₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub j0: J0,
    pub n: usize,
    pub scheme: String,
    pub alpha: f64,
    pub h_z: f64,
    pub h_w: f64,
    pub reps: usize,
    pub l2_mean: f64,
    pub l2sq_mean: f64,
    pub sup_mean: f64,
    #[serde(skip)]
    pub l2_se: f64,
    #[serde(skip)]
    pub l2sq_se: f64,
    #[serde(skip)]
    pub sup_se: f64,
}

/// A cell together with its pointwise summaries for plotting.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub row: McRow,
    pub grid: Arc<Grid>,
    pub mean_fit: Vec<f64>,
    /// Pointwise 2.5% and 97.5% percentiles of the fits.
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi1: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct McResult {
    pub cells: Vec<CellSummary>,
}

impl McResult {
    pub fn rows(&self) -> Vec<McRow> {
        self.cells.iter().map(|c| c.row.clone()).collect()
    }

    pub fn cell(&self, j0: J0, n: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.row.j0 == j0 && c.row.n == n)
    }
}

/// Replicates sample → fit → errors for one `(J₀, n)` pair; must run inside
/// the caller's pool.
pub fn simulate_cell(cfg: &McConfig, j0: J0, n: usize, reps: usize, seed: u64) -> Result<CellSummary> {
    let grid = make_grid(cfg.m)?;
    let dgp_cfg = DgpConfig::new(j0, n, seed);
    dgp_cfg.validate(grid.len())?;
    let dgp = Dgp::new(dgp_cfg.clone())?;
    let phi1 = best_approx(&dgp_cfg, &grid)?;
    let phi = structural_function(&dgp_cfg, &grid);
    let kspec = cfg.kernel_spec()?;
    let fspec = cfg.filter_spec()?;
    let fits = (0..reps)
        .into_par_iter()
        .map(|r| {
            let sample = dgp.sample(n, rep_seed(seed, r))?;
            npiv_fit(&sample, &kspec, &fspec, &grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut l2 = Vec::with_capacity(reps);
    let mut l2sq = Vec::with_capacity(reps);
    let mut sup = Vec::with_capacity(reps);
    for fit in &fits {
        let err = fit.sub(&phi1)?;
        let norm = err.l2_norm();
        if !norm.is_finite() {
            return Err(Error::Numerical(format!("non-finite error at j0={j0}, n={n}")));
        }
        l2.push(norm);
        l2sq.push(norm * norm);
        sup.push(err.sup_norm());
    }
    let m = grid.len();
    let mut mean_fit = vec![0.0; m];
    let mut lo = vec![0.0; m];
    let mut hi = vec![0.0; m];
    let mut column = vec![0.0; reps];
    for a in 0..m {
        for (c, fit) in column.iter_mut().zip(&fits) {
            *c = fit.values()[a];
        }
        mean_fit[a] = column.iter().sum::<f64>() / reps as f64;
        column.sort_by(f64::total_cmp);
        lo[a] = quantile_sorted(&column, 0.025);
        hi[a] = quantile_sorted(&column, 0.975);
    }
    let (l2_mean, l2_se) = mean_se(&l2);
    let (l2sq_mean, l2sq_se) = mean_se(&l2sq);
    let (sup_mean, sup_se) = mean_se(&sup);
    let row = McRow {
        j0,
        n,
        scheme: cfg.scheme.to_string(),
        alpha: cfg.alpha,
        h_z: cfg.h_z,
        h_w: cfg.h_w,
        reps,
        l2_mean,
        l2sq_mean,
        sup_mean,
        l2_se,
        l2sq_se,
        sup_se,
    };
    Ok(CellSummary {
        row,
        grid,
        mean_fit,
        lo,
        hi,
        phi: phi.into_values(),
        phi1: phi1.into_values(),
    })
}

fn simulate_all(cfg: &McConfig, opts: &RunOptions) -> Result<McResult> {
    cfg.validate()?;
    let reps = opts.resolve_reps(cfg.reps, DEFAULT_REPS)?;
    let mut cells = Vec::new();
    for &n in &cfg.n {
        for &j0 in &cfg.j0 {
            cells.push(opts.install(|| simulate_cell(cfg, j0, n, reps, opts.seed))??);
        }
    }
    Ok(McResult { cells })
}

/// Table 1: writes `mc.csv` with one row per `(n, J₀)` cell.
pub fn run_mc(cfg: &McConfig, opts: &RunOptions) -> Result<McResult> {
    let result = simulate_all(cfg, opts)?;
    write_csv(&opts.out_path("mc.csv")?, &result.rows())?;
    Ok(result)
}

#[derive(Serialize)]
struct FigureRow {
    z: f64,
    mean: f64,
    lo: f64,
    hi: f64,
    phi: f64,
    phi1: f64,
}

fn panel_name(cell: &CellSummary) -> String {
    format!("figure_j0_{}_n_{}", cell.row.j0, cell.row.n)
}

/// Figure 1: one CSV and one SVG per `(n, J₀)` panel, named
/// `figure_j0_<j0>_n_<n>`.
pub fn run_figure(cfg: &McConfig, opts: &RunOptions) -> Result<McResult> {
    let result = simulate_all(cfg, opts)?;
    for cell in &result.cells {
        let rows: Vec<FigureRow> = (0..cell.grid.len())
            .map(|a| FigureRow {
                z: cell.grid.points()[a],
                mean: cell.mean_fit[a],
                lo: cell.lo[a],
                hi: cell.hi[a],
                phi: cell.phi[a],
                phi1: cell.phi1[a],
            })
            .collect();
        let name = panel_name(cell);
        write_csv(&opts.out_path(&format!("{name}.csv"))?, &rows)?;
        let x = cell.grid.points();
        let title = format!("J0 = {}, n = {}, {} reps", cell.row.j0, cell.row.n, cell.row.reps);
        let svg = figure_svg(
            &title,
            x,
            &[
                Series::band("2.5%-97.5%", &cell.lo, &cell.hi, "#9ecae1"),
                Series::line("mean estimate", &cell.mean_fit, "#08519c", false),
                Series::line("phi", &cell.phi, "#000000", true),
                Series::line("phi1", &cell.phi1, "#d62728", false),
            ],
        );
        std::fs::write(opts.out_path(&format!("{name}.svg"))?, svg)?;
    }
    Ok(result)
}
