use rayon::prelude::*;
use serde::Serialize;

use crate::bench::config::{CoverageConfig, Model};
use crate::bench::{rep_seed, write_csv, RunOptions};
use crate::dgp::{best_approx, Dgp, DgpConfig, J0};
use crate::error::Result;
use crate::flir::{flir_fit, FlirDesign};
use crate::grid::{make_grid, GridFunction};
use crate::inference::{flir_band_basis, npiv_band_basis, BandBasis, BandOptions};
use crate::npiv::{npiv_fit, KernelSpec};
use crate::spectral::FilterSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub model: String,
    pub j0: J0,
    pub n: usize,
    pub gamma: f64,
    pub c_const: f64,
    pub alpha: f64,
    pub reps: usize,
    pub coverage: f64,
    pub mean_half_width: f64,
}

// keeps band simulation streams apart from sampling streams
const BAND_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

fn regime(cfg: &CoverageConfig, model: Model, j0: J0, n: usize, reps: usize, seed: u64) -> Result<Vec<CoverageRow>> {
    let grid = make_grid(cfg.m)?;
    let kspec = KernelSpec::new(cfg.kernel, cfg.h_z, cfg.h_w)?;
    let band_opts = |r: usize| BandOptions {
        draws: cfg.draws,
        seed: rep_seed(seed, r) ^ BAND_STREAM,
    };
    let (alpha, phi1, per_rep): (f64, GridFunction, Vec<BandBasis>) = match model {
        Model::Flir => {
            let design = FlirDesign::new(j0, grid.clone());
            let phi1 = design.best_approx()?;
            let spec = FilterSpec::tikhonov(cfg.flir_alpha)?;
            let bases = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let sample = design.sample(n, rep_seed(seed, r))?;
                    let fit = flir_fit(&sample, &spec)?;
                    flir_band_basis(&sample, &fit, cfg.flir_alpha, &band_opts(r))
                })
                .collect::<Result<Vec<_>>>()?;
            (cfg.flir_alpha, phi1, bases)
        }
        Model::Npiv => {
            let dgp_cfg = DgpConfig::new(j0, n, seed);
            dgp_cfg.validate(grid.len())?;
            let dgp = Dgp::new(dgp_cfg.clone())?;
            let phi1 = best_approx(&dgp_cfg, &grid)?;
            let spec = FilterSpec::tikhonov(cfg.npiv_alpha)?;
            let bases = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let sample = dgp.sample(n, rep_seed(seed, r))?;
                    let fit = npiv_fit(&sample, &kspec, &spec, &grid)?;
                    npiv_band_basis(&sample, &fit, &kspec, cfg.npiv_alpha, &band_opts(r))
                })
                .collect::<Result<Vec<_>>>()?;
            (cfg.npiv_alpha, phi1, bases)
        }
    };
    let mut rows = Vec::new();
    for &gamma in &cfg.gamma {
        for &c_const in &cfg.c_const {
            let mut covered = 0usize;
            let mut width = 0.0;
            for basis in &per_rep {
                let band = basis.band(gamma, c_const)?;
                if band.contains(&phi1)? {
                    covered += 1;
                }
                width += band.half_width;
            }
            rows.push(CoverageRow {
                model: model.to_string(),
                j0,
                n,
                gamma,
                c_const,
                alpha,
                reps,
                coverage: covered as f64 / reps as f64,
                mean_half_width: width / reps as f64,
            });
        }
    }
    Ok(rows)
}

/// Empirical coverage of `φ₁` and mean half-width for every model, `J₀`,
/// `n`, `γ` and constant; writes `coverage.csv`.
pub fn run_coverage(cfg: &CoverageConfig, opts: &RunOptions) -> Result<Vec<CoverageRow>> {
    cfg.validate()?;
    let reps = opts.resolve_reps(cfg.reps, CoverageConfig::DEFAULT_REPS)?;
    let mut rows = Vec::new();
    for &model in &cfg.models {
        for &j0 in &cfg.j0 {
            for &n in &cfg.n {
                rows.extend(opts.install(|| regime(cfg, model, j0, n, reps, opts.seed))??);
            }
        }
    }
    write_csv(&opts.out_path("coverage.csv")?, &rows)?;
    Ok(rows)
}
