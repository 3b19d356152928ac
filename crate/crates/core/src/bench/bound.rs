use rayon::prelude::*;
use serde::Serialize;

use crate::bench::config::BoundConfig;
use crate::bench::{rep_seed, write_csv, RunOptions};
use crate::dgp::{best_approx, structural_function, Dgp, DgpConfig};
use crate::error::{Error, Result};
use crate::grid::make_grid;
use crate::npiv::{build_operator, estimate_r, kde_joint, KernelSpec};
use crate::spectral::{regularize_with, FilterSpec};

/// The risk bound split into its four terms at one `α`, with the Monte
/// Carlo risk `E‖φ̂_α − φ₁‖²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub alpha: f64,
    /// `δ/(4α)`.
    pub variance: f64,
    /// `ρ₁/(4α)`.
    pub nonid: f64,
    /// `ρ₂ C_F² (α^{β∧2}/4 + α^{β∧1})/α`.
    pub operator: f64,
    /// `C_F² α^{β∧2}`.
    pub bias: f64,
    pub bound: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    /// Mean `‖r̂ − K̂φ‖²`.
    pub delta: f64,
    /// Mean `‖K̂φ₀‖²`.
    pub rho1: f64,
    /// Mean `‖K̂ − K‖²` in operator norm.
    pub rho2: f64,
    pub c_f: f64,
    pub beta: f64,
    pub reps: usize,
    pub alpha_bound_min: f64,
    pub alpha_risk_min: f64,
}

impl BoundReport {
    /// Bias nondecreasing and variance nonincreasing along the grid.
    pub fn shape_ok(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].bias >= w[0].bias && w[1].variance <= w[0].variance)
    }

    /// Whether the empirical risk is minimized strictly inside the grid.
    pub fn risk_minimum_interior(&self) -> bool {
        let k = argmin(self.rows.iter().map(|r| r.risk));
        k > 0 && k + 1 < self.rows.len()
    }
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub(crate) fn bound_terms(alpha: f64, delta: f64, rho1: f64, rho2: f64, c_f: f64, beta: f64) -> BoundRow {
    let cf2 = c_f * c_f;
    let a2 = alpha.powf(beta.min(2.0));
    let a1 = alpha.powf(beta.min(1.0));
    let variance = delta / (4.0 * alpha);
    let nonid = rho1 / (4.0 * alpha);
    let operator = rho2 * cf2 / alpha * (0.25 * a2 + a1);
    let bias = cf2 * a2;
    BoundRow {
        alpha,
        variance,
        nonid,
        operator,
        bias,
        bound: variance + nonid + operator + bias,
        risk: f64::NAN,
    }
}

struct RepStats {
    delta: f64,
    rho1: f64,
    rho2: f64,
    risk: Vec<f64>,
}

/// Tabulates the four bound terms and the Monte Carlo risk over a log
/// `α` grid; writes `bound.csv` and `bound_summary.csv`.
pub fn eval_bound(cfg: &BoundConfig, opts: &RunOptions) -> Result<BoundReport> {
    cfg.validate()?;
    let reps = opts.resolve_reps(cfg.reps, BoundConfig::DEFAULT_REPS)?;
    let grid = make_grid(cfg.m)?;
    let dgp_cfg = DgpConfig::new(cfg.j0, cfg.n, opts.seed);
    dgp_cfg.validate(grid.len())?;
    let dgp = Dgp::new(dgp_cfg.clone())?;
    let kspec = KernelSpec::new(cfg.kernel, cfg.h_z, cfg.h_w)?;
    let k = dgp.exact_operator(&grid)?;
    let phi = structural_function(&dgp_cfg, &grid);
    let phi1 = best_approx(&dgp_cfg, &grid)?;
    let phi0 = phi.sub(&phi1)?;
    let c_f = match cfg.c_f {
        Some(c) => c,
        None => {
            let svd = k.svd()?;
            let coefs = svd.right_coefficients(&phi1)?;
            (0..svd.rank())
                .map(|j| (coefs[j] / svd.values()[j].powf(cfg.beta)).powi(2))
                .sum::<f64>()
                .sqrt()
        }
    };
    let alphas = cfg.alpha_grid();
    let specs = alphas
        .iter()
        .map(|a| FilterSpec::tikhonov(*a))
        .collect::<Result<Vec<_>>>()?;
    let stats = opts.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let sample = dgp.sample(cfg.n, rep_seed(opts.seed, r))?;
                let k_hat = build_operator(&kde_joint(&sample, &kspec, &grid)?)?;
                let r_hat = estimate_r(&sample, &kspec, &grid)?;
                let delta = r_hat.sub(&k_hat.apply(&phi)?)?.l2_norm().powi(2);
                let rho1 = k_hat.apply(&phi0)?.l2_norm().powi(2);
                let rho2 = k_hat.sub(&k)?.norm().powi(2);
                let svd = k_hat.svd()?;
                let risk = specs
                    .iter()
                    .map(|s| Ok(regularize_with(&svd, &r_hat, s)?.sub(&phi1)?.l2_norm().powi(2)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(RepStats {
                    delta,
                    rho1,
                    rho2,
                    risk,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let count = reps as f64;
    let delta = stats.iter().map(|s| s.delta).sum::<f64>() / count;
    let rho1 = stats.iter().map(|s| s.rho1).sum::<f64>() / count;
    let rho2 = stats.iter().map(|s| s.rho2).sum::<f64>() / count;
    let rows: Vec<BoundRow> = alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| BoundRow {
            risk: stats.iter().map(|s| s.risk[i]).sum::<f64>() / count,
            ..bound_terms(alpha, delta, rho1, rho2, c_f, cfg.beta)
        })
        .collect();
    if rows.iter().any(|r| !r.bound.is_finite() || !r.risk.is_finite()) {
        return Err(Error::Numerical("bound or risk is not finite".into()));
    }
    let alpha_bound_min = alphas[argmin(rows.iter().map(|r| r.bound))];
    let alpha_risk_min = alphas[argmin(rows.iter().map(|r| r.risk))];
    let report = BoundReport {
        rows,
        delta,
        rho1,
        rho2,
        c_f,
        beta: cfg.beta,
        reps,
        alpha_bound_min,
        alpha_risk_min,
    };
    write_csv(&opts.out_path("bound.csv")?, &report.rows)?;
    #[derive(Serialize)]
    struct Entry {
        key: &'static str,
        value: f64,
    }
    let summary = [
        Entry {
            key: "delta",
            value: report.delta,
        },
        Entry {
            key: "rho1",
            value: report.rho1,
        },
        Entry {
            key: "rho2",
            value: report.rho2,
        },
        Entry {
            key: "c_f",
            value: report.c_f,
        },
        Entry {
            key: "beta",
            value: report.beta,
        },
        Entry {
            key: "reps",
            value: reps as f64,
        },
        Entry {
            key: "alpha_bound_min",
            value: report.alpha_bound_min,
        },
        Entry {
            key: "alpha_risk_min",
            value: report.alpha_risk_min,
        },
        Entry {
            key: "shape_ok",
            value: f64::from(u8::from(report.shape_ok())),
        },
        Entry {
            key: "risk_minimum_interior",
            value: f64::from(u8::from(report.risk_minimum_interior())),
        },
    ];
    write_csv(&opts.out_path("bound_summary.csv")?, &summary)?;
    Ok(report)
}
