//! Degenerate limit law of `nα⟨φ̂ − φ₁, μ₀⟩` when the instrument is irrelevant.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{best_approx, Dgp, DgpConfig, J0};
use crate::error::{invalid, Result};
use crate::grid::{same_grid, Grid, GridFunction};
use crate::inference::mixture::{ustat_mixture_factored, ChiSqMixture};
use crate::inference::stats::ks_two_sample;
use crate::npiv::{build_operator, estimate_r, kde_joint, kernel_matrix, KernelSpec, NpivSample};
use crate::spectral::{regularize, DiscreteOperator, FilterSpec};

/// `αₙ = scale · n^{-exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaRule {
    pub scale: f64,
    pub exponent: f64,
}

impl Default for AlphaRule {
    fn default() -> Self {
        Self {
            scale: 1.0,
            exponent: 2.0 / 3.0,
        }
    }
}

impl AlphaRule {
    pub fn alpha(&self, n: usize) -> f64 {
        self.scale * (n as f64).powf(-self.exponent)
    }
}

/// Sizes of the Monte Carlo pieces of [`degenerate_limit_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOptions {
    /// Size of the sample the mixture kernel is evaluated on.
    pub kernel_sample: usize,
    pub mixture_draws: usize,
    /// Share of `Σ λⱼ²` kept when truncating the mixture.
    pub energy: f64,
    pub seed: u64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            kernel_sample: 20_000,
            mixture_draws: 100_000,
            energy: 0.999,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LimitReport {
    pub n: usize,
    pub alpha: f64,
    /// `nα⟨φ̂ − φ₁, μ₀⟩`, one per replication in order.
    pub statistics: Vec<f64>,
    pub mixture: ChiSqMixture,
    /// Mixture terms carrying the requested energy.
    pub retained: usize,
    pub ks: f64,
    /// Diagonal term from the closed form `E[Yμ₀(Z)] K̄(0)/h_w`.
    pub offset_displayed: f64,
}

/// `z ↦ ∫₀¹ K_h(z − t) dt`, the share of kernel mass inside the unit interval.
fn kernel_mass(grid: &Arc<Grid>, kspec: &KernelSpec) -> Result<GridFunction> {
    let fine = Grid::midpoint(4000)?;
    let k = kernel_matrix(grid.points(), fine.points(), kspec.h_z, kspec.kernel);
    let mass = k * DVector::from_column_slice(fine.weights());
    GridFunction::new(grid.clone(), mass.as_slice().to_vec())
}

/// Orthonormal basis of the null-space complement of `E[K̂]` under
/// independence: constants and the kernel boundary-mass profile.
fn smoothed_range(grid: &Arc<Grid>, kspec: &KernelSpec) -> Result<Vec<GridFunction>> {
    let mut out: Vec<GridFunction> = Vec::new();
    for f in [GridFunction::constant(grid.clone(), 1.0), kernel_mass(grid, kspec)?] {
        let mut g = f;
        for u in &out {
            g = g.axpy(-g.inner(u)?, u)?;
        }
        let norm = g.l2_norm();
        if norm > 1e-10 {
            out.push(g.scale(1.0 / norm));
        }
    }
    Ok(out)
}

/// `K̂ ∘ P` with `P` the orthogonal projector off `span(dirs)`.
fn restrict(k: &DiscreteOperator, dirs: &[GridFunction]) -> Result<DiscreteOperator> {
    let w = k.domain().weights();
    let mut kernel = k.kernel().clone();
    for u in dirs {
        let weighted = DVector::from_iterator(u.len(), u.values().iter().zip(w).map(|(v, wc)| v * wc));
        let ku = &kernel * weighted;
        for a in 0..kernel.nrows() {
            for (c, uc) in u.values().iter().enumerate() {
                kernel[(a, c)] -= ku[a] * uc;
            }
        }
    }
    DiscreteOperator::new(kernel, k.domain().clone(), k.range().clone())
}

/// Estimator restricted to the null space of the smoothed population
/// operator, `(αI + PK̂*K̂P)⁻¹PK̂*r̂`.
pub fn restricted_fit(sample: &NpivSample, kspec: &KernelSpec, alpha: f64, grid: &Arc<Grid>) -> Result<GridFunction> {
    let dirs = smoothed_range(grid, kspec)?;
    let k0 = restrict(&build_operator(&kde_joint(sample, kspec, grid)?)?, &dirs)?;
    regularize(&k0, &estimate_r(sample, kspec, grid)?, &FilterSpec::tikhonov(alpha)?)
}

/// Mixture from the symmetrized kernel `½{Yμ̃₀(Z̃) + Ỹμ̃₀(Z)} Ḡ(W, W̃)`,
/// `μ̃₀ = K_z μ₀` and `Ḡ` the `w`-kernel convolution, on one large sample.
pub fn limit_mixture(sample: &NpivSample, mu0: &GridFunction, kspec: &KernelSpec) -> Result<ChiSqMixture> {
    let grid = mu0.grid();
    let n = sample.len();
    let kz = kernel_matrix(sample.z(), grid.points(), kspec.h_z, kspec.kernel);
    let weighted = DVector::from_iterator(grid.len(), mu0.values().iter().zip(grid.weights()).map(|(v, w)| v * w));
    let smooth = kz * weighted;
    let mut phi = kernel_matrix(sample.w(), grid.points(), kspec.h_w, kspec.kernel);
    for (b, w) in grid.weights().iter().enumerate() {
        phi.column_mut(b).scale_mut(w.sqrt());
    }
    let y = sample.y();
    let mut a = phi.clone();
    let mut bm = phi.clone();
    let mut offset = 0.0;
    for i in 0..n {
        a.row_mut(i).scale_mut(y[i]);
        bm.row_mut(i).scale_mut(smooth[i]);
        offset += y[i] * smooth[i] * phi.row(i).norm_squared();
    }
    ustat_mixture_factored(&a, &bm, offset / n as f64)
}

fn check_inputs(config: &DgpConfig, mu0: &GridFunction, n: usize, reps: usize) -> Result<()> {
    if config.j0 != J0::Finite(1) {
        return invalid(format!(
            "limit check needs an independence design (j0 = 1), got j0 = {}",
            config.j0
        ));
    }
    if n == 0 || reps == 0 {
        return invalid("n and reps must be positive");
    }
    let mass = mu0.inner(&GridFunction::constant(mu0.grid().clone(), 1.0))?;
    if mass.abs() > 1e-8 * mu0.l2_norm().max(1.0) {
        return invalid(format!("mu0 must integrate to zero, got {mass}"));
    }
    Ok(())
}

/// Compares the replication law of `nα⟨φ̂ − φ₁, μ₀⟩` with its chi-square
/// mixture limit by a two-sample Kolmogorov-Smirnov distance.
pub fn degenerate_limit_check(
    config: &DgpConfig,
    mu0: &GridFunction,
    kspec: &KernelSpec,
    rule: AlphaRule,
    n: usize,
    reps: usize,
    opts: &LimitOptions,
) -> Result<LimitReport> {
    check_inputs(config, mu0, n, reps)?;
    let grid = mu0.grid().clone();
    config.validate(grid.len())?;
    kspec.validate()?;
    let alpha = rule.alpha(n);
    let dgp = Dgp::new(config.clone())?;
    let phi1 = best_approx(config, &grid)?;
    same_grid(phi1.grid(), &grid)?;
    if mu0.sup_norm() == 0.0 {
        let mixture = ChiSqMixture::new(Vec::new(), 0.0)?;
        return Ok(LimitReport {
            n,
            alpha,
            statistics: vec![0.0; reps],
            mixture,
            retained: 0,
            ks: 0.0,
            offset_displayed: 0.0,
        });
    }
    let statistics = (0..reps)
        .into_par_iter()
        .map(|r| {
            let sample = dgp.sample(n, opts.seed.wrapping_add(r as u64))?;
            let fit = restricted_fit(&sample, kspec, alpha, &grid)?;
            Ok(n as f64 * alpha * fit.sub(&phi1)?.inner(mu0)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let big = dgp.sample(opts.kernel_sample, opts.seed.wrapping_add(u64::MAX / 2))?;
    let full = limit_mixture(&big, mu0, kspec)?;
    let retained = full.retained_count(opts.energy);
    let mixture = full.truncated(opts.energy);
    let draws = mixture.draw(opts.mixture_draws, opts.seed.wrapping_add(u64::MAX / 4));
    let ks = ks_two_sample(&statistics, &draws);
    let cross: f64 = big
        .y()
        .iter()
        .zip(big.z())
        .map(|(y, z)| y * mu0.interpolate(*z))
        .sum::<f64>()
        / big.len() as f64;
    let offset_displayed = cross * kspec.kernel.roughness() / kspec.h_w;
    Ok(LimitReport {
        n,
        alpha,
        statistics,
        mixture,
        retained,
        ks,
        offset_displayed,
    })
}
