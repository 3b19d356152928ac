//! Uniform confidence bands `φ̂(z) ± q_n` for the best approximation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::flir::{estimate_k, FlirSample};
use crate::grid::{interpolate_uniform, same_grid, GridFunction};
use crate::inference::stats::quantile_sorted;
use crate::linalg::sym_eigen;
use crate::npiv::{build_operator, kde_joint, KernelSpec, NpivSample};
use crate::spectral::REL_RANK_TOL;

/// Number of Gaussian draws and the seed used to simulate band quantiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandOptions {
    pub draws: usize,
    pub seed: u64,
}

impl Default for BandOptions {
    fn default() -> Self {
        Self {
            draws: 10_000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConfBand {
    pub center: GridFunction,
    pub half_width: f64,
    pub level: f64,
    /// Simulated quantile that entered `half_width`.
    pub critical_value: f64,
    /// Set when every residual vanished and the band fell back to the floor.
    pub degenerate: bool,
}

impl ConfBand {
    /// Whether `f` lies inside the band at every grid node.
    pub fn contains(&self, f: &GridFunction) -> Result<bool> {
        Ok(self.center.sub(f)?.sup_norm() <= self.half_width)
    }

    pub fn lower(&self) -> GridFunction {
        self.center.map(|v| v - self.half_width).expect("finite band")
    }

    pub fn upper(&self) -> GridFunction {
        self.center.map(|v| v + self.half_width).expect("finite band")
    }
}

fn check_levels(alpha: f64, gamma: f64, c_const: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return invalid(format!("gamma must lie in (0, 1), got {gamma}"));
    }
    if !(c_const >= 0.0 && c_const.is_finite()) {
        return invalid(format!("band constant must be nonnegative, got {c_const}"));
    }
    Ok(())
}

/// Eigenvalues and eigenvectors of a symmetric PSD matrix, negatives clipped.
fn psd_eigen(cov: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (values, vectors) = sym_eigen(&cov)?;
    Ok((values.map(|v| v.max(0.0)), vectors))
}

fn simulate_chi_square_norm(eigenvalues: &[f64], opts: &BandOptions) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // descending order with rounding-level terms dropped keeps the draws
    // stable under tiny perturbations of the covariance
    let top = eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut active: Vec<f64> = eigenvalues
        .iter()
        .copied()
        .filter(|l| *l > REL_RANK_TOL * top)
        .collect();
    active.sort_by(|a, b| b.total_cmp(a));
    let mut draws: Vec<f64> = (0..opts.draws)
        .map(|_| {
            active
                .iter()
                .map(|l| {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    l * x * x
                })
                .sum()
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    draws
}

fn simulate_gaussian_sup(cov: &DMatrix<f64>, opts: &BandOptions) -> Result<Vec<f64>> {
    let (vals, vecs) = psd_eigen(cov.clone())?;
    let root = &vecs * DMatrix::from_diagonal(&vals.map(f64::sqrt));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let dim = cov.nrows();
    let batch = 1000;
    let mut sups = Vec::with_capacity(opts.draws);
    while sups.len() < opts.draws {
        let count = batch.min(opts.draws - sups.len());
        let xi = DMatrix::from_fn(dim, count, |_, _| StandardNormal.sample(&mut rng));
        let g = &root * xi;
        sups.extend(g.column_iter().map(|c| c.amax()));
    }
    sups.sort_by(f64::total_cmp);
    Ok(sups)
}

/// `(1 − γ)` quantile of `Σ λⱼ ξⱼ²` with standard normal `ξⱼ`.
pub fn chi_square_norm_quantile(eigenvalues: &[f64], gamma: f64, opts: &BandOptions) -> f64 {
    quantile_sorted(&simulate_chi_square_norm(eigenvalues, opts), 1.0 - gamma)
}

/// `(1 − γ)` quantile of `max_a |G_a|` for a centered Gaussian vector with
/// the given covariance.
pub fn gaussian_sup_quantile(cov: &DMatrix<f64>, gamma: f64, opts: &BandOptions) -> Result<f64> {
    Ok(quantile_sorted(&simulate_gaussian_sup(cov, opts)?, 1.0 - gamma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BandForm {
    /// `(‖K̂*‖_{2,∞} c^{1/2} + c_const)/(α√n)`.
    Flir,
    /// `(‖K̂*‖_{2,∞}/2 + α^{1/2} + c_const)/(α^{3/2}√n) · c`.
    Npiv,
}

/// Everything a band needs except `γ` and the constant, so one simulation
/// serves many levels.
#[derive(Debug, Clone)]
pub struct BandBasis {
    center: GridFunction,
    form: BandForm,
    k_norm: f64,
    alpha: f64,
    n: usize,
    sorted_draws: Vec<f64>,
    degenerate: bool,
}

impl BandBasis {
    pub fn critical_value(&self, gamma: f64) -> f64 {
        if self.degenerate {
            0.0
        } else {
            quantile_sorted(&self.sorted_draws, 1.0 - gamma)
        }
    }

    /// All residuals vanished.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn band(&self, gamma: f64, c_const: f64) -> Result<ConfBand> {
        check_levels(self.alpha, gamma, c_const)?;
        let critical = self.critical_value(gamma);
        let root_n = (self.n as f64).sqrt();
        let half_width = match self.form {
            BandForm::Flir => (self.k_norm * critical.sqrt() + c_const) / (self.alpha * root_n),
            BandForm::Npiv => {
                (self.k_norm / 2.0 + self.alpha.sqrt() + c_const) / (self.alpha.powf(1.5) * root_n) * critical
            }
        };
        if !half_width.is_finite() {
            return Err(Error::Numerical("band half-width is not finite".into()));
        }
        Ok(ConfBand {
            center: self.center.clone(),
            half_width,
            level: 1.0 - gamma,
            critical_value: critical,
            degenerate: self.degenerate,
        })
    }
}

/// Simulated law of `‖G‖²` from the residual-weighted covariance of `Wᵢ`.
pub fn flir_band_basis(sample: &FlirSample, fit: &GridFunction, alpha: f64, opts: &BandOptions) -> Result<BandBasis> {
    check_levels(alpha, 0.5, 0.0)?;
    same_grid(sample.grid(), fit.grid())?;
    let n = sample.len() as f64;
    let fitted = sample.z_inner(fit)?;
    let resid: Vec<f64> = sample.y().iter().zip(fitted.iter()).map(|(y, f)| y - f).collect();
    let degenerate = resid.iter().all(|u| *u == 0.0);
    let sorted_draws = if degenerate {
        Vec::new()
    } else {
        let mut scaled = sample.w().clone();
        for (i, u) in resid.iter().enumerate() {
            scaled.row_mut(i).scale_mut(*u / n.sqrt());
        }
        for (a, w) in sample.grid().weights().iter().enumerate() {
            scaled.column_mut(a).scale_mut(w.sqrt());
        }
        let (eigenvalues, _) = psd_eigen(scaled.tr_mul(&scaled))?;
        simulate_chi_square_norm(eigenvalues.as_slice(), opts)
    };
    let k_norm = estimate_k(sample)?.adjoint().norm_2inf();
    Ok(BandBasis {
        center: fit.clone(),
        form: BandForm::Flir,
        k_norm,
        alpha,
        n: sample.len(),
        sorted_draws,
        degenerate,
    })
}

/// Simulated law of `‖G‖_∞` with `G` having covariance
/// `n⁻¹ Σ f̂(z, Wᵢ) f̂(z', Wᵢ) ûᵢ²` on the grid.
pub fn npiv_band_basis(
    sample: &NpivSample,
    fit: &GridFunction,
    kspec: &KernelSpec,
    alpha: f64,
    opts: &BandOptions,
) -> Result<BandBasis> {
    check_levels(alpha, 0.5, 0.0)?;
    let grid = fit.grid();
    let density = kde_joint(sample, kspec, grid)?;
    let n = sample.len() as f64;
    let resid: Vec<f64> = sample
        .y()
        .iter()
        .zip(sample.z())
        .map(|(y, z)| y - fit.interpolate(*z))
        .collect();
    let degenerate = resid.iter().all(|u| *u == 0.0);
    let sorted_draws = if degenerate {
        Vec::new()
    } else {
        let m = grid.len();
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|a| density.values().row(a).iter().copied().collect())
            .collect();
        let scaled = DMatrix::from_fn(sample.len(), m, |i, a| {
            interpolate_uniform(&rows[a], sample.w()[i]) * resid[i] / n.sqrt()
        });
        simulate_gaussian_sup(&scaled.tr_mul(&scaled), opts)?
    };
    let k_norm = build_operator(&density)?.adjoint().norm_2inf();
    Ok(BandBasis {
        center: fit.clone(),
        form: BandForm::Npiv,
        k_norm,
        alpha,
        n: sample.len(),
        sorted_draws,
        degenerate,
    })
}

pub fn flir_confband(
    sample: &FlirSample,
    fit: &GridFunction,
    alpha: f64,
    gamma: f64,
    c_const: f64,
) -> Result<ConfBand> {
    flir_confband_with(sample, fit, alpha, gamma, c_const, &BandOptions::default())
}

pub fn flir_confband_with(
    sample: &FlirSample,
    fit: &GridFunction,
    alpha: f64,
    gamma: f64,
    c_const: f64,
    opts: &BandOptions,
) -> Result<ConfBand> {
    check_levels(alpha, gamma, c_const)?;
    flir_band_basis(sample, fit, alpha, opts)?.band(gamma, c_const)
}

pub fn npiv_confband(
    sample: &NpivSample,
    fit: &GridFunction,
    kspec: &KernelSpec,
    alpha: f64,
    gamma: f64,
    c_const: f64,
) -> Result<ConfBand> {
    npiv_confband_with(sample, fit, kspec, alpha, gamma, c_const, &BandOptions::default())
}

pub fn npiv_confband_with(
    sample: &NpivSample,
    fit: &GridFunction,
    kspec: &KernelSpec,
    alpha: f64,
    gamma: f64,
    c_const: f64,
    opts: &BandOptions,
) -> Result<ConfBand> {
    check_levels(alpha, gamma, c_const)?;
    npiv_band_basis(sample, fit, kspec, alpha, opts)?.band(gamma, c_const)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::J0;
    use crate::flir::{flir_fit, FlirDesign};
    use crate::grid::make_grid;
    use crate::spectral::FilterSpec;
    use approx::assert_relative_eq;

    fn flir_case() -> (FlirSample, GridFunction) {
        let design = FlirDesign::new(J0::Finite(2), make_grid(40).unwrap());
        let sample = design.sample(300, 3).unwrap();
        let fit = flir_fit(&sample, &FilterSpec::tikhonov(0.01).unwrap()).unwrap();
        (sample, fit)
    }

    #[test]
    fn exact_fit_gives_zero_width() {
        let (sample, fit) = flir_case();
        let y = sample.z_inner(&fit).unwrap().as_slice().to_vec();
        let exact = sample.with_outcome(y).unwrap();
        let band = flir_confband(&exact, &fit, 0.01, 0.05, 0.0).unwrap();
        assert!(band.degenerate);
        assert_eq!(band.half_width, 0.0);
    }

    #[test]
    fn constant_enters_linearly() {
        let (sample, fit) = flir_case();
        let a = flir_confband(&sample, &fit, 0.01, 0.05, 0.1).unwrap();
        let b = flir_confband(&sample, &fit, 0.01, 0.05, 0.2).unwrap();
        let step = 0.1 / (0.01 * (sample.len() as f64).sqrt());
        assert_relative_eq!(b.half_width - a.half_width, step, max_relative = 1e-10);
    }

    #[test]
    fn wider_at_higher_level() {
        let (sample, fit) = flir_case();
        let narrow = flir_confband(&sample, &fit, 0.01, 0.5, 0.0).unwrap();
        let wide = flir_confband(&sample, &fit, 0.01, 0.05, 0.0).unwrap();
        assert!(wide.half_width > narrow.half_width);
        assert!(wide.contains(&fit).unwrap());
        assert!(wide
            .upper()
            .sub(&wide.lower())
            .unwrap()
            .values()
            .iter()
            .all(|d| (d - 2.0 * wide.half_width).abs() < 1e-12));
    }

    #[test]
    fn simulated_quantiles_match_closed_forms() {
        let opts = BandOptions {
            draws: 200_000,
            seed: 9,
        };
        // χ²₁ and |N(0, 4)| at level 0.95
        assert_relative_eq!(
            chi_square_norm_quantile(&[1.0], 0.05, &opts),
            3.841459,
            max_relative = 0.02
        );
        let cov = DMatrix::from_element(1, 1, 4.0);
        assert_relative_eq!(
            gaussian_sup_quantile(&cov, 0.05, &opts).unwrap(),
            2.0 * 1.959964,
            max_relative = 0.02
        );
    }

    #[test]
    fn invalid_levels() {
        let (sample, fit) = flir_case();
        assert!(flir_confband(&sample, &fit, 0.0, 0.05, 0.0).is_err());
        assert!(flir_confband(&sample, &fit, 0.01, 1.0, 0.0).is_err());
        assert!(flir_confband(&sample, &fit, 0.01, 0.05, -1.0).is_err());
    }

    #[test]
    fn npiv_exact_fit_collapses() {
        let grid = make_grid(30).unwrap();
        let fit = GridFunction::from_fn(grid.clone(), |z| z * z).unwrap();
        let z: Vec<f64> = (0..50).map(|i| (i as f64 + 0.5) / 50.0).collect();
        let w: Vec<f64> = z.iter().map(|v| 1.0 - v).collect();
        let y = z.iter().map(|v| fit.interpolate(*v)).collect();
        let sample = NpivSample::new(y, z, w).unwrap();
        let kspec = KernelSpec::gaussian(0.15, 0.1).unwrap();
        let band = npiv_confband(&sample, &fit, &kspec, 0.01, 0.05, 0.3).unwrap();
        assert!(band.degenerate);
        assert_eq!(band.half_width, 0.0);
    }
}
