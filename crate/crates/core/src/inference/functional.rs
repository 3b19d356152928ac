//! Pointwise inference for linear functionals `⟨φ₁, μ⟩` in functional linear IV.

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::flir::{estimate_k, estimate_r, FlirSample};
use crate::grid::{same_grid, GridFunction};
use crate::inference::stats::normal_quantile;
use crate::spectral::{regularize_with, FilterSpec, Scheme};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalInterval {
    pub estimate: f64,
    pub half_width: f64,
    /// Plug-in normalizer `π̂ₙ`.
    pub pi_n: f64,
    pub level: f64,
}

impl FunctionalInterval {
    pub fn lo(&self) -> f64 {
        self.estimate - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.estimate + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo() <= x && x <= self.hi()
    }
}

/// Plug-in normalizer `π̂ₙ = √n / ‖Σ̂^{1/2} K̂ (αI + K̂*K̂)⁻¹ μ‖` where `Σ̂` is the
/// empirical covariance of `ûᵢ Wᵢ` and `fit` supplies the residuals.
pub fn functional_normalizer(sample: &FlirSample, fit: &GridFunction, mu: &GridFunction, alpha: f64) -> Result<f64> {
    same_grid(sample.grid(), mu.grid())?;
    let k_hat = estimate_k(sample)?;
    let svd = k_hat.svd()?;
    // K̂(αI + K̂*K̂)⁻¹μ = Σ s/(α+s²) ⟨μ, φⱼ⟩ ψⱼ
    let coefs = svd.right_coefficients(mu)?;
    let grid = sample.grid();
    let mut v = vec![0.0; grid.len()];
    for j in 0..svd.rank() {
        let s = svd.values()[j];
        let c = s / (alpha + s * s) * coefs[j];
        let psi = svd.left_function(j);
        for (vi, p) in v.iter_mut().zip(psi.values()) {
            *vi += c * p;
        }
    }
    let v = GridFunction::new(grid.clone(), v)?;
    let proj =
        sample.w() * DVector::from_iterator(grid.len(), v.values().iter().zip(grid.weights()).map(|(a, b)| a * b));
    let fitted = sample.z_inner(fit)?;
    let n = sample.len() as f64;
    let terms: Vec<f64> = sample
        .y()
        .iter()
        .zip(fitted.iter())
        .zip(proj.iter())
        .map(|((y, f), p)| (y - f) * p)
        .collect();
    let m = terms.iter().sum::<f64>() / n;
    let var = terms.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / n;
    let scale = var.sqrt();
    if !(scale > 0.0) || !scale.is_finite() || scale <= 1e-14 * mu.l2_norm().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateFunctional(
            "normalizer vanishes; the functional is not estimable at rate, use degenerate_limit_check".into(),
        ));
    }
    Ok(n.sqrt() / scale)
}

/// `⟨φ̂, μ⟩ ± z_{1−γ/2} / π̂ₙ` for the Tikhonov estimator.
pub fn functional_ci(
    sample: &FlirSample,
    mu: &GridFunction,
    spec: &FilterSpec,
    gamma: f64,
) -> Result<FunctionalInterval> {
    if spec.scheme() != Scheme::Tikhonov {
        return invalid(format!(
            "functional intervals need the Tikhonov scheme, got {}",
            spec.scheme()
        ));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return invalid(format!("gamma must lie in (0, 1), got {gamma}"));
    }
    same_grid(sample.grid(), mu.grid())?;
    if mu.sup_norm() == 0.0 {
        return Err(Error::DegenerateFunctional(
            "mu is zero; use degenerate_limit_check".into(),
        ));
    }
    let k_hat = estimate_k(sample)?;
    let svd = k_hat.svd()?;
    let fit = regularize_with(&svd, &estimate_r(sample)?, spec)?;
    let pi_n = functional_normalizer(sample, &fit, mu, spec.alpha())?;
    let estimate = fit.inner(mu)?;
    let half_width = normal_quantile(1.0 - gamma / 2.0) / pi_n;
    Ok(FunctionalInterval {
        estimate,
        half_width,
        pi_n,
        level: 1.0 - gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flir::FlirDesign;
    use crate::grid::{make_grid, trig_basis};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn doubled(sample: &FlirSample) -> FlirSample {
        let stack = |m: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(2 * m.nrows(), m.ncols());
            out.rows_mut(0, m.nrows()).copy_from(m);
            out.rows_mut(m.nrows(), m.nrows()).copy_from(m);
            out
        };
        let y = [sample.y(), sample.y()].concat();
        FlirSample::new(y, stack(sample.z()), stack(sample.w()), sample.grid().clone()).unwrap()
    }

    #[test]
    fn width_scales_with_root_n() {
        let g = make_grid(30).unwrap();
        let sample = FlirDesign::strong(g.clone()).sample(200, 4).unwrap();
        let mu = trig_basis(1, &g).unwrap();
        let spec = FilterSpec::tikhonov(0.01).unwrap();
        let a = functional_ci(&sample, &mu, &spec, 0.05).unwrap();
        let b = functional_ci(&doubled(&sample), &mu, &spec, 0.05).unwrap();
        assert_relative_eq!(a.estimate, b.estimate, max_relative = 1e-10);
        assert_relative_eq!(a.half_width / b.half_width, 2f64.sqrt(), max_relative = 1e-8);
        assert!(a.contains(a.estimate) && a.lo() < a.hi());
    }

    #[test]
    fn zero_direction_is_degenerate() {
        let g = make_grid(20).unwrap();
        let sample = FlirDesign::strong(g.clone()).sample(50, 1).unwrap();
        let spec = FilterSpec::tikhonov(0.01).unwrap();
        let err = functional_ci(&sample, &GridFunction::zeros(g), &spec, 0.05).unwrap_err();
        assert!(matches!(err, Error::DegenerateFunctional(_)));
    }

    #[test]
    fn needs_tikhonov() {
        let g = make_grid(20).unwrap();
        let sample = FlirDesign::strong(g.clone()).sample(50, 1).unwrap();
        let spec = FilterSpec::new(Scheme::SpectralCutoff, 0.01).unwrap();
        assert!(functional_ci(&sample, &trig_basis(1, &g).unwrap(), &spec, 0.05).is_err());
    }
}
