//! Nonparametric instrumental variables: kernel estimates of `r(w)`,
//! `f_ZW(z, w)` and the integral operator they define.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::spectral::{regularize_with, DiscreteOperator, FilterSpec, SvdCache};

/// Observations `(Yᵢ, Zᵢ, Wᵢ)` with scalar regressor and instrument in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct NpivSample {
    y: Vec<f64>,
    z: Vec<f64>,
    w: Vec<f64>,
}

impl NpivSample {
    pub fn new(y: Vec<f64>, z: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return invalid("empty sample");
        }
        if z.len() != y.len() || w.len() != y.len() {
            return invalid(format!("lengths differ: y={}, z={}, w={}", y.len(), z.len(), w.len()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite outcome");
        }
        let in_unit = |v: &f64| (0.0..=1.0).contains(v);
        if !z.iter().all(in_unit) || !w.iter().all(in_unit) {
            return invalid("regressor and instrument must lie in [0, 1]");
        }
        Ok(Self { y, z, w })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Same regressor and instrument draws with a different outcome vector.
    pub fn with_outcome(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(y, self.z.clone(), self.w.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian,
    Epanechnikov,
}

impl KernelKind {
    pub fn eval(self, u: f64) -> f64 {
        match self {
            KernelKind::Gaussian => (-0.5 * u * u).exp() / (2.0 * PI).sqrt(),
            KernelKind::Epanechnikov => {
                if u.abs() < 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// `∫ K(u)² du`, the self-convolution at zero.
    pub fn roughness(self) -> f64 {
        match self {
            KernelKind::Gaussian => 1.0 / (2.0 * PI.sqrt()),
            KernelKind::Epanechnikov => 0.6,
        }
    }
}

/// Kernel family and the two bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    pub h_z: f64,
    pub h_w: f64,
}

fn default_kernel() -> KernelKind {
    KernelKind::Gaussian
}

impl KernelSpec {
    pub fn new(kernel: KernelKind, h_z: f64, h_w: f64) -> Result<Self> {
        let spec = Self { kernel, h_z, h_w };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(h_z: f64, h_w: f64) -> Result<Self> {
        Self::new(KernelKind::Gaussian, h_z, h_w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_z > 0.0 && self.h_z.is_finite() && self.h_w > 0.0 && self.h_w.is_finite()) {
            return invalid(format!(
                "bandwidths must be positive, got h_z={}, h_w={}",
                self.h_z, self.h_w
            ));
        }
        Ok(())
    }
}

/// `Kᵢₐ = h⁻¹ K((xᵢ − nodeₐ)/h)`.
pub(crate) fn kernel_matrix(x: &[f64], nodes: &[f64], h: f64, kind: KernelKind) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), nodes.len(), |i, a| kind.eval((x[i] - nodes[a]) / h) / h)
}

/// Joint density estimate on the product grid, `values[(a, b)] = f̂(z_a, w_b)`.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    values: DMatrix<f64>,
    z_grid: Arc<Grid>,
    w_grid: Arc<Grid>,
}

impl DensityEstimate {
    pub fn new(values: DMatrix<f64>, z_grid: Arc<Grid>, w_grid: Arc<Grid>) -> Result<Self> {
        if values.nrows() != z_grid.len() || values.ncols() != w_grid.len() {
            return Err(Error::GridMismatch(
                "density values do not match the product grid".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("density has non-finite values".into()));
        }
        Ok(Self { values, z_grid, w_grid })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn z_grid(&self) -> &Arc<Grid> {
        &self.z_grid
    }

    pub fn w_grid(&self) -> &Arc<Grid> {
        &self.w_grid
    }

    /// Quadrature of the density over the unit square.
    pub fn mass(&self) -> f64 {
        let wz = self.z_grid.weights();
        let ww = self.w_grid.weights();
        let mut total = 0.0;
        for b in 0..self.values.ncols() {
            for a in 0..self.values.nrows() {
                total += wz[a] * ww[b] * self.values[(a, b)];
            }
        }
        total
    }

    /// Marginal in `w`, `∫ f(z, ·) dz`.
    pub fn w_marginal(&self) -> GridFunction {
        let wz = self.z_grid.weights();
        let values = (0..self.values.ncols())
            .map(|b| (0..self.values.nrows()).map(|a| wz[a] * self.values[(a, b)]).sum())
            .collect();
        GridFunction::new(self.w_grid.clone(), values).expect("finite density")
    }
}

pub fn kde_joint(sample: &NpivSample, spec: &KernelSpec, grid: &Arc<Grid>) -> Result<DensityEstimate> {
    spec.validate()?;
    let kz = kernel_matrix(sample.z(), grid.points(), spec.h_z, spec.kernel);
    let kw = kernel_matrix(sample.w(), grid.points(), spec.h_w, spec.kernel);
    let values = kz.tr_mul(&kw) / sample.len() as f64;
    DensityEstimate::new(values, grid.clone(), grid.clone())
}

pub fn estimate_r(sample: &NpivSample, spec: &KernelSpec, grid: &Arc<Grid>) -> Result<GridFunction> {
    spec.validate()?;
    let kw = kernel_matrix(sample.w(), grid.points(), spec.h_w, spec.kernel);
    let y = DVector::from_column_slice(sample.y());
    let r = kw.tr_mul(&y) / sample.len() as f64;
    GridFunction::new(grid.clone(), r.as_slice().to_vec())
}

/// `(K̂φ)(w) = ∫ φ(z) f̂(z, w) dz`, mapping functions of `z` to functions of `w`.
pub fn build_operator(density: &DensityEstimate) -> Result<DiscreteOperator> {
    DiscreteOperator::new(
        density.values.transpose(),
        density.z_grid.clone(),
        density.w_grid.clone(),
    )
}

/// Every intermediate of one NPIV fit.
#[derive(Debug, Clone)]
pub struct NpivEstimate {
    pub density: DensityEstimate,
    pub operator: DiscreteOperator,
    pub svd: SvdCache,
    pub r_hat: GridFunction,
    pub fit: GridFunction,
}

pub fn npiv_estimate(
    sample: &NpivSample,
    kspec: &KernelSpec,
    fspec: &FilterSpec,
    grid: &Arc<Grid>,
) -> Result<NpivEstimate> {
    let density = kde_joint(sample, kspec, grid)?;
    let operator = build_operator(&density)?;
    let r_hat = estimate_r(sample, kspec, grid)?;
    let svd = operator.svd()?;
    let fit = regularize_with(&svd, &r_hat, fspec)?;
    Ok(NpivEstimate {
        density,
        operator,
        svd,
        r_hat,
        fit,
    })
}

pub fn npiv_fit(sample: &NpivSample, kspec: &KernelSpec, fspec: &FilterSpec, grid: &Arc<Grid>) -> Result<GridFunction> {
    Ok(npiv_estimate(sample, kspec, fspec, grid)?.fit)
}
