use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::grid::{same_grid, Grid, GridFunction};
use crate::linalg::{sym_eigen, thin_svd};

/// Singular values below this fraction of the largest one are treated as
/// exact zeros when deciding the numerical rank.
pub const REL_RANK_TOL: f64 = 1e-12;

/// Quadrature discretization of a linear operator between two grid spaces.
///
/// The operator acts as `(Kf)(xᵢ) = Σⱼ kernel[i,j] · w_in[j] · f(zⱼ)`, so
/// `kernel` holds the values of the integral kernel at the node pairs and
/// the domain weights carry the quadrature.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    kernel: DMatrix<f64>,
    domain: Arc<Grid>,
    range: Arc<Grid>,
}

impl DiscreteOperator {
    pub fn new(kernel: DMatrix<f64>, domain: Arc<Grid>, range: Arc<Grid>) -> Result<Self> {
        if kernel.nrows() != range.len() || kernel.ncols() != domain.len() {
            return Err(Error::GridMismatch(format!(
                "kernel is {}x{}, grids need {}x{}",
                kernel.nrows(),
                kernel.ncols(),
                range.len(),
                domain.len()
            )));
        }
        if kernel.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("operator kernel has non-finite entries".into()));
        }
        Ok(Self { kernel, domain, range })
    }

    /// Integral operator with kernel `k(x, z)`, `x` on the range grid and `z`
    /// on the domain grid.
    pub fn from_kernel_fn(domain: Arc<Grid>, range: Arc<Grid>, k: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let kernel = DMatrix::from_fn(range.len(), domain.len(), |i, j| {
            k(range.points()[i], domain.points()[j])
        });
        Self::new(kernel, domain, range)
    }

    pub fn identity(grid: Arc<Grid>) -> Self {
        let kernel = DMatrix::from_diagonal(&DVector::from_iterator(
            grid.len(),
            grid.weights().iter().map(|w| 1.0 / w),
        ));
        Self {
            kernel,
            domain: grid.clone(),
            range: grid,
        }
    }

    pub fn zero(domain: Arc<Grid>, range: Arc<Grid>) -> Self {
        let kernel = DMatrix::zeros(range.len(), domain.len());
        Self { kernel, domain, range }
    }

    /// `φ ↦ ⟨u, φ⟩ v`.
    pub fn rank_one(u: &GridFunction, v: &GridFunction) -> Self {
        let kernel = DMatrix::from_fn(v.len(), u.len(), |i, j| v.values()[i] * u.values()[j]);
        Self {
            kernel,
            domain: u.grid().clone(),
            range: v.grid().clone(),
        }
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn domain(&self) -> &Arc<Grid> {
        &self.domain
    }

    pub fn range(&self) -> &Arc<Grid> {
        &self.range
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        same_grid(&self.domain, f.grid())?;
        let weighted = DVector::from_iterator(
            f.len(),
            f.values().iter().zip(self.domain.weights()).map(|(v, w)| v * w),
        );
        let out = &self.kernel * weighted;
        GridFunction::new(self.range.clone(), out.as_slice().to_vec())
    }

    /// Adjoint under the two quadrature inner products: the kernel transposed.
    pub fn adjoint(&self) -> Self {
        Self {
            kernel: self.kernel.transpose(),
            domain: self.range.clone(),
            range: self.domain.clone(),
        }
    }

    /// `outer ∘ self`.
    pub fn then(&self, outer: &DiscreteOperator) -> Result<Self> {
        same_grid(&self.range, &outer.domain)?;
        let mut weighted = self.kernel.clone();
        for (i, w) in self.range.weights().iter().enumerate() {
            weighted.row_mut(i).scale_mut(*w);
        }
        Ok(Self {
            kernel: &outer.kernel * weighted,
            domain: self.domain.clone(),
            range: outer.range.clone(),
        })
    }

    /// `K*K` as an operator on the domain space.
    pub fn gram(&self) -> Self {
        self.then(&self.adjoint()).expect("adjoint composes with its operator")
    }

    pub fn sub(&self, other: &DiscreteOperator) -> Result<Self> {
        same_grid(&self.domain, &other.domain)?;
        same_grid(&self.range, &other.range)?;
        Ok(Self {
            kernel: &self.kernel - &other.kernel,
            domain: self.domain.clone(),
            range: self.range.clone(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            kernel: &self.kernel * c,
            domain: self.domain.clone(),
            range: self.range.clone(),
        }
    }

    /// `diag(√w_out) · kernel · diag(√w_in)`: the matrix of the operator in
    /// orthonormal coordinates of both grid spaces.
    pub fn whitened(&self) -> DMatrix<f64> {
        let mut a = self.kernel.clone();
        let sqrt_in: Vec<f64> = self.domain.weights().iter().map(|w| w.sqrt()).collect();
        let sqrt_out: Vec<f64> = self.range.weights().iter().map(|w| w.sqrt()).collect();
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                a[(i, j)] *= sqrt_out[i] * sqrt_in[j];
            }
        }
        a
    }

    fn from_whitened(a: DMatrix<f64>, domain: Arc<Grid>, range: Arc<Grid>) -> Self {
        let mut kernel = a;
        for j in 0..kernel.ncols() {
            let sj = domain.weights()[j].sqrt();
            for i in 0..kernel.nrows() {
                kernel[(i, j)] /= range.weights()[i].sqrt() * sj;
            }
        }
        Self { kernel, domain, range }
    }

    /// Operator norm in `L2`.
    pub fn norm(&self) -> f64 {
        thin_svd(&self.whitened())
            .map(|(s, _, _)| s.first().copied().unwrap_or(0.0))
            .unwrap_or(f64::NAN)
    }

    /// Hilbert-Schmidt norm `(∫∫ k²)^{1/2}`.
    pub fn hs_norm(&self) -> f64 {
        self.whitened().norm()
    }

    pub fn svd(&self) -> Result<SvdCache> {
        SvdCache::new(self)
    }

    /// `sup_{‖ψ‖≤1} ‖Kψ‖_∞`: the largest weighted `L2` norm of a kernel row.
    ///
    /// Meant for adjoint-side operators, e.g. `K*` mapping the instrument
    /// space back to the regressor space.
    pub fn norm_2inf(&self) -> f64 {
        let w = self.domain.weights();
        self.kernel
            .row_iter()
            .map(|row| row.iter().zip(w).map(|(k, w)| w * k * k).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Whether the operator maps a grid space to itself with a symmetric kernel.
    pub fn is_self_adjoint(&self, rel_tol: f64) -> bool {
        if same_grid(&self.domain, &self.range).is_err() {
            return false;
        }
        let scale = self.kernel.amax().max(f64::MIN_POSITIVE);
        (&self.kernel - self.kernel.transpose()).amax() <= rel_tol * scale
    }

    /// Spectral power of a self-adjoint positive semidefinite operator.
    ///
    /// Eigenvalues below [`REL_RANK_TOL`] times the largest are set to zero
    /// before exponentiation.
    pub fn power(&self, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return invalid(format!("operator power needs beta > 0, got {beta}"));
        }
        if !self.is_self_adjoint(1e-10) {
            return invalid("operator power requires a self-adjoint operator");
        }
        let a = self.whitened();
        let (values, q) = sym_eigen(&a)?;
        let top = values.amax();
        let mut powered = DVector::zeros(values.len());
        for (p, &l) in powered.iter_mut().zip(values.iter()) {
            *p = if l > REL_RANK_TOL * top { l.powf(beta) } else { 0.0 };
        }
        let out = &q * DMatrix::from_diagonal(&powered) * q.transpose();
        Ok(Self::from_whitened(out, self.domain.clone(), self.range.clone()))
    }

    /// `(K*K)^{β/2}` computed from the singular values of `K`, which keeps
    /// small eigenvalues accurate.
    pub fn gram_power(&self, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return invalid(format!("gram power needs beta >= 0, got {beta}"));
        }
        let svd = self.svd()?;
        let rank = svd.rank();
        let v = svd.right_whitened().columns(0, rank).into_owned();
        let d = DVector::from_iterator(rank, svd.values()[..rank].iter().map(|s| s.powf(beta)));
        let a = &v * DMatrix::from_diagonal(&d) * v.transpose();
        Ok(Self::from_whitened(a, self.domain.clone(), self.domain.clone()))
    }
}

/// Singular system of a [`DiscreteOperator`] in function-space normalization.
///
/// `K φⱼ = λⱼ ψⱼ` and `K* ψⱼ = λⱼ φⱼ`, with `φⱼ` orthonormal on the domain
/// grid and `ψⱼ` orthonormal on the range grid.
#[derive(Debug, Clone)]
pub struct SvdCache {
    values: Vec<f64>,
    // orthonormal singular vectors of the whitened matrix, one per column
    left: DMatrix<f64>,
    right: DMatrix<f64>,
    domain: Arc<Grid>,
    range: Arc<Grid>,
}

impl SvdCache {
    pub fn new(op: &DiscreteOperator) -> Result<Self> {
        let (values, left, right) = thin_svd(&op.whitened())?;
        Ok(Self {
            values,
            left,
            right,
            domain: op.domain.clone(),
            range: op.range.clone(),
        })
    }

    /// Singular values, nonincreasing.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of singular values above [`REL_RANK_TOL`] times the largest.
    pub fn rank(&self) -> usize {
        let top = self.values.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.values.iter().take_while(|&&s| s > REL_RANK_TOL * top).count()
    }

    pub fn domain(&self) -> &Arc<Grid> {
        &self.domain
    }

    pub fn range(&self) -> &Arc<Grid> {
        &self.range
    }

    pub(crate) fn right_whitened(&self) -> &DMatrix<f64> {
        &self.right
    }

    /// Right singular function `φⱼ` (0-based index).
    pub fn right_function(&self, j: usize) -> GridFunction {
        unwhiten(&self.domain, self.right.column(j).iter().copied())
    }

    /// Left singular function `ψⱼ` (0-based index).
    pub fn left_function(&self, j: usize) -> GridFunction {
        unwhiten(&self.range, self.left.column(j).iter().copied())
    }

    /// `⟨g, ψⱼ⟩` for every left singular function.
    pub fn left_coefficients(&self, g: &GridFunction) -> Result<DVector<f64>> {
        same_grid(&self.range, g.grid())?;
        Ok(self.left.tr_mul(&whiten(&self.range, g.values())))
    }

    /// `⟨f, φⱼ⟩` for every right singular function.
    pub fn right_coefficients(&self, f: &GridFunction) -> Result<DVector<f64>> {
        same_grid(&self.domain, f.grid())?;
        Ok(self.right.tr_mul(&whiten(&self.domain, f.values())))
    }

    /// `Σⱼ cⱼ φⱼ`.
    pub fn synthesize_right(&self, coefs: &DVector<f64>) -> Result<GridFunction> {
        let x = &self.right * coefs;
        let f = unwhiten(&self.domain, x.iter().copied());
        GridFunction::new(f.grid().clone(), f.into_values())
    }
}

fn whiten(grid: &Grid, values: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        values.len(),
        values.iter().zip(grid.weights()).map(|(v, w)| v * w.sqrt()),
    )
}

fn unwhiten(grid: &Arc<Grid>, coords: impl Iterator<Item = f64>) -> GridFunction {
    let values = coords.zip(grid.weights()).map(|(c, w)| c / w.sqrt()).collect();
    GridFunction::new(grid.clone(), values).expect("singular vectors are finite")
}
