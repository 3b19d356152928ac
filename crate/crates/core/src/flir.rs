//! Functional linear IV regression `Y = ⟨Z, φ⟩ + U` with a functional
//! instrument `W`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dgp::{true_phi, J0};
use crate::error::{invalid, Error, Result};
use crate::grid::{project_onto_span, same_grid, BasisSpec, Grid, GridFunction};
use crate::spectral::{regularize, DiscreteOperator, FilterSpec};

/// `n` observations of a scalar outcome and two curves on a shared grid.
///
/// Curves are stored row-wise: `z[(i, a)] = Zᵢ(xₐ)`.
#[derive(Debug, Clone)]
pub struct FlirSample {
    y: Vec<f64>,
    z: DMatrix<f64>,
    w: DMatrix<f64>,
    grid: Arc<Grid>,
}

impl FlirSample {
    pub fn new(y: Vec<f64>, z: DMatrix<f64>, w: DMatrix<f64>, grid: Arc<Grid>) -> Result<Self> {
        if y.is_empty() {
            return invalid("empty sample");
        }
        if z.nrows() != y.len() || w.nrows() != y.len() {
            return invalid(format!("{} outcomes but {} / {} curves", y.len(), z.nrows(), w.nrows()));
        }
        if z.ncols() != grid.len() || w.ncols() != grid.len() {
            return Err(Error::GridMismatch("curve length differs from the grid size".into()));
        }
        if y.iter().chain(z.iter()).chain(w.iter()).any(|v| !v.is_finite()) {
            return invalid("non-finite sample values");
        }
        Ok(Self { y, z, w, grid })
    }

    pub fn from_functions(y: Vec<f64>, z: &[GridFunction], w: &[GridFunction]) -> Result<Self> {
        let grid = match z.first() {
            Some(f) => f.grid().clone(),
            None => return invalid("empty sample"),
        };
        for f in z.iter().chain(w) {
            same_grid(&grid, f.grid())?;
        }
        let stack = |fs: &[GridFunction]| DMatrix::from_fn(fs.len(), grid.len(), |i, a| fs[i].values()[a]);
        Self::new(y, stack(z), stack(w), grid.clone())
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

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn z_curve(&self, i: usize) -> GridFunction {
        GridFunction::new(self.grid.clone(), self.z.row(i).iter().copied().collect()).expect("finite curve")
    }

    pub fn w_curve(&self, i: usize) -> GridFunction {
        GridFunction::new(self.grid.clone(), self.w.row(i).iter().copied().collect()).expect("finite curve")
    }

    /// Copy with the pointwise sample means of `Z` and `W` removed.
    pub fn demeaned(&self) -> Self {
        let center = |m: &DMatrix<f64>| {
            let mean = m.row_mean();
            let mut out = m.clone();
            for mut row in out.row_iter_mut() {
                row -= &mean;
            }
            out
        };
        Self {
            y: self.y.clone(),
            z: center(&self.z),
            w: center(&self.w),
            grid: self.grid.clone(),
        }
    }

    pub fn with_outcome(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(y, self.z.clone(), self.w.clone(), self.grid.clone())
    }

    /// `⟨Zᵢ, φ⟩` for every observation.
    pub fn z_inner(&self, phi: &GridFunction) -> Result<DVector<f64>> {
        same_grid(&self.grid, phi.grid())?;
        let weighted = DVector::from_iterator(
            phi.len(),
            phi.values().iter().zip(self.grid.weights()).map(|(v, w)| v * w),
        );
        Ok(&self.z * weighted)
    }
}

/// `r̂ = n⁻¹ Σ Yᵢ Wᵢ`.
pub fn estimate_r(sample: &FlirSample) -> Result<GridFunction> {
    let y = DVector::from_column_slice(sample.y());
    let r = sample.w.tr_mul(&y) / sample.len() as f64;
    GridFunction::new(sample.grid.clone(), r.as_slice().to_vec())
}

/// `K̂ = n⁻¹ Σ Wᵢ ⟨Zᵢ, ·⟩`.
pub fn estimate_k(sample: &FlirSample) -> Result<DiscreteOperator> {
    let kernel = sample.w.tr_mul(&sample.z) / sample.len() as f64;
    DiscreteOperator::new(kernel, sample.grid.clone(), sample.grid.clone())
}

pub fn flir_fit(sample: &FlirSample, spec: &FilterSpec) -> Result<GridFunction> {
    regularize(&estimate_k(sample)?, &estimate_r(sample)?, spec)
}

/// Synthetic design: `Z = Σ_{j≤J} j^{-d} ξⱼ eⱼ`, an instrument that shares the
/// first `J₀` components with `Z` plus an independent series, and
/// `Y = ⟨Z, φ⟩ + U` with `U ~ N(0, σ_u²)` independent of everything else.
///
/// Coefficients are uniform with unit variance, so trajectories are bounded.
#[derive(Debug, Clone)]
pub struct FlirDesign {
    pub j0: J0,
    pub terms: usize,
    pub decay: f64,
    pub noise_sd: f64,
    pub grid: Arc<Grid>,
}

impl FlirDesign {
    pub fn new(j0: J0, grid: Arc<Grid>) -> Self {
        Self {
            j0,
            terms: 10,
            decay: 1.5,
            noise_sd: 0.5,
            grid,
        }
    }

    /// `W = Z + independent series`.
    pub fn strong(grid: Arc<Grid>) -> Self {
        Self::new(J0::Infinite, grid)
    }

    fn shared(&self) -> usize {
        match self.j0 {
            J0::Finite(j) => j.min(self.terms),
            J0::Infinite => self.terms,
        }
    }

    fn basis(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.terms, self.grid.len());
        let mut buf = vec![0.0; self.terms];
        for (a, &x) in self.grid.points().iter().enumerate() {
            crate::grid::trig_values_into(x, &mut buf);
            for (j, v) in buf.iter().enumerate() {
                out[(j, a)] = *v;
            }
        }
        out
    }

    fn scale(&self, j: usize) -> f64 {
        ((j + 1) as f64).powf(-self.decay)
    }

    pub fn structural(&self) -> GridFunction {
        GridFunction::from_fn(self.grid.clone(), true_phi).expect("polynomial is finite")
    }

    /// Projection of the structural function onto the shared components.
    pub fn best_approx(&self) -> Result<GridFunction> {
        let basis = BasisSpec::trigonometric(self.terms)?;
        let indices: Vec<usize> = (1..=self.shared()).collect();
        project_onto_span(&self.structural(), &basis, &indices)
    }

    /// Population `K = E[W ⊗ Z]`, diagonal in the basis with entries `j^{-2d}`.
    pub fn operator(&self) -> Result<DiscreteOperator> {
        let basis = self.basis();
        let mut kernel = DMatrix::zeros(self.grid.len(), self.grid.len());
        for j in 0..self.shared() {
            let s2 = self.scale(j).powi(2);
            let row = basis.row(j);
            kernel += row.transpose() * row * s2;
        }
        DiscreteOperator::new(kernel, self.grid.clone(), self.grid.clone())
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<FlirSample> {
        if n == 0 {
            return invalid("sample size must be positive");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 3f64.sqrt();
        let basis = self.basis();
        let phi = self.structural();
        let phi_coef: Vec<f64> = (0..self.terms)
            .map(|j| {
                basis
                    .row(j)
                    .iter()
                    .zip(phi.values())
                    .zip(self.grid.weights())
                    .map(|((b, p), w)| b * p * w)
                    .sum()
            })
            .collect();
        let shared = self.shared();
        let mut xi = DMatrix::zeros(n, self.terms);
        let mut nu = DMatrix::zeros(n, self.terms);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let mut signal = 0.0;
            for j in 0..self.terms {
                let x: f64 = rng.random_range(-half..half) * self.scale(j);
                let v: f64 = rng.random_range(-half..half) * self.scale(j);
                xi[(i, j)] = x;
                nu[(i, j)] = if j < shared { x + v } else { v };
                signal += x * phi_coef[j];
            }
            let u: f64 = rng.sample(StandardNormal);
            y.push(signal + self.noise_sd * u);
        }
        FlirSample::new(y, &xi * &basis, &nu * &basis, self.grid.clone())
    }
}
