//! Uniform midpoint discretization of `L2[0,1]`, grid functions and the
//! trigonometric basis.
//!
//! Every function space in the crate is represented by a [`Grid`]: `m`
//! midpoint nodes `(i + 1/2)/m` with equal quadrature weights `1/m`. Inner
//! products, norms and projections are quadrature sums over those nodes. The
//! midpoint rule integrates trigonometric polynomials of frequency `< m`
//! exactly, so the trigonometric basis stays orthonormal on the grid up to
//! rounding as long as its highest frequency is below `m/2`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Smallest admissible number of grid nodes.
pub const MIN_GRID_SIZE: usize = 4;

/// Uniform midpoint grid on `[0,1]` with its quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Midpoint grid with `m` nodes and weights `1/m`.
    pub fn midpoint(m: usize) -> Result<Arc<Grid>> {
        if m < MIN_GRID_SIZE {
            return invalid(format!("grid needs at least {MIN_GRID_SIZE} nodes, got {m}"));
        }
        let h = 1.0 / m as f64;
        let points = (0..m).map(|i| (i as f64 + 0.5) * h).collect();
        let weights = vec![h; m];
        Ok(Arc::new(Grid { points, weights }))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Node spacing; equal to every weight on a midpoint grid.
    pub fn spacing(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// Quadrature of a closure over the grid nodes.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    fn integrate_values(&self, values: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .zip(values)
            .map(|((&x, &w), &v)| w * v * g(x))
            .sum()
    }
}

/// Shorthand for [`Grid::midpoint`].
pub fn make_grid(m: usize) -> Result<Arc<Grid>> {
    Grid::midpoint(m)
}

/// A real function sampled on the nodes of a [`Grid`].
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value {} at node {i}", values[i])));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        same_grid(&self.grid, &other.grid)
    }

    /// Quadrature inner product `Σ wᵢ f(xᵢ) g(xᵢ)`.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.weights())
            .map(|((a, b), w)| w * a * b)
            .sum())
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + c * b)
    }

    fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.grid.clone(), values)
    }

    /// Piecewise-linear interpolation between nodes, constant beyond the
    /// outermost nodes.
    pub fn interpolate(&self, x: f64) -> f64 {
        interpolate_uniform(&self.values, x)
    }
}

/// Linear interpolation of values stored at midpoint nodes `(i + 1/2)/m`.
pub(crate) fn interpolate_uniform(values: &[f64], x: f64) -> f64 {
    let m = values.len();
    let s = x * m as f64 - 0.5;
    if s <= 0.0 {
        return values[0];
    }
    if s >= (m - 1) as f64 {
        return values[m - 1];
    }
    let i = s.floor() as usize;
    let t = s - i as f64;
    values[i] * (1.0 - t) + values[i + 1] * t
}

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "grids of {} and {} nodes differ",
            a.len(),
            b.len()
        )))
    }
}

/// Basis families available for projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Trigonometric,
}

/// The first `count` functions of a basis family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub count: usize,
}

impl BasisSpec {
    pub fn trigonometric(count: usize) -> Result<Self> {
        if count == 0 {
            return invalid("basis needs at least one function");
        }
        Ok(Self {
            kind: BasisKind::Trigonometric,
            count,
        })
    }

    pub fn eval(&self, j: usize, x: f64) -> f64 {
        match self.kind {
            BasisKind::Trigonometric => trig_value(j, x),
        }
    }
}

/// Value of the `j`-th trigonometric basis function (1-based) at `x`.
///
/// Ordering is `1, √2cos(2πx), √2sin(2πx), √2cos(4πx), …`.
pub fn trig_value(j: usize, x: f64) -> f64 {
    debug_assert!(j >= 1);
    if j == 1 {
        return 1.0;
    }
    let k = (j / 2) as f64;
    let arg = 2.0 * PI * k * x;
    if j % 2 == 0 {
        SQRT_2 * arg.cos()
    } else {
        SQRT_2 * arg.sin()
    }
}

/// Values of the first `out.len()` trigonometric basis functions at `x`,
/// by the angle-addition recurrence.
pub fn trig_values_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    let (s1, c1) = (2.0 * PI * x).sin_cos();
    let (mut s, mut c) = (s1, c1);
    let mut j = 1;
    while j < out.len() {
        out[j] = SQRT_2 * c;
        if j + 1 < out.len() {
            out[j + 1] = SQRT_2 * s;
        }
        let next_c = c * c1 - s * s1;
        s = s * c1 + c * s1;
        c = next_c;
        j += 2;
    }
}

/// Frequency `k` carried by basis index `j`.
pub fn trig_frequency(j: usize) -> usize {
    j / 2
}

pub fn trig_basis(j: usize, grid: &Arc<Grid>) -> Result<GridFunction> {
    if j == 0 {
        return invalid("trigonometric basis index starts at 1");
    }
    GridFunction::from_fn(grid.clone(), |x| trig_value(j, x))
}

/// Orthogonal projection `Σ_{j∈indices} ⟨f,φⱼ⟩ φⱼ`.
pub fn project_onto_span(f: &GridFunction, basis: &BasisSpec, indices: &[usize]) -> Result<GridFunction> {
    let grid = f.grid().clone();
    let mut out = vec![0.0; grid.len()];
    for &j in indices {
        if j == 0 || j > basis.count {
            return invalid(format!("basis index {j} outside 1..={}", basis.count));
        }
        let phi: Vec<f64> = grid.points().iter().map(|&x| basis.eval(j, x)).collect();
        let coef: f64 = f
            .values()
            .iter()
            .zip(&phi)
            .zip(grid.weights())
            .map(|((a, b), w)| w * a * b)
            .sum();
        for (o, p) in out.iter_mut().zip(&phi) {
            *o += coef * p;
        }
    }
    GridFunction::new(grid, out)
}

/// Fourier coefficients `⟨f, φⱼ⟩` for `j = 1..=count`.
pub fn basis_coefficients(f: &GridFunction, basis: &BasisSpec) -> Vec<f64> {
    let grid = f.grid();
    (1..=basis.count)
        .map(|j| grid.integrate_values(f.values(), |x| basis.eval(j, x)))
        .collect()
}
