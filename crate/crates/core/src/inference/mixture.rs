//! Weighted sums of centered chi-square variables, the limit laws of
//! degenerate U-statistics.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg::sym_eigen;

/// `offset + Σⱼ λⱼ (χ²₁ⱼ − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSqMixture {
    eigenvalues: Vec<f64>,
    offset: f64,
}

impl ChiSqMixture {
    /// Eigenvalues are stored by decreasing magnitude.
    pub fn new(mut eigenvalues: Vec<f64>, offset: f64) -> Result<Self> {
        if eigenvalues.iter().any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(Error::Numerical("mixture parameters must be finite".into()));
        }
        eigenvalues.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        Ok(Self { eigenvalues, offset })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn mean(&self) -> f64 {
        self.offset
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.eigenvalues.iter().map(|l| l * l).sum::<f64>()
    }

    /// Smallest number of leading terms carrying `energy` of `Σ λⱼ²`.
    pub fn retained_count(&self, energy: f64) -> usize {
        let total: f64 = self.eigenvalues.iter().map(|l| l * l).sum();
        if total == 0.0 {
            return 0;
        }
        let mut acc = 0.0;
        for (j, l) in self.eigenvalues.iter().enumerate() {
            acc += l * l;
            if acc >= energy * total {
                return j + 1;
            }
        }
        self.eigenvalues.len()
    }

    /// The mixture with only the leading terms carrying `energy` of `Σ λⱼ²`.
    pub fn truncated(&self, energy: f64) -> Self {
        let k = self.retained_count(energy);
        Self {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            offset: self.offset,
        }
    }

    pub fn draw(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.offset
                    + self
                        .eigenvalues
                        .iter()
                        .map(|l| {
                            let x: f64 = rng.sample(StandardNormal);
                            l * (x * x - 1.0)
                        })
                        .sum::<f64>()
            })
            .collect()
    }
}

fn check_symmetric(h: &DMatrix<f64>) -> Result<()> {
    if !h.is_square() {
        return invalid("kernel matrix must be square");
    }
    let scale = h.amax().max(f64::MIN_POSITIVE);
    if (h - h.transpose()).amax() > 1e-10 * scale {
        return invalid("kernel matrix must be symmetric");
    }
    Ok(())
}

/// Mixture whose weights are the eigenvalues of `h/n`, with `h` the
/// symmetric kernel evaluated on a sample of size `n`.
pub fn ustat_mixture(h_matrix: &DMatrix<f64>, offset: f64) -> Result<ChiSqMixture> {
    check_symmetric(h_matrix)?;
    let n = h_matrix.nrows() as f64;
    let (values, _) = sym_eigen(&(h_matrix / n))?;
    ChiSqMixture::new(values.iter().copied().collect(), offset)
}

/// [`ustat_mixture`] for `h = ½(ABᵀ + BAᵀ)` with thin `n × k` factors,
/// solved as a `2k × 2k` problem.
pub fn ustat_mixture_factored(a: &DMatrix<f64>, b: &DMatrix<f64>, offset: f64) -> Result<ChiSqMixture> {
    if a.shape() != b.shape() {
        return invalid("factors must have equal shapes");
    }
    let (n, k) = a.shape();
    let mut c = DMatrix::zeros(n, 2 * k);
    c.columns_mut(0, k).copy_from(a);
    c.columns_mut(k, k).copy_from(b);
    // nonzero spectrum of C S Cᵀ equals that of G^{1/2} S G^{1/2}, G = CᵀC
    let gram = c.tr_mul(&c);
    let (values, vectors) = sym_eigen(&gram)?;
    let root = &vectors * DMatrix::from_diagonal(&values.map(|v| v.max(0.0).sqrt())) * vectors.transpose();
    let mut s = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        s[(i, k + i)] = 0.5;
        s[(k + i, i)] = 0.5;
    }
    let core = &root * s * &root;
    let (values, _) = sym_eigen(&(core / n as f64))?;
    ChiSqMixture::new(values.iter().copied().collect(), offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::stats::{mean, variance};
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_term_is_centered_chi_square() {
        let m = ChiSqMixture::new(vec![1.0], 0.0).unwrap();
        let d = m.draw(200_000, 1);
        assert!(mean(&d).abs() < 4.0 * (2.0f64 / 200_000.0).sqrt());
        assert!((variance(&d) - 2.0).abs() < 0.05);
    }

    #[test]
    fn hand_eigendecomposition() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let m = ustat_mixture(&h, 0.0).unwrap();
        assert_abs_diff_eq!(m.eigenvalues()[0].abs(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m.eigenvalues().iter().sum::<f64>(), 0.0, epsilon = 1e-14);
        assert!(ustat_mixture(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]), 0.0).is_err());
    }

    #[test]
    fn offset_shifts_draws() {
        let a = ChiSqMixture::new(vec![0.3, -0.2], 0.0).unwrap().draw(100, 7);
        let b = ChiSqMixture::new(vec![0.3, -0.2], 1.5).unwrap().draw(100, 7);
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(y - x, 1.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn factored_matches_dense() {
        let n = 30;
        let k = 4;
        let a = DMatrix::from_fn(n, k, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.4);
        let b = DMatrix::from_fn(n, k, |i, j| ((i * 5 + j * 2) % 13) as f64 / 13.0 - 0.5);
        let h = (&a * b.transpose() + &b * a.transpose()) * 0.5;
        let dense = ustat_mixture(&h, 0.2).unwrap();
        let thin = ustat_mixture_factored(&a, &b, 0.2).unwrap();
        for j in 0..2 * k {
            assert_abs_diff_eq!(dense.eigenvalues()[j], thin.eigenvalues()[j], epsilon = 1e-10);
        }
        assert!(dense.eigenvalues()[2 * k..].iter().all(|l| l.abs() < 1e-10));
    }

    #[test]
    fn truncation_by_energy() {
        let m = ChiSqMixture::new(vec![1.0, 0.1, 0.01], 0.0).unwrap();
        assert_eq!(m.retained_count(0.99), 1);
        assert_eq!(m.retained_count(0.9999), 2);
        assert_eq!(m.truncated(1.0).eigenvalues().len(), 3);
        assert_eq!(ChiSqMixture::new(vec![0.0; 3], 0.0).unwrap().retained_count(0.999), 0);
    }
}
