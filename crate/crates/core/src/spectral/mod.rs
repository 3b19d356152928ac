//! Discretized operators, their singular systems and spectral regularization.

mod filter;
mod operator;

use nalgebra::DVector;

pub use filter::{filter_value, qualification, FilterSpec, Qualification, Scheme, C3};
pub use operator::{DiscreteOperator, SvdCache, REL_RANK_TOL};

use crate::error::{invalid, Error, Result};
use crate::grid::{same_grid, GridFunction};

/// `g_α(K̂*K̂) K̂* r̂`.
pub fn regularize(k_hat: &DiscreteOperator, r_hat: &GridFunction, spec: &FilterSpec) -> Result<GridFunction> {
    same_grid(k_hat.range(), r_hat.grid())?;
    let svd = k_hat.svd()?;
    regularize_with(&svd, r_hat, spec)
}

/// [`regularize`] reusing a precomputed singular system.
pub fn regularize_with(svd: &SvdCache, r_hat: &GridFunction, spec: &FilterSpec) -> Result<GridFunction> {
    let top = svd.values().first().copied().unwrap_or(0.0);
    spec.check_spectrum(top * top)?;
    let mut coefs = svd.left_coefficients(r_hat)?;
    let rank = svd.rank();
    for (j, c) in coefs.iter_mut().enumerate() {
        let s = svd.values()[j];
        *c = if j < rank {
            filter_value(spec, s * s) * s * *c
        } else {
            0.0
        };
    }
    svd.synthesize_right(&coefs)
}

/// Solves `(αI + K̂*K̂) φ = K̂* r̂` by a dense factorization.
pub fn tikhonov_direct(k_hat: &DiscreteOperator, r_hat: &GridFunction, alpha: f64) -> Result<GridFunction> {
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    same_grid(k_hat.range(), r_hat.grid())?;
    let a = k_hat.whitened();
    let sqrt_out = DVector::from_iterator(
        r_hat.len(),
        r_hat
            .values()
            .iter()
            .zip(k_hat.range().weights())
            .map(|(v, w)| v * w.sqrt()),
    );
    let rhs = a.tr_mul(&sqrt_out);
    let mut normal = a.tr_mul(&a);
    for i in 0..normal.nrows() {
        normal[(i, i)] += alpha;
    }
    let x = match normal.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => normal
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Decomposition("normal equations are singular".into()))?,
    };
    let values = x
        .iter()
        .zip(k_hat.domain().weights())
        .map(|(x, w)| x / w.sqrt())
        .collect();
    GridFunction::new(k_hat.domain().clone(), values)
}

/// Spectral power of a self-adjoint positive semidefinite operator such as `K*K`.
pub fn operator_power(op: &DiscreteOperator, beta: f64) -> Result<DiscreteOperator> {
    op.power(beta)
}

/// `(K*K)^{β/2} ψ`; at `β = 0` this projects `ψ` off the null space of `K`.
pub fn source_element(k: &DiscreteOperator, beta: f64, psi: &GridFunction) -> Result<GridFunction> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return invalid(format!("beta must be nonnegative, got {beta}"));
    }
    let svd = k.svd()?;
    let rank = svd.rank();
    let mut coefs = svd.right_coefficients(psi)?;
    for (j, c) in coefs.iter_mut().enumerate() {
        *c = if j < rank { svd.values()[j].powf(beta) * *c } else { 0.0 };
    }
    svd.synthesize_right(&coefs)
}

/// `‖K*‖_{2,∞}` for an adjoint-side operator.
pub fn norm_2inf(op_adjoint: &DiscreteOperator) -> f64 {
    op_adjoint.norm_2inf()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, trig_basis, Grid};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_fn(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> GridFunction {
        let v = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        GridFunction::new(grid.clone(), v).unwrap()
    }

    #[test]
    fn identity_tikhonov_halves() {
        let g = make_grid(25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_fn(&g, &mut rng);
        let fit = regularize(&DiscreteOperator::identity(g), &f, &FilterSpec::tikhonov(1.0).unwrap()).unwrap();
        assert!(fit.sub(&f.scale(0.5)).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn rank_one_cutoff_inverts() {
        let g = make_grid(32).unwrap();
        let u = trig_basis(3, &g).unwrap();
        let v = trig_basis(2, &g).unwrap();
        let k = DiscreteOperator::rank_one(&u, &v);
        let spec = FilterSpec::new(Scheme::SpectralCutoff, 0.5).unwrap();
        let fit = regularize(&k, &v, &spec).unwrap();
        assert!(fit.sub(&u).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn tikhonov_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = make_grid(20).unwrap();
        let kernel = DMatrix::from_fn(20, 20, |_, _| rng.random_range(-1.0..1.0));
        let k = DiscreteOperator::new(kernel, g.clone(), g.clone()).unwrap();
        let r = random_fn(&g, &mut rng);
        for alpha in [1e-3, 0.1, 1.0] {
            let a = regularize(&k, &r, &FilterSpec::tikhonov(alpha).unwrap()).unwrap();
            let b = tikhonov_direct(&k, &r, alpha).unwrap();
            assert!(a.sub(&b).unwrap().l2_norm() < 1e-10);
        }
    }

    #[test]
    fn direct_solve_edge_cases() {
        let g = make_grid(15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let r = random_fn(&g, &mut rng);
        let zero = DiscreteOperator::zero(g.clone(), g.clone());
        assert_eq!(tikhonov_direct(&zero, &r, 0.1).unwrap().sup_norm(), 0.0);
        let id = DiscreteOperator::identity(g.clone());
        let big = tikhonov_direct(&id, &r, 1e6).unwrap();
        assert!(big.l2_norm() <= r.l2_norm() / 1e6);
        assert!(tikhonov_direct(&id, &r, 0.0).is_err());
    }

    #[test]
    fn source_element_on_singular_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let g = make_grid(18).unwrap();
        let kernel = DMatrix::from_fn(18, 18, |_, _| rng.random_range(-1.0..1.0));
        let k = DiscreteOperator::new(kernel, g.clone(), g).unwrap();
        let svd = k.svd().unwrap();
        for j in [0, 5, 11] {
            let phi = svd.right_function(j);
            let s = source_element(&k, 1.5, &phi).unwrap();
            let expected = phi.scale(svd.values()[j].powf(1.5));
            assert!(s.sub(&expected).unwrap().l2_norm() < 1e-8);
        }
    }

    #[test]
    fn source_element_zero_power_projects_off_null_space() {
        let g = make_grid(24).unwrap();
        let u = trig_basis(1, &g).unwrap();
        let k = DiscreteOperator::rank_one(&u, &u);
        let psi = trig_basis(1, &g).unwrap().add(&trig_basis(4, &g).unwrap()).unwrap();
        let s = source_element(&k, 0.0, &psi).unwrap();
        assert!(s.sub(&u).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn landweber_step_checked_against_spectrum() {
        let g = make_grid(10).unwrap();
        let id = DiscreteOperator::identity(g.clone()).scale(2.0);
        let r = GridFunction::constant(g, 1.0);
        let spec = FilterSpec::new(Scheme::Landweber { c: 0.5 }, 0.1).unwrap();
        assert!(regularize(&id, &r, &spec).is_err());
        let spec = FilterSpec::new(Scheme::Landweber { c: 0.2 }, 0.1).unwrap();
        let fit = regularize(&id, &r, &spec).unwrap();
        // g(4)·2 = (1 − 0.2^10)/2
        assert_abs_diff_eq!(fit.values()[0], (1.0 - 0.2f64.powi(10)) / 2.0, epsilon = 1e-12);
    }
}
