//! Kernel NPIV estimate on one draw of the simulation design, compared with
//! the structural function and its best approximation.

use spectral_iv::dgp::{best_approx, structural_function, Dgp, DgpConfig, J0};
use spectral_iv::grid::make_grid;
use spectral_iv::npiv::{npiv_estimate, KernelSpec};
use spectral_iv::spectral::FilterSpec;

fn main() -> spectral_iv::Result<()> {
    let grid = make_grid(100)?;
    let config = DgpConfig::new(J0::Finite(2), 5000, 3);
    let sample = Dgp::new(config.clone())?.sample(config.n, config.seed)?;
    let est = npiv_estimate(
        &sample,
        &KernelSpec::gaussian(0.15, 0.1)?,
        &FilterSpec::tikhonov(0.003)?,
        &grid,
    )?;

    let phi = structural_function(&config, &grid);
    let phi1 = best_approx(&config, &grid)?;
    println!("density mass on grid: {:.4}", est.density.mass());
    println!("leading singular values: {:?}", &est.svd.values()[..4]);
    println!("|fit - phi1| = {:.4}", est.fit.sub(&phi1)?.l2_norm());
    println!("|fit - phi|  = {:.4}", est.fit.sub(&phi)?.l2_norm());
    println!("z, fit, phi1, phi");
    for a in (0..grid.len()).step_by(10) {
        println!(
            "{:.3}, {:+.4}, {:+.4}, {:+.4}",
            grid.points()[a],
            est.fit.values()[a],
            phi1.values()[a],
            phi.values()[a]
        );
    }
    Ok(())
}
