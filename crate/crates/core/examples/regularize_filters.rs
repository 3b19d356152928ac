//! The four filter schemes applied to a smoothing operator with a known
//! solution, plus the matching direct Tikhonov solve.

use spectral_iv::grid::{make_grid, GridFunction};
use spectral_iv::spectral::{regularize, tikhonov_direct, DiscreteOperator, FilterSpec, Scheme};

fn main() -> spectral_iv::Result<()> {
    let grid = make_grid(120)?;
    let k = DiscreteOperator::from_kernel_fn(grid.clone(), grid.clone(), |x, z| {
        (-(x - z).powi(2) / (2.0 * 0.05f64.powi(2))).exp()
    })?;
    let truth = GridFunction::from_fn(grid.clone(), |z| (2.0 * std::f64::consts::PI * z).sin())?;
    let r = k.apply(&truth)?;

    let svd = k.svd()?;
    println!("top singular values: {:?}", &svd.values()[..5]);

    let schemes = [
        Scheme::Tikhonov,
        Scheme::SpectralCutoff,
        Scheme::IteratedTikhonov { m: 3 },
        Scheme::Landweber {
            c: 0.9 / svd.values()[0].powi(2),
        },
    ];
    for alpha in [1e-2, 1e-3, 1e-4] {
        for scheme in schemes {
            let fit = regularize(&k, &r, &FilterSpec::new(scheme, alpha)?)?;
            println!(
                "alpha {alpha:e} {scheme:>22}: L2 error {:.2e}",
                fit.sub(&truth)?.l2_norm()
            );
        }
    }

    let direct = tikhonov_direct(&k, &r, 1e-3)?;
    let spectral = regularize(&k, &r, &FilterSpec::tikhonov(1e-3)?)?;
    println!("direct vs spectral Tikhonov: {:.1e}", direct.sub(&spectral)?.l2_norm());
    Ok(())
}
