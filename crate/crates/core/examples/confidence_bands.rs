//! Uniform confidence bands for FLIR and NPIV fits.

use spectral_iv::dgp::{best_approx, Dgp, DgpConfig, J0};
use spectral_iv::flir::{flir_fit, FlirDesign};
use spectral_iv::grid::make_grid;
use spectral_iv::inference::{flir_band_basis, npiv_band_basis, BandOptions};
use spectral_iv::npiv::{npiv_fit, KernelSpec};
use spectral_iv::spectral::FilterSpec;

fn main() -> spectral_iv::Result<()> {
    let grid = make_grid(100)?;
    let opts = BandOptions::default();

    let design = FlirDesign::new(J0::Finite(2), grid.clone());
    let sample = design.sample(1000, 5)?;
    let alpha = 0.01;
    let fit = flir_fit(&sample, &FilterSpec::tikhonov(alpha)?)?;
    let basis = flir_band_basis(&sample, &fit, alpha, &opts)?;
    let target = design.best_approx()?;
    for c_const in [0.0, 0.1] {
        let band = basis.band(0.05, c_const)?;
        println!(
            "FLIR c={c_const}: half width {:.3}, covers phi1: {}",
            band.half_width,
            band.contains(&target)?
        );
    }

    let config = DgpConfig::new(J0::Finite(2), 1000, 5);
    let sample = Dgp::new(config.clone())?.sample(config.n, config.seed)?;
    let kspec = KernelSpec::gaussian(0.15, 0.1)?;
    let alpha = 0.003;
    let fit = npiv_fit(&sample, &kspec, &FilterSpec::tikhonov(alpha)?, &grid)?;
    let band = npiv_band_basis(&sample, &fit, &kspec, alpha, &opts)?.band(0.05, 0.0)?;
    println!(
        "NPIV: critical value {:.3}, half width {:.3}, covers phi1: {}",
        band.critical_value,
        band.half_width,
        band.contains(&best_approx(&config, &grid)?)?
    );
    Ok(())
}
