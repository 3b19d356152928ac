//! Normal-approximation interval for a linear functional of the FLIR fit,
//! with its empirical coverage over a few hundred draws.

use spectral_iv::flir::FlirDesign;
use spectral_iv::grid::{make_grid, trig_basis};
use spectral_iv::inference::functional_ci;
use spectral_iv::spectral::FilterSpec;

fn main() -> spectral_iv::Result<()> {
    let grid = make_grid(100)?;
    let design = FlirDesign::strong(grid.clone());
    let mu = trig_basis(1, &grid)?;
    let target = design.best_approx()?.inner(&mu)?;
    let spec = FilterSpec::tikhonov(1e-3)?;

    let ci = functional_ci(&design.sample(2000, 0)?, &mu, &spec, 0.05)?;
    println!(
        "estimate {:.4}, interval [{:.4}, {:.4}], target {target:.4}",
        ci.estimate,
        ci.lo(),
        ci.hi()
    );

    let reps = 200;
    let mut hits = 0;
    for seed in 1..=reps {
        if functional_ci(&design.sample(2000, seed)?, &mu, &spec, 0.05)?.contains(target) {
            hits += 1;
        }
    }
    println!("coverage over {reps} draws: {:.3}", hits as f64 / reps as f64);
    Ok(())
}
