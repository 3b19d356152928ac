//! Rejection sampling from the truncated design density and the null space
//! of the population operator.

use spectral_iv::dgp::{Dgp, DgpConfig, J0};
use spectral_iv::grid::{make_grid, trig_basis};
use spectral_iv::inference::stats::mean;

fn main() -> spectral_iv::Result<()> {
    let grid = make_grid(100)?;
    for j0 in [J0::Finite(1), J0::Finite(2), J0::Infinite] {
        let dgp = Dgp::new(DgpConfig::new(j0, 0, 0))?;
        let draw = dgp.sample_with_stats(20_000, 1)?;
        let k = dgp.exact_operator(&grid)?;
        let leak: Vec<String> = (1..=6)
            .map(|j| Ok(format!("{:.1e}", k.apply(&trig_basis(j, &grid)?)?.l2_norm())))
            .collect::<spectral_iv::Result<_>>()?;
        println!(
            "J0 = {j0}: clipped {}, acceptance {:.3}, mean Z {:.4}, |K e_j| for j=1..6: {}",
            dgp.density().clipped(),
            draw.sample.len() as f64 / draw.proposals as f64,
            mean(draw.sample.z()),
            leak.join(" ")
        );
    }
    Ok(())
}
