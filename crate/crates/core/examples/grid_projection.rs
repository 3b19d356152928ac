//! Fourier coefficients and truncated projections on the midpoint grid.

use spectral_iv::dgp::true_phi;
use spectral_iv::grid::{basis_coefficients, make_grid, project_onto_span, BasisSpec, GridFunction};

fn main() -> spectral_iv::Result<()> {
    let grid = make_grid(200)?;
    let phi = GridFunction::from_fn(grid.clone(), true_phi)?;
    let basis = BasisSpec::trigonometric(9)?;

    for (j, c) in basis_coefficients(&phi, &basis).iter().enumerate() {
        println!("<phi, e_{}> = {c:+.5}", j + 1);
    }

    for j0 in [1, 3, 9] {
        let indices: Vec<usize> = (1..=j0).collect();
        let p = project_onto_span(&phi, &basis, &indices)?;
        let rest = phi.sub(&p)?;
        println!(
            "J0 = {j0}: |P phi| = {:.5}, |phi - P phi| = {:.5}",
            p.l2_norm(),
            rest.l2_norm()
        );
    }
    Ok(())
}
