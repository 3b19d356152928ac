//! Degenerate limit under an instrument independent of the regressor: the
//! scaled statistic against its chi-square mixture.

use spectral_iv::dgp::DgpConfig;
use spectral_iv::grid::{make_grid, trig_basis};
use spectral_iv::inference::stats::{mean, variance};
use spectral_iv::inference::{degenerate_limit_check, AlphaRule, LimitOptions};
use spectral_iv::npiv::KernelSpec;

fn main() -> spectral_iv::Result<()> {
    let grid = make_grid(100)?;
    let mu0 = trig_basis(3, &grid)?;
    let kspec = KernelSpec::gaussian(0.15, 0.1)?;
    let n = 1000;
    let report = degenerate_limit_check(
        &DgpConfig::independence(n, 0),
        &mu0,
        &kspec,
        AlphaRule::default(),
        n,
        200,
        &LimitOptions::default(),
    )?;
    println!("alpha {:.4}, mixture terms kept {}", report.alpha, report.retained);
    println!(
        "leading weights {:?}",
        &report.mixture.eigenvalues()[..report.retained.min(4)]
    );
    println!(
        "statistic mean {:.4} var {:.4}; mixture mean {:.4} var {:.4}",
        mean(&report.statistics),
        variance(&report.statistics),
        report.mixture.mean(),
        report.mixture.variance()
    );
    println!("KS distance {:.4}", report.ks);
    Ok(())
}
