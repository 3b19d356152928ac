//! Terms of the finite-sample risk bound over an alpha grid next to the
//! Monte Carlo risk.

use spectral_iv::bench::{eval_bound, BenchConfig, RunOptions};

fn main() -> spectral_iv::Result<()> {
    let cfg = BenchConfig::from_json(r#"{"bound": {"n": 1000, "alpha_points": 13}}"#)?;
    let out = std::env::temp_dir().join("spectral_iv_bound");
    let opts = RunOptions {
        seed: 1,
        reps: Some(20),
        full: false,
        threads: None,
        out,
    };
    let report = eval_bound(&cfg.bound, &opts)?;
    println!(
        "delta {:.3e} rho1 {:.3e} rho2 {:.3e} C_F {:.3}",
        report.delta, report.rho1, report.rho2, report.c_f
    );
    println!("{:>10} {:>10} {:>10} {:>10}", "alpha", "bias", "bound", "risk");
    for row in &report.rows {
        println!(
            "{:>10.2e} {:>10.3e} {:>10.3e} {:>10.3e}",
            row.alpha, row.bias, row.bound, row.risk
        );
    }
    println!(
        "argmin bound {:.2e}, argmin risk {:.2e}",
        report.alpha_bound_min, report.alpha_risk_min
    );
    Ok(())
}
