//! A reduced error table and figure panels, written to a temporary folder.

use spectral_iv::bench::{run_figure, run_mc, BenchConfig, RunOptions};

fn main() -> spectral_iv::Result<()> {
    let cfg = BenchConfig::from_json(r#"{"mc": {"n": [1000]}, "figure": {"j0": [2], "n": [1000]}}"#)?;
    let out = std::env::temp_dir().join("spectral_iv_mc");
    let opts = RunOptions {
        seed: 0,
        reps: Some(25),
        full: false,
        threads: None,
        out: out.clone(),
    };
    for row in run_mc(&cfg.mc, &opts)?.rows() {
        println!(
            "J0 {:>3} n {}: L2 {:.4} L2^2 {:.4} sup {:.4}",
            row.j0.to_string(),
            row.n,
            row.l2_mean,
            row.l2sq_mean,
            row.sup_mean
        );
    }
    run_figure(&cfg.figure, &opts)?;
    println!("figure files in {}", out.display());
    Ok(())
}
