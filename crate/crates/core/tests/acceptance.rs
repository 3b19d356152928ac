//! End-to-end acceptance criteria. Every test prints one PASS/FAIL line and
//! asserts at the stated tolerance.

use std::process::Command;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use spectral_iv::bench::{run_coverage, run_limit_check, run_mc, BenchConfig, RunOptions};
use spectral_iv::dgp::{best_approx, Dgp, DgpConfig, J0};
use spectral_iv::flir::FlirDesign;
use spectral_iv::grid::{make_grid, trig_basis, GridFunction};
use spectral_iv::inference::functional_ci;
use spectral_iv::inference::stats::{ks_normal, mean, median, variance};
use spectral_iv::npiv::{npiv_fit, KernelSpec};
use spectral_iv::spectral::{
    filter_value, qualification, regularize, tikhonov_direct, DiscreteOperator, FilterSpec, Scheme,
};

fn verdict(criterion: u32, pass: bool, detail: String) {
    println!("{} criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion}: {detail}");
}

fn options(dir: &std::path::Path, seed: u64, reps: usize) -> RunOptions {
    RunOptions {
        seed,
        reps: Some(reps),
        full: false,
        threads: None,
        out: dir.to_path_buf(),
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target
}

#[test]
fn criterion_1_error_table() {
    // (j0, n) -> (L2 column, L∞ column)
    let table = [
        (J0::Finite(1), 1000, 0.0337, 0.3428),
        (J0::Finite(2), 1000, 0.0225, 0.2935),
        (J0::Infinite, 1000, 0.0214, 0.2923),
        (J0::Finite(1), 5000, 0.0249, 0.2560),
        (J0::Finite(2), 5000, 0.0078, 0.2374),
        (J0::Infinite, 5000, 0.0076, 0.2376),
    ];
    let dir = tempfile::tempdir().unwrap();
    let result = run_mc(&BenchConfig::default().mc, &options(dir.path(), 0, 500)).unwrap();
    let cell = |j0: J0, n: usize| result.rows().into_iter().find(|r| r.j0 == j0 && r.n == n).unwrap();
    let mut squared = true;
    let mut plain = true;
    let mut cells = Vec::new();
    for &(j0, n, l2, sup) in &table {
        let row = cell(j0, n);
        let sup_ok = within(row.sup_mean, sup, 0.3);
        squared &= within(row.l2sq_mean, l2, 0.3) && sup_ok;
        plain &= within(row.l2_mean, l2, 0.3) && sup_ok;
        cells.push(format!("{j0}/{n}: sq {:.4} sup {:.4}", row.l2sq_mean, row.sup_mean));
    }
    let mut ordering = true;
    for n in [1000, 5000] {
        let (a, b, c) = (cell(J0::Finite(1), n), cell(J0::Finite(2), n), cell(J0::Infinite, n));
        ordering &= a.l2sq_mean > b.l2sq_mean && a.l2sq_mean > c.l2sq_mean;
        ordering &= (b.l2sq_mean - c.l2sq_mean).abs() <= 0.15 * c.l2sq_mean;
    }
    for j0 in [J0::Finite(1), J0::Finite(2), J0::Infinite] {
        let (small, large) = (cell(j0, 1000), cell(j0, 5000));
        ordering &=
            large.l2_mean < small.l2_mean && large.l2sq_mean < small.l2sq_mean && large.sup_mean < small.sup_mean;
    }
    let interpretation = if squared {
        "squared"
    } else if plain {
        "unsquared"
    } else {
        "neither"
    };
    verdict(
        1,
        (squared || plain) && ordering,
        format!(
            "interpretation {interpretation}, ordering {ordering}; {}",
            cells.join("; ")
        ),
    );
}

#[test]
fn criterion_2_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_fit: f64 = 0.0;
    let mut worst_rec: f64 = 0.0;
    for _ in 0..50 {
        let m_in = rng.random_range(10..=100);
        let m_out = rng.random_range(10..=100);
        let kernel = DMatrix::from_fn(m_out, m_in, |_, _| rng.random_range(-1.0..1.0));
        let k = DiscreteOperator::new(kernel.clone(), make_grid(m_in).unwrap(), make_grid(m_out).unwrap()).unwrap();
        let r = GridFunction::new(
            k.range().clone(),
            (0..m_out).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let alpha = 10f64.powf(rng.random_range(-2.0..0.0));
        let a = regularize(&k, &r, &FilterSpec::tikhonov(alpha).unwrap()).unwrap();
        let b = tikhonov_direct(&k, &r, alpha).unwrap();
        worst_fit = worst_fit.max(a.sub(&b).unwrap().l2_norm());
        // kernel = Σ sⱼ ψⱼ(x) φⱼ(z)
        let svd = k.svd().unwrap();
        let mut rebuilt = DMatrix::zeros(m_out, m_in);
        for j in 0..svd.len() {
            let psi = DMatrix::from_column_slice(m_out, 1, svd.left_function(j).values());
            let phi = DMatrix::from_row_slice(1, m_in, svd.right_function(j).values());
            rebuilt += psi * phi * svd.values()[j];
        }
        worst_rec = worst_rec.max((rebuilt - kernel).amax());
    }
    verdict(
        2,
        worst_fit <= 1e-10 && worst_rec <= 1e-8,
        format!("max L2 gap {worst_fit:.2e}, max reconstruction error {worst_rec:.2e}"),
    );
}

#[test]
fn criterion_3_filter_inequalities() {
    let schemes = [
        Scheme::Tikhonov,
        Scheme::SpectralCutoff,
        Scheme::IteratedTikhonov { m: 3 },
        Scheme::Landweber { c: 0.9 },
    ];
    let lambda_max = 1.0;
    let points = 10_000;
    let lambdas: Vec<f64> = (0..points)
        .map(|i| lambda_max * i as f64 / (points - 1) as f64)
        .collect();
    let mut failures = Vec::new();
    for scheme in schemes {
        let q = qualification(scheme);
        for alpha in [1e-1, 1e-2, 1e-3] {
            let spec = FilterSpec::new(scheme, alpha).unwrap();
            let g: Vec<f64> = lambdas.iter().map(|&l| filter_value(&spec, l)).collect();
            let s1 = lambdas
                .iter()
                .zip(&g)
                .map(|(l, g)| (g * l.sqrt()).abs())
                .fold(0.0, f64::max);
            if s1 > q.c1 / alpha.sqrt() * (1.0 + 1e-12) {
                failures.push(format!("{scheme} a={alpha} (i) {s1:.4}"));
            }
            for beta in [0.5, 1.0, 1.5, 2.0, 3.0] {
                if q.beta0.is_some_and(|b0| beta > b0) {
                    continue;
                }
                let s2 = lambdas
                    .iter()
                    .zip(&g)
                    .map(|(l, g)| ((g * l - 1.0) * l.powf(beta / 2.0)).abs())
                    .fold(0.0, f64::max);
                if s2 > q.c2 * alpha.powf(beta / 2.0) * (1.0 + 1e-12) {
                    failures.push(format!("{scheme} a={alpha} b={beta} (ii) {s2:.4e}"));
                }
                let s3 = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
                if s3 > q.c3.at(beta) / alpha * (1.0 + 1e-12) {
                    failures.push(format!("{scheme} a={alpha} b={beta} (iii) {s3:.4e}"));
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        "all bounds hold".to_string()
    } else {
        failures.join("; ")
    };
    verdict(3, failures.is_empty(), detail);
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

#[test]
fn criterion_4_fractional_power_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = 40;
    let g = make_grid(m).unwrap();
    // rank 8 so that zero singular values are present
    let a = DMatrix::from_fn(m, 8, |_, _| rng.random_range(-1.0..1.0));
    let b = DMatrix::from_fn(8, m, |_, _| rng.random_range(-1.0..1.0));
    let k = DiscreteOperator::new(&a * &b * (m as f64 / 8.0), g.clone(), g.clone()).unwrap();
    let e = DiscreteOperator::new(DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0)), g.clone(), g).unwrap();
    let e = e.scale(1.0 / e.norm());
    let eps = [1e-1, 1e-2, 1e-3, 1e-4];
    let log_eps: Vec<f64> = eps.iter().map(|v: &f64| v.ln()).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for beta in [0.5, 1.5, 3.0] {
        let base = k.gram_power(beta).unwrap();
        let logs: Vec<f64> = eps
            .iter()
            .map(|&s| {
                k.sub(&e.scale(-s))
                    .unwrap()
                    .gram_power(beta)
                    .unwrap()
                    .sub(&base)
                    .unwrap()
                    .norm()
                    .ln()
            })
            .collect();
        let got = slope(&log_eps, &logs);
        let want = beta.min(1.0);
        pass &= (got - want).abs() <= 0.15;
        parts.push(format!("beta {beta}: slope {got:.3} (target {want})"));
    }
    verdict(4, pass, parts.join("; "));
}

#[test]
fn criterion_5_null_space_convergence() {
    let g = make_grid(100).unwrap();
    let n = 5000;
    let reps = 200u64;
    let config = DgpConfig::new(J0::Finite(2), n, 0);
    let dgp = Dgp::new(config.clone()).unwrap();
    let phi1 = best_approx(&config, &g).unwrap();
    let basis: Vec<GridFunction> = (1..=8).map(|j| trig_basis(j, &g).unwrap()).collect();
    let kspec = KernelSpec::gaussian(0.15, 0.1).unwrap();
    let spec = FilterSpec::tikhonov(0.003).unwrap();
    let runs: Vec<(Vec<f64>, f64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let fit = npiv_fit(&dgp.sample(n, 5_000 + r).unwrap(), &kspec, &spec, &g).unwrap();
            let coefs = basis.iter().map(|b| fit.inner(b).unwrap()).collect();
            (coefs, fit.sub(&phi1).unwrap().l2_norm())
        })
        .collect();
    let total = mean(&runs.iter().map(|(_, e)| *e).collect::<Vec<_>>());
    let column = |j: usize| runs.iter().map(|(c, _)| c[j]).collect::<Vec<f64>>();
    let mut pass = true;
    let mut parts = Vec::new();
    for j in 3..=8 {
        let m = mean(&column(j - 1).iter().map(|v| v.abs()).collect::<Vec<_>>());
        pass &= m < 0.25 * total;
        parts.push(format!("|c{j}| {m:.4}"));
    }
    for j in 1..=2 {
        let c = column(j - 1);
        let truth = phi1.inner(&basis[j - 1]).unwrap();
        let se = (variance(&c) / reps as f64).sqrt();
        pass &= (mean(&c) - truth).abs() <= 3.0 * se;
        parts.push(format!("c{j} {:.4} vs {truth:.4} (se {se:.4})", mean(&c)));
    }
    verdict(5, pass, format!("mean error {total:.4}; {}", parts.join("; ")));
}

#[test]
fn criterion_6_degenerate_limit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BenchConfig::from_json(r#"{"limit": {"n": [500, 2000], "seeds": 5, "zero_row": false}}"#).unwrap();
    let rows = run_limit_check(&cfg.limit, &options(dir.path(), 0, 500)).unwrap();
    let ks = |n: usize| rows.iter().filter(|r| r.n == n).map(|r| r.ks).collect::<Vec<f64>>();
    let (small, large) = (ks(500), ks(2000));
    let first = large[0];
    let pass = first < 0.1 && median(&large) < median(&small);
    verdict(
        6,
        pass,
        format!(
            "KS at n=2000 {first:.4}; median KS n=500 {:.4}, n=2000 {:.4}",
            median(&small),
            median(&large)
        ),
    );
}

#[test]
fn criterion_7_band_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        BenchConfig::from_json(r#"{"coverage": {"c_const": [0.0], "gamma": [0.05], "n": [1000, 4000]}}"#).unwrap();
    let rows = run_coverage(&cfg.coverage, &options(dir.path(), 0, 300)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for small in rows.iter().filter(|r| r.n == 1000) {
        let large = rows
            .iter()
            .find(|r| r.n == 4000 && r.model == small.model && r.j0 == small.j0)
            .unwrap();
        pass &= small.coverage >= 0.88 && large.mean_half_width < small.mean_half_width;
        parts.push(format!(
            "{} J0={} cov {:.3} width {:.3}->{:.3}",
            small.model, small.j0, small.coverage, small.mean_half_width, large.mean_half_width
        ));
    }
    verdict(7, pass, parts.join("; "));
}

#[test]
fn criterion_8_functional_clt() {
    let g = make_grid(100).unwrap();
    let design = FlirDesign::strong(g.clone());
    let mu = trig_basis(1, &g).unwrap();
    let target = design.best_approx().unwrap().inner(&mu).unwrap();
    let spec = FilterSpec::tikhonov(0.001).unwrap();
    let stats: Vec<f64> = (0..500u64)
        .into_par_iter()
        .map(|r| {
            let ci = functional_ci(&design.sample(2000, r).unwrap(), &mu, &spec, 0.05).unwrap();
            ci.pi_n * (ci.estimate - target)
        })
        .collect();
    let ks = ks_normal(&stats);
    verdict(
        8,
        ks < 0.08,
        format!("KS {ks:.4}, mean {:.3}, variance {:.3}", mean(&stats), variance(&stats)),
    );
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| -> String {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_bench"))
            .args(["mc", "--seed", "7", "--reps", "20", "--threads", threads, "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read_to_string(out.join("mc.csv")).unwrap()
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "3");
    let numbers = |s: &str| -> Vec<f64> {
        s.lines()
            .skip(1)
            .flat_map(|l| l.split(',').filter_map(|f| f.parse::<f64>().ok()).collect::<Vec<_>>())
            .collect()
    };
    let gap = numbers(&a)
        .iter()
        .zip(numbers(&c))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let same_shape = numbers(&a).len() == numbers(&c).len();
    verdict(
        9,
        a == b && same_shape && gap <= 1e-12,
        format!("identical bytes {}, max gap across thread counts {gap:.1e}", a == b),
    );
}
