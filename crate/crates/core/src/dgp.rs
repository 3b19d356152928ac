//! Monte Carlo design with a non-injective operator: a truncated bivariate
//! normal whose tensor trigonometric expansion keeps only the first `J₀`
//! functions of `z`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::grid::{make_grid, project_onto_span, trig_values_into, BasisSpec, Grid, GridFunction};
use crate::npiv::{build_operator, DensityEstimate, NpivSample};
use crate::spectral::DiscreteOperator;

/// Resolution of the internal quadrature for coefficients, mass and envelope.
const FINE_NODES: usize = 1000;
const ENVELOPE_FACTOR: f64 = 1.01;

/// Number of retained `z`-frequencies; `Infinite` keeps as many as the `w` side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum J0 {
    Finite(usize),
    Infinite,
}

impl fmt::Display for J0 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            J0::Finite(j) => write!(f, "{j}"),
            J0::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for J0 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(J0::Infinite),
            other => match other.parse::<usize>() {
                Ok(j) if j >= 1 => Ok(J0::Finite(j)),
                _ => Err(Error::Config(format!(
                    "j0 must be a positive integer or \"inf\", got {s:?}"
                ))),
            },
        }
    }
}

impl Serialize for J0 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            J0::Finite(j) => s.serialize_u64(*j as u64),
            J0::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for J0 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(j) if j >= 1 => Ok(J0::Finite(j as usize)),
            Repr::Int(j) => Err(serde::de::Error::custom(format!("j0 must be at least 1, got {j}"))),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Full parameterization of the design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpConfig {
    pub j0: J0,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_mean")]
    pub mean: [f64; 2],
    #[serde(default = "default_cov")]
    pub cov: [[f64; 2]; 2],
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    /// Subtract `∫₀¹ φ` from the outcome, making `E[Y] = 0` when `Z` is uniform.
    #[serde(default)]
    pub center_outcome: bool,
}

fn default_k_max() -> usize {
    25
}

fn default_mean() -> [f64; 2] {
    [0.5, 0.5]
}

fn default_cov() -> [[f64; 2]; 2] {
    [[0.05, 0.01], [0.01, 0.05]]
}

fn default_n() -> usize {
    1000
}

impl DgpConfig {
    pub fn new(j0: J0, n: usize, seed: u64) -> Self {
        Self {
            j0,
            k_max: default_k_max(),
            mean: default_mean(),
            cov: default_cov(),
            n,
            seed,
            center_outcome: false,
        }
    }

    /// `Z` uniform and independent of `W`, with a centered outcome.
    pub fn independence(n: usize, seed: u64) -> Self {
        Self {
            center_outcome: true,
            ..Self::new(J0::Finite(1), n, seed)
        }
    }

    /// Number of `z`-basis functions kept.
    pub fn j_count(&self) -> usize {
        match self.j0 {
            J0::Finite(j) => j,
            J0::Infinite => self.k_max,
        }
    }

    /// Checks the parameters and the aliasing guard `j0, k_max ≤ m/4`.
    pub fn validate(&self, m: usize) -> Result<()> {
        let c = self.cov;
        if c[0][1] != c[1][0] || !(c[0][0] > 0.0) || !(c[0][0] * c[1][1] - c[0][1] * c[1][0] > 0.0) {
            return invalid("covariance must be symmetric positive definite");
        }
        if self.k_max == 0 {
            return invalid("k_max must be positive");
        }
        if self.n == 0 {
            return invalid("sample size must be positive");
        }
        if 4 * self.j_count() > m || 4 * self.k_max > m {
            return invalid(format!(
                "basis truncation j0={}, k_max={} exceeds m/4 for m={m}",
                self.j0, self.k_max
            ));
        }
        Ok(())
    }
}

/// Bivariate normal restricted to the unit square and renormalized.
#[derive(Debug, Clone)]
pub struct TruncatedNormal {
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
    inv: [[f64; 2]; 2],
    peak: f64,
    mass: f64,
}

impl TruncatedNormal {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        if !(det > 0.0 && cov[0][0] > 0.0) || cov[0][1] != cov[1][0] {
            return invalid("covariance must be symmetric positive definite");
        }
        let inv = [[cov[1][1] / det, -cov[0][1] / det], [-cov[1][0] / det, cov[0][0] / det]];
        let peak = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
        let mut out = Self {
            mean,
            cov,
            inv,
            peak,
            mass: 1.0,
        };
        out.mass = out.unit_square_mass();
        Ok(out)
    }

    /// Mass of the untruncated normal on `[0,1]²`: the `z` integral of the
    /// marginal times the conditional probability of `w ∈ [0,1]`.
    fn unit_square_mass(&self) -> f64 {
        let [mz, mw] = self.mean;
        let vz = self.cov[0][0];
        let slope = self.cov[0][1] / vz;
        let sd = (self.cov[1][1] - self.cov[0][1] * slope).sqrt();
        let nodes = 20_000;
        let h = 1.0 / nodes as f64;
        (0..nodes)
            .map(|i| {
                let z = (i as f64 + 0.5) * h;
                let marginal = (-(z - mz).powi(2) / (2.0 * vz)).exp() / (2.0 * std::f64::consts::PI * vz).sqrt();
                let m = mw + slope * (z - mz);
                marginal * (normal_cdf((1.0 - m) / sd) - normal_cdf(-m / sd)) * h
            })
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn density(&self, z: f64, w: f64) -> f64 {
        if !((0.0..=1.0).contains(&z) && (0.0..=1.0).contains(&w)) {
            return 0.0;
        }
        let dz = z - self.mean[0];
        let dw = w - self.mean[1];
        let q = dz * dz * self.inv[0][0] + 2.0 * dz * dw * self.inv[0][1] + dw * dw * self.inv[1][1];
        self.peak * (-0.5 * q).exp() / self.mass
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Truncated normal density of the default design.
pub fn truncated_normal_density(z: f64, w: f64) -> f64 {
    thread_local! {
        static DEFAULT: TruncatedNormal =
            TruncatedNormal::new(default_mean(), default_cov()).expect("default covariance is valid");
    }
    DEFAULT.with(|d| d.density(z, w))
}

/// The density `C·max(0, Σ_{j≤J, k≤k_max} c_jk φⱼ(z)φₖ(w))`.
#[derive(Debug, Clone)]
pub struct NidDensity {
    // coefficients c_jk already multiplied by the normalizer C
    coefs: DMatrix<f64>,
    normalizer: f64,
    max_value: f64,
    clipped: bool,
}

impl NidDensity {
    pub fn new(config: &DgpConfig) -> Result<Self> {
        let normal = TruncatedNormal::new(config.mean, config.cov)?;
        let jn = config.j_count();
        let kn = config.k_max;
        let h = 1.0 / FINE_NODES as f64;
        let nodes: Vec<f64> = (0..FINE_NODES).map(|i| (i as f64 + 0.5) * h).collect();
        let basis = |count: usize| {
            let mut b = DMatrix::zeros(FINE_NODES, count);
            let mut buf = vec![0.0; count];
            for (i, &x) in nodes.iter().enumerate() {
                trig_values_into(x, &mut buf);
                for (j, v) in buf.iter().enumerate() {
                    b[(i, j)] = *v;
                }
            }
            b
        };
        let bz = basis(jn);
        let bw = basis(kn);
        let dens = DMatrix::from_fn(FINE_NODES, FINE_NODES, |a, b| normal.density(nodes[a], nodes[b]));
        let coefs = bz.tr_mul(&dens) * &bw * (h * h);
        let proj = &bz * &coefs * bw.transpose();
        let clipped = proj.iter().any(|&v| v < 0.0);
        let mass: f64 = proj.iter().map(|&v| v.max(0.0)).sum::<f64>() * h * h;
        if !(mass > 0.0) {
            return Err(Error::DegenerateDensity(format!("clipped projection has mass {mass}")));
        }
        let normalizer = 1.0 / mass;
        let max_value = proj.max().max(0.0) * normalizer;
        Ok(Self {
            coefs: coefs * normalizer,
            normalizer,
            max_value,
            clipped,
        })
    }

    /// `C` as applied after clipping.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Whether the projection went negative somewhere on the fine grid.
    pub fn clipped(&self) -> bool {
        self.clipped
    }

    /// Largest value on the internal fine grid.
    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    /// Normalized coefficients, `z`-index by row.
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefs
    }

    pub fn eval(&self, z: f64, w: f64) -> f64 {
        let mut bz = vec![0.0; self.coefs.nrows()];
        let mut bw = vec![0.0; self.coefs.ncols()];
        self.eval_with(z, w, &mut bz, &mut bw)
    }

    fn eval_with(&self, z: f64, w: f64, bz: &mut [f64], bw: &mut [f64]) -> f64 {
        trig_values_into(z, bz);
        trig_values_into(w, bw);
        let mut total = 0.0;
        for (k, &b) in bw.iter().enumerate() {
            let col = self.coefs.column(k);
            let inner: f64 = col.iter().zip(bz.iter()).map(|(c, a)| c * a).sum();
            total += inner * b;
        }
        total.max(0.0)
    }

    pub fn on_grid(&self, grid: &Arc<Grid>) -> Result<DensityEstimate> {
        let mut bz = vec![0.0; self.coefs.nrows()];
        let mut bw = vec![0.0; self.coefs.ncols()];
        let p = grid.points();
        let values = DMatrix::from_fn(grid.len(), grid.len(), |a, b| {
            self.eval_with(p[a], p[b], &mut bz, &mut bw)
        });
        DensityEstimate::new(values, grid.clone(), grid.clone())
    }
}

/// Projection of the truncated normal density onto the retained tensor basis,
/// clipped at zero and renormalized, on the product grid.
pub fn build_nid_density(config: &DgpConfig, grid: &Arc<Grid>) -> Result<DensityEstimate> {
    config.validate(grid.len())?;
    NidDensity::new(config)?.on_grid(grid)
}

const PHI_COEFS: [f64; 11] = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 0.0];

/// `φ(z) = z¹⁰ − z⁹ + z⁸ − z⁷ + z⁶ − z⁵ + z⁴ + z³ − z² − z`.
pub fn true_phi(z: f64) -> f64 {
    PHI_COEFS.iter().fold(0.0, |acc, c| acc * z + c)
}

/// `∫₀¹ φ`.
pub fn phi_mean() -> f64 {
    PHI_COEFS.iter().enumerate().map(|(i, c)| c / (11 - i) as f64).sum()
}

/// The structural function of `config` (centered when the outcome is).
pub fn structural_function(config: &DgpConfig, grid: &Arc<Grid>) -> GridFunction {
    let shift = if config.center_outcome { phi_mean() } else { 0.0 };
    GridFunction::from_fn(grid.clone(), |z| true_phi(z) - shift).expect("polynomial is finite")
}

/// `φ₁`: projection of the structural function onto the first `J₀` basis
/// functions, or the function itself for `J₀ = ∞`.
pub fn best_approx(config: &DgpConfig, grid: &Arc<Grid>) -> Result<GridFunction> {
    let phi = structural_function(config, grid);
    match config.j0 {
        J0::Infinite => Ok(phi),
        J0::Finite(j) => {
            let basis = BasisSpec::trigonometric(j)?;
            let indices: Vec<usize> = (1..=j).collect();
            project_onto_span(&phi, &basis, &indices)
        }
    }
}

/// Prepared sampler for one configuration.
#[derive(Debug, Clone)]
pub struct Dgp {
    config: DgpConfig,
    density: NidDensity,
    envelope: f64,
}

/// Draws plus the number of proposals the rejection sampler used.
#[derive(Debug, Clone)]
pub struct SampleDraw {
    pub sample: NpivSample,
    pub proposals: u64,
}

impl Dgp {
    pub fn new(config: DgpConfig) -> Result<Self> {
        let density = NidDensity::new(&config)?;
        let envelope = ENVELOPE_FACTOR * density.max_value();
        Ok(Self {
            config,
            density,
            envelope,
        })
    }

    pub fn config(&self) -> &DgpConfig {
        &self.config
    }

    pub fn density(&self) -> &NidDensity {
        &self.density
    }

    /// Height of the uniform rejection envelope on `[0,1]²`.
    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<NpivSample> {
        Ok(self.sample_with_stats(n, seed)?.sample)
    }

    pub fn sample_with_stats(&self, n: usize, seed: u64) -> Result<SampleDraw> {
        if n == 0 {
            return invalid("sample size must be positive");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = if self.config.center_outcome { phi_mean() } else { 0.0 };
        let mut bz = vec![0.0; self.density.coefs.nrows()];
        let mut bw = vec![0.0; self.density.coefs.ncols()];
        let (mut y, mut z, mut w) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut proposals = 0u64;
        while z.len() < n {
            proposals += 1;
            let zc: f64 = rng.random();
            let wc: f64 = rng.random();
            let u: f64 = rng.random();
            let f = self.density.eval_with(zc, wc, &mut bz, &mut bw);
            if f > self.envelope {
                return Err(Error::EnvelopeViolation {
                    density: f,
                    envelope: self.envelope,
                });
            }
            if u * self.envelope < f {
                let eps: f64 = rng.sample(StandardNormal);
                y.push(true_phi(zc) - shift + eps * zc);
                z.push(zc);
                w.push(wc);
            }
        }
        Ok(SampleDraw {
            sample: NpivSample::new(y, z, w)?,
            proposals,
        })
    }

    /// Integral operator with the design density as kernel, on `grid`.
    pub fn exact_operator(&self, grid: &Arc<Grid>) -> Result<DiscreteOperator> {
        build_operator(&self.density.on_grid(grid)?)
    }
}

/// `config.n` draws with `config.seed`.
pub fn sample(config: &DgpConfig) -> Result<NpivSample> {
    Dgp::new(config.clone())?.sample(config.n, config.seed)
}

/// Default evaluation grid for the design.
pub fn default_grid() -> Arc<Grid> {
    make_grid(100).expect("100 nodes is a valid grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::trig_basis;
    use approx::assert_abs_diff_eq;

    /// Brute-force 2-d midpoint integral of the untruncated normal pdf.
    fn brute_mass(nodes: usize) -> f64 {
        let h = 1.0 / nodes as f64;
        let det: f64 = 0.05 * 0.05 - 0.01 * 0.01;
        let mut total = 0.0;
        for a in 0..nodes {
            for b in 0..nodes {
                let z = (a as f64 + 0.5) * h - 0.5;
                let w = (b as f64 + 0.5) * h - 0.5;
                let q = (0.05 * z * z - 2.0 * 0.01 * z * w + 0.05 * w * w) / det;
                total += (-0.5 * q).exp();
            }
        }
        total * h * h / (2.0 * std::f64::consts::PI * det.sqrt())
    }

    #[test]
    fn normal_density_values() {
        let mass = brute_mass(2000);
        let peak = 1.0 / (2.0 * std::f64::consts::PI * 0.0024f64.sqrt());
        assert_abs_diff_eq!(peak, 3.2487, epsilon = 1e-4);
        assert_abs_diff_eq!(truncated_normal_density(0.5, 0.5), peak / mass, epsilon = 1e-6);
        assert_abs_diff_eq!(
            truncated_normal_density(0.2, 0.7),
            truncated_normal_density(0.7, 0.2),
            epsilon = 1e-14
        );
        assert_eq!(truncated_normal_density(1.2, 0.5), 0.0);
        let h = 1.0 / 1000.0;
        let mut total = 0.0;
        for a in 0..1000 {
            for b in 0..1000 {
                total += truncated_normal_density((a as f64 + 0.5) * h, (b as f64 + 0.5) * h);
            }
        }
        assert_abs_diff_eq!(total * h * h, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn polynomial_values() {
        assert_eq!(true_phi(0.0), 0.0);
        assert_abs_diff_eq!(true_phi(1.0), 0.0, epsilon = 1e-15);
        // exact rational: Σ cᵢ 2^{10-i} / 1024
        let num: i64 = [1, -1, 1, -1, 1, -1, 1, 1, -1, -1, 0]
            .iter()
            .enumerate()
            .map(|(i, c)| c * (1i64 << i))
            .sum();
        assert_eq!(num, -597);
        assert_eq!(true_phi(0.5), num as f64 / 1024.0);
        let exact = 1.0 / 11.0 - 1.0 / 10.0 + 1.0 / 9.0 - 1.0 / 8.0 + 1.0 / 7.0 - 1.0 / 6.0 + 1.0 / 5.0 + 1.0 / 4.0
            - 1.0 / 3.0
            - 1.0 / 2.0;
        assert_abs_diff_eq!(phi_mean(), exact, epsilon = 1e-15);
    }

    #[test]
    fn j0_parsing() {
        assert_eq!("inf".parse::<J0>().unwrap(), J0::Infinite);
        assert_eq!("2".parse::<J0>().unwrap(), J0::Finite(2));
        assert!("0".parse::<J0>().is_err());
        let c: DgpConfig = serde_json::from_str(r#"{"j0":"inf","n":10}"#).unwrap();
        assert_eq!(c.j0, J0::Infinite);
        assert_eq!(c.k_max, 25);
        assert!(serde_json::from_str::<DgpConfig>(r#"{"j0":1,"bogus":1}"#).is_err());
        assert!(serde_json::from_str::<DgpConfig>(r#"{"j0":0}"#).is_err());
    }

    #[test]
    fn aliasing_guard() {
        let c = DgpConfig::new(J0::Infinite, 10, 0);
        assert!(c.validate(100).is_ok());
        assert!(c.validate(96).is_err());
        let mut bad = DgpConfig::new(J0::Finite(2), 10, 0);
        bad.cov = [[0.05, 0.06], [0.06, 0.05]];
        assert!(bad.validate(100).is_err());
    }

    #[test]
    fn nid_density_structure() {
        let grid = default_grid();
        let one = build_nid_density(&DgpConfig::new(J0::Finite(1), 10, 0), &grid).unwrap();
        for b in 0..grid.len() {
            let col = one.values().column(b);
            assert!(col.max() - col.min() < 1e-12);
        }
        assert_abs_diff_eq!(one.mass(), 1.0, epsilon = 1e-8);

        let full = build_nid_density(&DgpConfig::new(J0::Infinite, 10, 0), &grid).unwrap();
        let mut resid = 0.0;
        let mut norm = 0.0;
        let p = grid.points();
        for a in 0..grid.len() {
            for b in 0..grid.len() {
                let t = truncated_normal_density(p[a], p[b]);
                resid += (full.values()[(a, b)] - t).powi(2);
                norm += t * t;
            }
        }
        assert!((resid / norm).sqrt() < 0.05);
    }

    #[test]
    fn finite_truncation_annihilates_excluded_frequencies() {
        let grid = default_grid();
        for j0 in [1, 2] {
            let dgp = Dgp::new(DgpConfig::new(J0::Finite(j0), 10, 0)).unwrap();
            assert!(!dgp.density().clipped());
            let k = dgp.exact_operator(&grid).unwrap();
            for j in (j0 + 1)..=25 {
                assert!(k.apply(&trig_basis(j, &grid).unwrap()).unwrap().l2_norm() < 1e-6);
            }
            assert!(k.apply(&trig_basis(j0, &grid).unwrap()).unwrap().l2_norm() > 1e-3);
        }
    }

    #[test]
    fn w_marginal_is_projection_of_normal_marginal() {
        let grid = default_grid();
        let d = build_nid_density(&DgpConfig::new(J0::Finite(2), 10, 0), &grid).unwrap();
        let marg = d.w_marginal();
        // f_W on the grid by 1-d integration of the truncated normal
        let fine = 4000;
        let fw = GridFunction::from_fn(grid.clone(), |w| {
            (0..fine)
                .map(|i| truncated_normal_density((i as f64 + 0.5) / fine as f64, w))
                .sum::<f64>()
                / fine as f64
        })
        .unwrap();
        let basis = BasisSpec::trigonometric(25).unwrap();
        let proj = project_onto_span(&fw, &basis, &(1..=25).collect::<Vec<_>>()).unwrap();
        assert!(marg.sub(&proj).unwrap().sup_norm() < 1e-3 * proj.sup_norm());
    }

    #[test]
    fn best_approx_cases() {
        let grid = default_grid();
        let inf = best_approx(&DgpConfig::new(J0::Infinite, 10, 0), &grid).unwrap();
        assert_eq!(
            inf.values(),
            structural_function(&DgpConfig::new(J0::Infinite, 10, 0), &grid).values()
        );
        let one = best_approx(&DgpConfig::new(J0::Finite(1), 10, 0), &grid).unwrap();
        let mean = grid.integrate(true_phi);
        assert!(one.values().iter().all(|v| (v - mean).abs() < 1e-12));
        let two = best_approx(&DgpConfig::new(J0::Finite(2), 10, 0), &grid).unwrap();
        let c2 = grid.integrate(|z| true_phi(z) * 2f64.sqrt() * (2.0 * std::f64::consts::PI * z).cos());
        for (v, &z) in two.values().iter().zip(grid.points()) {
            assert_abs_diff_eq!(
                *v,
                mean + c2 * 2f64.sqrt() * (2.0 * std::f64::consts::PI * z).cos(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn sampling_is_deterministic_and_heteroskedastic() {
        let cfg = DgpConfig::new(J0::Infinite, 2000, 5);
        let a = sample(&cfg).unwrap();
        let b = sample(&cfg).unwrap();
        assert_eq!(a.y(), b.y());
        assert_eq!(a.z(), b.z());
        let c = sample(&DgpConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a.z(), c.z());
    }
}
