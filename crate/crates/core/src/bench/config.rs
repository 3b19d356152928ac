use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dgp::J0;
use crate::error::{Error, Result};
use crate::inference::AlphaRule;
use crate::npiv::{KernelKind, KernelSpec};
use crate::spectral::{FilterSpec, Scheme};

pub const DEFAULT_REPS: usize = 500;
pub const FULL_REPS: usize = 5000;

/// One JSON document with an optional section per subcommand.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub mc: McConfig,
    pub figure: McConfig,
    pub coverage: CoverageConfig,
    pub limit: LimitConfig,
    pub bound: BoundConfig,
    pub filters: FiltersConfig,
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

fn default_j0s() -> Vec<J0> {
    vec![J0::Finite(1), J0::Finite(2), J0::Infinite]
}

/// Design of the NPIV Monte Carlo and the figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub j0: Vec<J0>,
    pub n: Vec<usize>,
    pub h_z: f64,
    pub h_w: f64,
    pub kernel: KernelKind,
    pub alpha: f64,
    pub scheme: Scheme,
    pub m: usize,
    pub reps: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            j0: default_j0s(),
            n: vec![1000, 5000],
            h_z: 0.15,
            h_w: 0.1,
            kernel: KernelKind::Gaussian,
            alpha: 0.003,
            scheme: Scheme::Tikhonov,
            m: 100,
            reps: None,
        }
    }
}

impl McConfig {
    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.kernel, self.h_z, self.h_w).map_err(config_error)
    }

    pub fn filter_spec(&self) -> Result<FilterSpec> {
        FilterSpec::new(self.scheme, self.alpha).map_err(config_error)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel_spec()?;
        self.filter_spec()?;
        if self.j0.is_empty() || self.n.is_empty() {
            return Err(Error::Config("j0 and n lists must be nonempty".into()));
        }
        if self.n.contains(&0) {
            return Err(Error::Config("sample sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Flir,
    Npiv,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Flir => "flir",
            Model::Npiv => "npiv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageConfig {
    pub models: Vec<Model>,
    pub j0: Vec<J0>,
    pub n: Vec<usize>,
    pub gamma: Vec<f64>,
    pub c_const: Vec<f64>,
    pub flir_alpha: f64,
    pub npiv_alpha: f64,
    pub h_z: f64,
    pub h_w: f64,
    pub kernel: KernelKind,
    pub m: usize,
    pub draws: usize,
    pub reps: Option<usize>,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            models: vec![Model::Flir, Model::Npiv],
            j0: default_j0s(),
            n: vec![1000, 4000],
            gamma: vec![0.05],
            c_const: vec![0.0, 0.1],
            flir_alpha: 0.01,
            npiv_alpha: 0.003,
            h_z: 0.15,
            h_w: 0.1,
            kernel: KernelKind::Gaussian,
            m: 100,
            draws: 10_000,
            reps: None,
        }
    }
}

impl CoverageConfig {
    pub const DEFAULT_REPS: usize = 300;

    pub fn validate(&self) -> Result<()> {
        KernelSpec::new(self.kernel, self.h_z, self.h_w).map_err(config_error)?;
        if self.gamma.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
            return Err(Error::Config("every gamma must lie in (0, 1)".into()));
        }
        if self.c_const.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(Error::Config("every c_const must be nonnegative".into()));
        }
        if !(self.flir_alpha > 0.0 && self.npiv_alpha > 0.0) {
            return Err(Error::Config("alphas must be positive".into()));
        }
        if self.n.contains(&0) || self.draws == 0 {
            return Err(Error::Config("n and draws must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitConfig {
    pub n: Vec<usize>,
    /// Number of independent seeds per sample size.
    pub seeds: usize,
    /// Trigonometric basis index of `μ₀`; must be mean zero.
    pub mu_index: usize,
    /// Adds the `μ₀ = 0` control row.
    pub zero_row: bool,
    pub alpha_rule: AlphaRule,
    pub h_z: f64,
    pub h_w: f64,
    pub kernel: KernelKind,
    pub m: usize,
    pub kernel_sample: usize,
    pub mixture_draws: usize,
    pub energy: f64,
    pub reps: Option<usize>,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self {
            n: vec![500, 2000],
            seeds: 1,
            mu_index: 3,
            zero_row: true,
            alpha_rule: AlphaRule::default(),
            h_z: 0.15,
            h_w: 0.1,
            kernel: KernelKind::Gaussian,
            m: 100,
            kernel_sample: 20_000,
            mixture_draws: 100_000,
            energy: 0.999,
            reps: None,
        }
    }
}

impl LimitConfig {
    pub fn validate(&self) -> Result<()> {
        KernelSpec::new(self.kernel, self.h_z, self.h_w).map_err(config_error)?;
        if self.mu_index < 2 {
            return Err(Error::Config(
                "mu_index must select a mean-zero basis function (>= 2)".into(),
            ));
        }
        if self.seeds == 0 || self.n.contains(&0) || self.kernel_sample == 0 || self.mixture_draws == 0 {
            return Err(Error::Config(
                "seeds, n, kernel_sample and mixture_draws must be positive".into(),
            ));
        }
        if !(self.energy > 0.0 && self.energy <= 1.0) {
            return Err(Error::Config("energy must lie in (0, 1]".into()));
        }
        if !(self.alpha_rule.scale > 0.0 && self.alpha_rule.exponent >= 0.0) {
            return Err(Error::Config(
                "alpha rule needs a positive scale and nonnegative exponent".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConfig {
    pub j0: J0,
    pub n: usize,
    pub beta: f64,
    pub h_z: f64,
    pub h_w: f64,
    pub kernel: KernelKind,
    pub m: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_points: usize,
    /// Source constant; estimated from the population operator when absent.
    pub c_f: Option<f64>,
    pub reps: Option<usize>,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            j0: J0::Finite(2),
            n: 1000,
            beta: 0.5,
            h_z: 0.15,
            h_w: 0.1,
            kernel: KernelKind::Gaussian,
            m: 100,
            alpha_min: 1e-5,
            alpha_max: 10.0,
            alpha_points: 31,
            c_f: None,
            reps: None,
        }
    }
}

impl BoundConfig {
    pub const DEFAULT_REPS: usize = 100;

    pub fn validate(&self) -> Result<()> {
        KernelSpec::new(self.kernel, self.h_z, self.h_w).map_err(config_error)?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config("beta must be positive".into()));
        }
        if !(self.alpha_min > 0.0 && self.alpha_max > self.alpha_min) || self.alpha_points < 2 {
            return Err(Error::Config(
                "alpha grid needs 0 < alpha_min < alpha_max and at least 2 points".into(),
            ));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if let Some(c) = self.c_f {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config("c_f must be positive".into()));
            }
        }
        Ok(())
    }

    /// Log-spaced levels from `alpha_min` to `alpha_max`.
    pub fn alpha_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.alpha_min.ln(), self.alpha_max.ln());
        let k = self.alpha_points - 1;
        (0..=k).map(|i| (lo + (hi - lo) * i as f64 / k as f64).exp()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiltersConfig {
    pub schemes: Vec<Scheme>,
    pub alpha: f64,
    /// Evenly spaced `λ` from 0 to `lambda_max`.
    pub lambda_points: usize,
    pub lambda_max: f64,
}

impl Default for FiltersConfig {
    fn default() -> Self {
        Self {
            schemes: vec![
                Scheme::Tikhonov,
                Scheme::SpectralCutoff,
                Scheme::IteratedTikhonov { m: 3 },
                Scheme::Landweber { c: 0.9 },
            ],
            alpha: 0.1,
            lambda_points: 11,
            lambda_max: 1.0,
        }
    }
}

pub(crate) fn config_error(e: Error) -> Error {
    match e {
        Error::InvalidArgument(msg) => Error::Config(msg),
        other => other,
    }
}
