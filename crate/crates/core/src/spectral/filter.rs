use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Spectral regularization scheme and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scheme {
    Tikhonov,
    SpectralCutoff,
    IteratedTikhonov {
        m: u32,
    },
    /// Step size `c` must lie in `(0, 1/Λ)` where `Λ` bounds the spectrum.
    Landweber {
        c: f64,
    },
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Tikhonov => write!(f, "tikhonov"),
            Scheme::SpectralCutoff => write!(f, "spectral_cutoff"),
            Scheme::IteratedTikhonov { m } => write!(f, "iterated_tikhonov({m})"),
            Scheme::Landweber { c } => write!(f, "landweber({c})"),
        }
    }
}

/// A scheme together with the regularization level `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    scheme: Scheme,
    alpha: f64,
    // Landweber iteration count 1/α, cached
    steps: u64,
}

impl FilterSpec {
    pub fn new(scheme: Scheme, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return invalid(format!("alpha must be positive and finite, got {alpha}"));
        }
        let mut steps = 0;
        match scheme {
            Scheme::Tikhonov | Scheme::SpectralCutoff => {}
            Scheme::IteratedTikhonov { m } => {
                if m < 2 {
                    return invalid(format!("iterated Tikhonov needs m >= 2, got {m}"));
                }
            }
            Scheme::Landweber { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return invalid(format!("Landweber step must be positive, got {c}"));
                }
                let k = (1.0 / alpha).round();
                if k < 1.0 || ((1.0 / alpha) - k).abs() > 1e-9 * k {
                    return invalid(format!(
                        "Landweber needs 1/alpha to be a positive integer, got alpha={alpha}"
                    ));
                }
                steps = k as u64;
            }
        }
        Ok(Self { scheme, alpha, steps })
    }

    pub fn tikhonov(alpha: f64) -> Result<Self> {
        Self::new(Scheme::Tikhonov, alpha)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same scheme at a different level.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.scheme, alpha)
    }

    /// `g_α(λ)` for `λ ≥ 0`.
    pub fn value(&self, lambda: f64) -> f64 {
        filter_value(self, lambda)
    }

    /// Fails when the spectrum bound `Λ` makes the scheme unstable.
    pub(crate) fn check_spectrum(&self, top: f64) -> Result<()> {
        if let Scheme::Landweber { c } = self.scheme {
            if top > 0.0 && c >= 1.0 / top {
                return invalid(format!("Landweber step c={c} must be below 1/Λ = {}", 1.0 / top));
            }
        }
        Ok(())
    }
}

/// Filter function `g_α(λ)` approximating `1/λ`.
pub fn filter_value(spec: &FilterSpec, lambda: f64) -> f64 {
    let alpha = spec.alpha;
    let lambda = lambda.max(0.0);
    match spec.scheme {
        Scheme::Tikhonov => 1.0 / (alpha + lambda),
        Scheme::SpectralCutoff => {
            if lambda >= alpha {
                1.0 / lambda
            } else {
                0.0
            }
        }
        Scheme::IteratedTikhonov { m } => {
            let m = f64::from(m);
            if lambda == 0.0 {
                return m / alpha;
            }
            // 1 - (α/(λ+α))^m without cancellation for small λ
            -(-m * (lambda / alpha).ln_1p()).exp_m1() / lambda
        }
        Scheme::Landweber { c } => {
            let k = spec.steps as f64;
            if lambda == 0.0 {
                return c * k;
            }
            let base = 1.0 - c * lambda;
            let residual = if base > 0.0 {
                -(k * (-c * lambda).ln_1p()).exp_m1()
            } else {
                1.0 - base.powf(k)
            };
            residual / lambda
        }
    }
}

/// Bound on `sup |g_α(λ)|` in units of `1/α`; for Landweber it depends on `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum C3 {
    Const(f64),
    Landweber { c: f64 },
}

impl C3 {
    pub fn at(&self, beta: f64) -> f64 {
        match *self {
            C3::Const(v) => v,
            C3::Landweber { c } => (beta / (c * std::f64::consts::E)).powf(beta / 2.0).max(1.0),
        }
    }
}

/// Constants of the filter inequalities and the qualification `β₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qualification {
    pub c1: f64,
    pub c2: f64,
    pub c3: C3,
    /// `None` for schemes with unbounded qualification.
    pub beta0: Option<f64>,
}

pub fn qualification(scheme: Scheme) -> Qualification {
    match scheme {
        Scheme::Tikhonov => Qualification {
            c1: 0.5,
            c2: 1.0,
            c3: C3::Const(1.0),
            beta0: Some(2.0),
        },
        Scheme::SpectralCutoff => Qualification {
            c1: 1.0,
            c2: 1.0,
            c3: C3::Const(1.0),
            beta0: None,
        },
        Scheme::IteratedTikhonov { m } => {
            let m = f64::from(m);
            Qualification {
                c1: m.sqrt(),
                c2: 1.0,
                c3: C3::Const(m),
                beta0: Some(m),
            }
        }
        Scheme::Landweber { c } => Qualification {
            c1: c.sqrt(),
            c2: c.max(1.0),
            c3: C3::Landweber { c },
            beta0: None,
        },
    }
}
