use serde::Serialize;

use crate::bench::config::{config_error, FiltersConfig};
use crate::error::{Error, Result};
use crate::spectral::FilterSpec;

/// `g_α(λ)` with the derived quantities the filter inequalities bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterRow {
    pub scheme: String,
    pub alpha: f64,
    pub lambda: f64,
    pub g: f64,
    /// `λ g_α(λ)`.
    pub lambda_g: f64,
    /// `1 − λ g_α(λ)`.
    pub residual: f64,
}

pub fn filter_table(cfg: &FiltersConfig) -> Result<Vec<FilterRow>> {
    if cfg.lambda_points < 2 || !(cfg.lambda_max > 0.0 && cfg.lambda_max.is_finite()) {
        return Err(Error::Config(
            "filters need lambda_points >= 2 and a positive lambda_max".into(),
        ));
    }
    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        let spec = FilterSpec::new(scheme, cfg.alpha).map_err(config_error)?;
        for i in 0..cfg.lambda_points {
            let lambda = cfg.lambda_max * i as f64 / (cfg.lambda_points - 1) as f64;
            let g = spec.value(lambda);
            rows.push(FilterRow {
                scheme: scheme.to_string(),
                alpha: cfg.alpha,
                lambda,
                g,
                lambda_g: lambda * g,
                residual: 1.0 - lambda * g,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Scheme;

    #[test]
    fn table_shape_and_values() {
        let cfg = FiltersConfig {
            schemes: vec![Scheme::Tikhonov],
            alpha: 0.5,
            lambda_points: 3,
            lambda_max: 1.0,
        };
        let rows = filter_table(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].g, 2.0);
        assert_eq!(rows[2].lambda_g, 1.0 / 1.5);
    }

    #[test]
    fn landweber_needs_integer_steps() {
        let cfg = FiltersConfig {
            schemes: vec![Scheme::Landweber { c: 0.5 }],
            alpha: 0.3,
            ..Default::default()
        };
        assert!(matches!(filter_table(&cfg), Err(Error::Config(_))));
    }
}
