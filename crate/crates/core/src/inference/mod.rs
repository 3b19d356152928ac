//! Uniform confidence bands, functional intervals and degenerate limit laws.

mod bands;
mod functional;
mod limit;
mod mixture;
pub mod stats;

pub use bands::{
    chi_square_norm_quantile, flir_band_basis, flir_confband, flir_confband_with, gaussian_sup_quantile,
    npiv_band_basis, npiv_confband, npiv_confband_with, BandBasis, BandOptions, ConfBand,
};
pub use functional::{functional_ci, functional_normalizer, FunctionalInterval};
pub use limit::{degenerate_limit_check, limit_mixture, restricted_fit, AlphaRule, LimitOptions, LimitReport};
pub use mixture::{ustat_mixture, ustat_mixture_factored, ChiSqMixture};
