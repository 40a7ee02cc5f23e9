//! Exact truncated series: hbar-Laurent coefficients, z-series, p-series and
//! rational functions.

mod bivariate;
mod hlaurent;
mod pseries;
mod ratfn;
mod special;
mod zseries;

pub use bivariate::BiSeries;
pub use hlaurent::{HLaurent, HWindow};
pub use pseries::{fmt_monomial, multiplicity_factor, weight, Grading, Monomial, PCaps, PSeries};
pub use ratfn::{Point, Poly, RatFn};
pub use special::{apply_s, inv_varsigma_of_hbar, s_inv_series, s_of_hbar, s_series, varsigma_series, SMode};
pub use zseries::ZSeries;
