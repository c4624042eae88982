//! Spectral sum rules `Z(s) = Σ' Eₙ^{-s}` of rational order for the
//! heterogeneous Neumann string `−u'' = E (1 + λσ(x)) u` on `[-1/2, 1/2]`.
//!
//! Three independent routes are provided and cross-checked:
//!
//! * second-order perturbation theory with zero-mode renormalization
//!   ([`sum_rules::z_tilde`]), assembled either from closed-form spectral
//!   sums or from traces of fractional Green's-function coefficients
//!   ([`fractional_green`]);
//! * the exact order-one trace formula ([`sum_rules::z1_exact`]);
//! * a Rayleigh–Ritz spectrum with an asymptotic Hurwitz-zeta tail
//!   ([`rr_spectrum::z_numerical`]).

pub mod analysis_fit;
pub mod cli_io;
pub mod error;
pub mod fractional_green;
pub mod neumann_basis;
pub mod polynomial;
pub mod quadrature;
pub mod rr_spectrum;
pub mod special;
pub mod sum_rules;
pub mod summation;
pub mod zero_mode_pt;

pub use error::{Error, Result};
pub use neumann_basis::{DensityModel, MatrixElementTable, NeumannBasis};
pub use sum_rules::{Route, SumRuleResult};
