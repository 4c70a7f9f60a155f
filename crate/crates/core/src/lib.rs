//! Numerical laboratory for the 1D focusing cubic NLS `i u_t + u_xx + |u|²u = 0`
//! with slowly decaying (L^p, 2 ≤ p < 13/6) initial data.

// `!(x > 0.0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod data;
pub mod decomposition;
pub mod error;
pub mod experiment;
pub mod exponents;
pub mod globalization;
pub mod norms;
pub mod report;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use experiment::ExperimentConfig;
pub use exponents::ExponentSet;
pub use report::{CheckOutcome, RunReport, Table};
pub use norms::SpaceTimeField;
pub use spectral::{Field, GridSpec, Spectrum};
