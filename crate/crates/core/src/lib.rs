//! Mori-Zwanzig reduced models for polynomial-chaos uncertainty propagation
//! through the viscous Burgers equation.

pub mod adaptive;
pub mod basis;
pub mod burgers;
pub mod config;
pub mod error;
pub mod estimator;
pub mod field;
pub mod integrate;
pub mod monte_carlo;
pub mod reduction;
pub mod run;
pub mod stats;

pub use error::{MzError, Result};
pub use num_complex::Complex64;
pub use field::PcField;
