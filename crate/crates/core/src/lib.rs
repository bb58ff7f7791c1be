//! Pseudo-spectral laboratory for the periodic higher-order shallow-water
//! equation
//!
//! ```text
//! u_t - u_txx + ∂^{2j+1}u - ∂^{2j+3}u + 3uu_x - 2u_x u_xx - u u_xxx = 0,   x ∈ ℝ/2πℤ.
//! ```

pub mod diagnostics;
pub mod dynamics;
pub mod gwp;
pub mod harness;
pub mod error;
pub mod imethod;
pub mod numfmt;
pub mod profiles;
pub mod quadrature;
pub mod resonance;
pub mod spectral;
pub mod xsb;

pub use error::{Error, Result};
