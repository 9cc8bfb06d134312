//! Numerical laboratory for front invasion in the extended Fisher-KPP
//! equation u_t = −δ²u_xxxx + u_xx + f(u): spreading speeds from the
//! dispersion relation, critical pulled fronts by far-field/core Newton
//! continuation in δ, weighted essential spectra, an Evans-type function
//! for point spectrum near the origin, and direct time integration
//! checking front selection and the t^{−3/2} relaxation rate.

pub mod banded;
pub mod dispersion;
pub mod eigen;
pub mod error;
pub mod evans;
pub mod front;
pub mod grid;
pub mod operators;
pub mod reaction;
pub mod scalar;
pub mod sim;
pub mod weights;

pub use error::{Error, Result};

/// entry point for the `efk` binary (returns the process exit code)
pub fn cli_main() -> i32 {
    eprintln!("cli not wired up yet");
    2
}
