//! Time-of-arrival distributions for free Gaussian wave packets.
//!
//! Natural units throughout (hbar = c = 1). The crate covers closed-form
//! packets and kernels, exact lattice first passage, SQM detector models
//! (Kijowski, probability current, Marchewka-Schuss absorbing boundary) and
//! time-extended quantum mechanics, where a packet also has a spread in
//! coordinate time.

pub mod detectors;
pub mod error;
pub mod experiments;
pub mod firstpassage;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod quad;
pub mod tqm;
pub mod validation;
pub mod wavepacket;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Library version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex probability amplitude.
pub type ComplexAmplitude = Complex64;

pub(crate) fn check_finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name))
    }
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<f64> {
    check_finite(name, v)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
    }
}
