//! Numerical toolkit for the free quantized electromagnetic field and the
//! infrared dressing of a non-relativistic electron.
//!
//! The crate covers the single-photon kinematics (polarisations, transverse
//! projection, symplectic form), smooth test functions and their on-shell
//! Fourier transforms, the soft-photon dressing profiles and their
//! lightcone-localized approximants, Weyl-operator phase bookkeeping, and
//! a set of quadrature-backed checks of locality, the Huygens principle and
//! finite propagation speed.

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod quad;
pub mod testfields;
pub mod photon;
pub mod profiles;
pub mod pairing;
pub mod weyl;
pub mod wavecheck;
pub mod cli;

pub use error::{Error, Result};
