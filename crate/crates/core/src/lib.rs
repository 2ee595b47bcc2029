//! Emitter–electron entanglement toolkit.
//!
//! Free electrons shaped into sideband combs interact with a two-level
//! emitter through a single resonant photon mode. This crate provides the
//! single-interaction scattering map, the coarse-grained Bloch dynamics under
//! a stream of electrons, phase locking, and state tomography from electron
//! energy spectra, together with brute-force reference models.

pub mod bessel;
pub mod dynamics;
pub mod electron;
pub mod error;
pub mod oracle;
pub mod phaselock;
pub mod qubit;
pub mod scatter;
pub mod tomography;

pub use electron::{ElectronComb, OverlapIntegrals, PinemParams};
pub use error::{Error, Result};
pub use qubit::{DensityMatrix2, QubitState};
