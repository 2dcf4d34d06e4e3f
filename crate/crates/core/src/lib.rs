//! Virtual-state spectroscopy with intense twin beams.
//!
//! The pipeline runs from a pulse-pumped type-II crystal to a two-photon
//! absorption (TPA) spectrogram:
//!
//! 1. [`spdc`] builds the discretized joint spectral amplitude on a pair of
//!    aligned frequency grids.
//! 2. [`schmidt`] decomposes it into Schmidt modes, solves the Bogoliubov gains
//!    for a target photon number and assembles the classical (`F1s`, `F1i`) and
//!    quantum (`F2`) spectral correlation functions.
//! 3. [`medium`] describes the absorber (ground, intermediate and final levels).
//! 4. [`tpa`] evaluates the six non-vanishing TPA contributions as frequency
//!    quadratures, groups them into noise / classical / quantum parts and scans
//!    them over the signal-idler delay.
//! 5. [`spectro`] turns delay traces into spectrograms, averages crystal-length
//!    ensembles and locates the intermediate-level peaks.
//!
//! Units: energies in eV (`hbar * omega`), times in fs, lengths in m and
//! inverse group velocities in ps/m. All optical prefactors are folded into a
//! single arbitrary scale.

pub mod error;
pub mod experiment;
pub mod medium;
pub mod schmidt;
pub mod spdc;
pub mod spectro;
pub mod tpa;

pub use error::{ErrorKind, Result, VssError};
pub use num_complex::Complex64;

/// Reduced Planck constant in eV fs.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;

/// Real-valued matrix type used throughout the crate.
pub type RMatrix = ndarray::Array2<f64>;
/// Complex matrix type used throughout the crate.
pub type CMatrix = ndarray::Array2<Complex64>;
