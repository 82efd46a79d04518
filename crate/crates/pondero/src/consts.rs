//! Physical constants (CODATA 2018 exact values).
//!
//! These are compiled in rather than carried as model parameters: every
//! formula in this crate uses the same SI values, and letting callers vary
//! them would only create opportunities for inconsistent spectra.

/// Speed of light in vacuum.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0; // m/s

/// Reduced Planck constant.
pub const REDUCED_PLANCK: f64 = 1.054_571_817e-34; // J s

/// Boltzmann constant.
pub const BOLTZMANN: f64 = 1.380_649e-23; // J/K
