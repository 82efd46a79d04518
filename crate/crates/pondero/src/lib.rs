//! Frequency-domain noise model for a suspended-mirror optical cavity read
//! out by homodyne detection, plus parameter estimation on measured spectra.
//!
//! The crate is organized bottom-up:
//!
//! * [`consts`] — compiled-in physical constants.
//! * [`model`] — mechanical oscillator, thermal noise, quadrature algebra.
//! * [`cavity`] — cavity figures of merit, radiation-pressure back-action,
//!   displacement-to-phase transduction, quantum-regime feasibility.
//! * [`scenario`] — bundled measurement configuration and frequency grids.
//! * [`noise`] — synthesis of homodyne quadrature spectra with a per-source
//!   budget, and squeezing metrics.
//! * [`estimate`] — least-squares extraction of oscillator parameters from
//!   measured spectra, homodyne-angle calibration.
//!
//! Conventions used throughout: all power spectral densities are one-sided
//! (total variance = integral over f >= 0); frequencies named `*_hz` are
//! ordinary frequencies and `omega` denotes the angular frequency 2*pi*f;
//! decibel values are 10*log10 of a PSD ratio.

pub mod cavity;
pub mod consts;
pub mod estimate;
mod lm;
pub mod model;
pub mod noise;
pub mod scenario;

pub use cavity::{
    cavity_pole_filter, excess_loss_for_finesse, mode_matching_for_dip, quantum_regime_margin,
    CavityDerived, LaserDrive, OpticalCavity, QuantumRegimeMargin,
};
pub use estimate::{
    calibrate_homodyne_angle, fit_driven_response, fit_thermal_spectrum, synthesize_measurement,
    DrivenResponse, FitResult, InitialGuess, MeasuredSpectrum,
};
pub use model::{
    homodyne_angle_from_offset_ratio, AngleEstimate, ClassicalInjection, Compliance,
    MechanicalOscillator, NoiseEnvironment, QuadraturePair,
};
pub use noise::{
    displacement_spectrum, inject_classical_noise, quadrature_pair, squeezing_metrics,
    synthesize_spectrum, DetectionChain, DisplacementSpectrum, InjectedForcePsd,
    QuadratureSpectrum, ResonanceSide, SourceTag, SpectrumKernel, SqueezingReport,
};
pub use scenario::{GridSpec, Scenario, SqueezingReference};

/// Errors reported by model construction and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter failed validation at construction time.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    /// A function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A ratio that must lie in [0, 1] fell outside it.
    #[error("ratio out of range: {context} = {value}")]
    RatioOutOfRange { context: &'static str, value: f64 },
    /// A classical injection band does not contain the mechanical resonance.
    #[error(
        "injection band [{lo_hz}, {hi_hz}] Hz does not contain the resonance at {resonance_hz} Hz"
    )]
    InjectionBandExcludesResonance {
        lo_hz: f64,
        hi_hz: f64,
        resonance_hz: f64,
    },
    /// A frequency grid does not cover the span a metric needs.
    #[error("frequency grid does not cover required span: {0}")]
    GridCoverage(String),
    /// Input data unusable for fitting (too short, non-monotone, ...).
    #[error("degenerate data: {0}")]
    DegenerateData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
