//! Mechanical oscillator model, thermal noise PSDs, and homodyne quadrature
//! algebra.
//!
//! The end mirror is a single damped harmonic mode with complex compliance
//!
//! ```text
//!     chi(w) = 1 / ( m * ( w_M^2 - w^2 - i*w*w_M/Q ) )        [m/N]
//! ```
//!
//! (viscous damping: the damping rate w_M/Q is frequency-independent).
//! Thermal noise follows from the fluctuation-dissipation theorem; with the
//! one-sided PSD convention used throughout the crate:
//!
//! ```text
//!     S_x_th(w) = (4 k T / w) * Im chi(w)                      [m^2/Hz]
//!     S_F_th    = -(4 k T / w) * Im( 1/chi(w) ) = 4 k T m w_M / Q   [N^2/Hz]
//! ```
//!
//! The force PSD is white, and `S_x_th = |chi|^2 * S_F_th` holds exactly at
//! every frequency — tests pin that identity to 1e-12.
//!
//! Homodyne detection at angle `phi` measures the field quadrature
//! `dX_phi = dX_1 cos(phi) - dX_2 sin(phi)`, so a stationary pair of
//! quadratures with spectra (S11, S22) and cross-spectrum S12 is detected as
//!
//! ```text
//!     S_phi = S11 cos^2(phi) + S22 sin^2(phi) - 2 cos(phi) sin(phi) Re S12
//! ```

use num_complex::Complex64;

use crate::consts::BOLTZMANN;
use crate::{Error, Result};

/// A single mechanical mode of the suspended mirror.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanicalOscillator {
    /// Effective (modal) mass, kg.
    pub effective_mass_kg: f64,
    /// Resonance angular frequency w_M = 2*pi*f_M, rad/s.
    pub resonance_angular_frequency: f64,
    /// Mechanical quality factor (dimensionless, >= 1).
    pub quality_factor: f64,
}

impl MechanicalOscillator {
    pub fn new(
        effective_mass_kg: f64,
        resonance_angular_frequency: f64,
        quality_factor: f64,
    ) -> Result<Self> {
        if !(effective_mass_kg > 0.0) || !effective_mass_kg.is_finite() {
            return Err(Error::InvalidParameter {
                field: "effective_mass_kg",
                reason: format!("must be finite and > 0, got {effective_mass_kg}"),
            });
        }
        if !(resonance_angular_frequency > 0.0) || !resonance_angular_frequency.is_finite() {
            return Err(Error::InvalidParameter {
                field: "resonance_angular_frequency",
                reason: format!("must be finite and > 0, got {resonance_angular_frequency}"),
            });
        }
        if !(quality_factor >= 1.0) || !quality_factor.is_finite() {
            return Err(Error::InvalidParameter {
                field: "quality_factor",
                reason: format!("must be finite and >= 1, got {quality_factor}"),
            });
        }
        Ok(Self {
            effective_mass_kg,
            resonance_angular_frequency,
            quality_factor,
        })
    }

    /// Convenience constructor taking the resonance in ordinary frequency.
    pub fn from_frequency_hz(
        effective_mass_kg: f64,
        f_m_hz: f64,
        quality_factor: f64,
    ) -> Result<Self> {
        Self::new(
            effective_mass_kg,
            2.0 * std::f64::consts::PI * f_m_hz,
            quality_factor,
        )
    }

    /// Resonance frequency in Hz.
    pub fn resonance_frequency_hz(&self) -> f64 {
        self.resonance_angular_frequency / (2.0 * std::f64::consts::PI)
    }

    /// Full width at half maximum of the mechanical line, Hz.
    pub fn linewidth_hz(&self) -> f64 {
        self.resonance_frequency_hz() / self.quality_factor
    }

    /// Complex mechanical compliance chi(w), defined for every real w
    /// (the denominator cannot vanish at finite Q).
    pub fn susceptibility(&self, omega: f64) -> Compliance {
        let m = self.effective_mass_kg;
        let wm = self.resonance_angular_frequency;
        let q = self.quality_factor;
        let denom = Complex64::new(wm * wm - omega * omega, -omega * wm / q) * m;
        Compliance(denom.inv())
    }

    /// One-sided thermal displacement PSD (4kT/w) * Im chi(w), m^2/Hz.
    pub fn thermal_displacement_psd(&self, env: &NoiseEnvironment, omega: f64) -> Result<f64> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!(
                "thermal displacement PSD needs omega > 0, got {omega}"
            )));
        }
        let kt = BOLTZMANN * env.bath_temperature_k;
        Ok(4.0 * kt / omega * self.susceptibility(omega).0.im)
    }

    /// One-sided thermal (Langevin) force PSD, N^2/Hz.  White under viscous
    /// damping: -(4kT/w) * Im(1/chi) = 4 k T m w_M / Q at every w > 0.
    pub fn thermal_force_psd(&self, env: &NoiseEnvironment, omega: f64) -> Result<f64> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!(
                "thermal force PSD needs omega > 0, got {omega}"
            )));
        }
        let kt = BOLTZMANN * env.bath_temperature_k;
        Ok(
            4.0 * kt * self.effective_mass_kg * self.resonance_angular_frequency
                / self.quality_factor,
        )
    }
}

/// Complex compliance value, m/N.  For w > 0 the imaginary part is strictly
/// positive (passive dissipation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compliance(pub Complex64);

impl Compliance {
    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }

    pub fn magnitude_squared(&self) -> f64 {
        self.0.norm_sqr()
    }
}

/// Thermal bath plus optional classical force injection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEnvironment {
    /// Bath temperature, K.
    pub bath_temperature_k: f64,
    /// Optional band-limited classical force drive.
    pub classical_injection: Option<ClassicalInjection>,
}

impl NoiseEnvironment {
    pub fn new(bath_temperature_k: f64) -> Result<Self> {
        if !(bath_temperature_k > 0.0) || !bath_temperature_k.is_finite() {
            return Err(Error::InvalidParameter {
                field: "bath_temperature_k",
                reason: format!("must be finite and > 0, got {bath_temperature_k}"),
            });
        }
        Ok(Self {
            bath_temperature_k,
            classical_injection: None,
        })
    }

    pub fn with_injection(mut self, injection: ClassicalInjection) -> Result<Self> {
        if !(injection.bandwidth_hz > 0.0) || !injection.bandwidth_hz.is_finite() {
            return Err(Error::InvalidParameter {
                field: "classical_injection.bandwidth_hz",
                reason: format!("must be finite and > 0, got {}", injection.bandwidth_hz),
            });
        }
        if !(injection.center_frequency_hz > 0.0) {
            return Err(Error::InvalidParameter {
                field: "classical_injection.center_frequency_hz",
                reason: format!("must be > 0, got {}", injection.center_frequency_hz),
            });
        }
        self.classical_injection = Some(injection);
        Ok(self)
    }
}

/// Band-limited white force noise added on top of the thermal Langevin force,
/// specified relative to the thermal force PSD in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalInjection {
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
    /// Injected force PSD over thermal force PSD, in dB (10*log10).
    pub force_psd_over_thermal_db: f64,
}

/// One-sided spectra of the two field quadratures at a single frequency, in
/// shot-noise units (vacuum amplitude quadrature = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePair {
    /// S11: amplitude-quadrature PSD.
    pub amplitude_psd: f64,
    /// S22: phase-quadrature PSD.
    pub phase_psd: f64,
    /// S12: cross-spectrum (complex; only Re enters a homodyne measurement).
    pub cross_psd: Complex64,
}

impl QuadraturePair {
    /// PSD of the detected quadrature dX_phi = dX_1 cos(phi) - dX_2 sin(phi).
    pub fn mix(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        c * c * self.amplitude_psd + s * s * self.phase_psd - 2.0 * c * s * self.cross_psd.re
    }
}

/// Result of inverting the homodyne-calibration ratio: the angle magnitude,
/// with an explicit marker that a single PSD ratio cannot determine the sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleEstimate {
    pub magnitude_rad: f64,
    pub sign_ambiguous: bool,
}

/// Invert S(V_off)/S(0) = cos^2(phi) for |phi|.
///
/// Ratios up to 1 + 1e-9 are clamped to 1 (measurement noise at the
/// reference); anything larger, or any negative ratio, is rejected.
/// Implemented as atan2(sqrt(1-r), sqrt(r)), which equals arccos(sqrt(r))
/// but stays fully accurate at both ends of [0, 1].
pub fn homodyne_angle_from_offset_ratio(ratio: f64) -> Result<AngleEstimate> {
    if !ratio.is_finite() || !(0.0..=1.0 + 1e-9).contains(&ratio) {
        return Err(Error::RatioOutOfRange {
            context: "offset-sweep PSD ratio",
            value: ratio,
        });
    }
    let r = ratio.min(1.0);
    Ok(AngleEstimate {
        magnitude_rad: (1.0 - r).sqrt().atan2(r.sqrt()),
        sign_ambiguous: true,
    })
}
