//! Cavity figures of merit and the optical transduction chain.
//!
//! From the primitive mirror parameters (power transmissivity `T` of the
//! input coupler, round-trip excess loss `p`, length `L`) the high-finesse
//! relations give
//!
//! ```text
//!     finesse  F   = 2*pi / (T + p)
//!     FSR          = c / 2L
//!     FWHM         = FSR / F
//!     kappa        = pi * FWHM          (angular half-linewidth, rad/s)
//!     eta          = T / (T + p)        (coupling ratio)
//!     dip          = mode_matching * 4*eta*(1 - eta)
//!     P_circ       = P_in * mode_matching * eta * F / pi
//! ```
//!
//! Radiation-pressure back-action from the amplitude fluctuations of the
//! intracavity field has the white (below the cavity pole) force PSD
//!
//! ```text
//!     S_F_ba = hbar*w_L * P_in * (4/c^2) * T^2 * (F/pi)^4 * mode_matching
//! ```
//!
//! and the quantum-regime condition compares it against the thermal force
//! reference 2*k*T_bath*m*w_M/Q: their ratio is the feasibility margin.
//!
//! The displacement-to-phase gain of the on-resonance readout is normalized
//! so that shot-limited phase detection and the back-action PSD above form a
//! self-consistent pair: one-sided imprecision times back-action equals
//! hbar^2.  That closure fixes the closed form
//!
//! ```text
//!     g = 8 * sqrt(2) * eta * F / lambda        [rad/m]
//! ```
//!
//! (mode matching cancels: it attenuates the detected beam and the
//! intracavity build-up equally).  Chaining g with the shot-noise phase floor
//! 2*hbar*w_L/(mode_matching*P_in) reconstructs S_F_ba exactly; a unit test
//! pins the identity.  Cavity dynamics are reduced to a single pole at kappa
//! (mechanical frequencies sit 4-5 orders of magnitude below the FSR).

use num_complex::Complex64;

use crate::consts::{BOLTZMANN, REDUCED_PLANCK, SPEED_OF_LIGHT};
use crate::model::{MechanicalOscillator, NoiseEnvironment};
use crate::{Error, Result};

/// Two-mirror Fabry-Perot cavity, primitive parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalCavity {
    /// Mirror spacing, m.
    pub length_m: f64,
    /// Power transmissivity of the input coupler (dimensionless).
    pub input_transmissivity: f64,
    /// All other round-trip power losses (end-mirror transmission,
    /// absorption, scattering), dimensionless.
    pub roundtrip_excess_loss: f64,
    /// Spatial overlap of the input beam with the cavity mode, in (0, 1].
    pub mode_matching: f64,
}

impl OpticalCavity {
    pub fn new(
        length_m: f64,
        input_transmissivity: f64,
        roundtrip_excess_loss: f64,
        mode_matching: f64,
    ) -> Result<Self> {
        if !(length_m > 0.0) || !length_m.is_finite() {
            return Err(Error::InvalidParameter {
                field: "length_m",
                reason: format!("must be finite and > 0, got {length_m}"),
            });
        }
        if !(input_transmissivity > 0.0 && input_transmissivity < 1.0) {
            return Err(Error::InvalidParameter {
                field: "input_transmissivity",
                reason: format!("must lie in (0, 1), got {input_transmissivity}"),
            });
        }
        if !(roundtrip_excess_loss >= 0.0) || !roundtrip_excess_loss.is_finite() {
            return Err(Error::InvalidParameter {
                field: "roundtrip_excess_loss",
                reason: format!("must be finite and >= 0, got {roundtrip_excess_loss}"),
            });
        }
        // Every derived relation below assumes the high-finesse limit.
        if input_transmissivity + roundtrip_excess_loss >= 0.01 {
            return Err(Error::InvalidParameter {
                field: "input_transmissivity + roundtrip_excess_loss",
                reason: format!(
                    "total round-trip loss must stay below 0.01 (high-finesse regime), got {}",
                    input_transmissivity + roundtrip_excess_loss
                ),
            });
        }
        if !(mode_matching > 0.0 && mode_matching <= 1.0) {
            return Err(Error::InvalidParameter {
                field: "mode_matching",
                reason: format!("must lie in (0, 1], got {mode_matching}"),
            });
        }
        Ok(Self {
            length_m,
            input_transmissivity,
            roundtrip_excess_loss,
            mode_matching,
        })
    }

    /// Compute every derived figure of merit for this cavity under `laser`.
    pub fn derive(&self, laser: &LaserDrive) -> CavityDerived {
        let total_loss = self.input_transmissivity + self.roundtrip_excess_loss;
        let finesse = 2.0 * std::f64::consts::PI / total_loss;
        let free_spectral_range_hz = SPEED_OF_LIGHT / (2.0 * self.length_m);
        let linewidth_fwhm_hz = free_spectral_range_hz / finesse;
        let coupling_ratio = self.input_transmissivity / total_loss;
        CavityDerived {
            cavity: *self,
            free_spectral_range_hz,
            finesse,
            linewidth_fwhm_hz,
            half_linewidth_angular: std::f64::consts::PI * linewidth_fwhm_hz,
            coupling_ratio,
            reflection_dip: self.mode_matching * 4.0 * coupling_ratio * (1.0 - coupling_ratio),
            circulating_power_w: laser.input_power_w
                * self.mode_matching
                * coupling_ratio
                * finesse
                / std::f64::consts::PI,
        }
    }
}

/// The drive laser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserDrive {
    /// Vacuum wavelength, m.
    pub wavelength_m: f64,
    /// Power at the cavity input, W.
    pub input_power_w: f64,
    /// Amplitude-noise PSD relative to shot noise (>= 1; 1 = shot-limited).
    pub amplitude_noise_factor: f64,
    /// Frequency-noise PSD, Hz^2/Hz (one-sided).
    pub frequency_noise_psd: f64,
}

impl LaserDrive {
    pub fn new(
        wavelength_m: f64,
        input_power_w: f64,
        amplitude_noise_factor: f64,
        frequency_noise_psd: f64,
    ) -> Result<Self> {
        if !(wavelength_m > 0.0) || !wavelength_m.is_finite() {
            return Err(Error::InvalidParameter {
                field: "wavelength_m",
                reason: format!("must be finite and > 0, got {wavelength_m}"),
            });
        }
        if !(input_power_w > 0.0) || !input_power_w.is_finite() {
            return Err(Error::InvalidParameter {
                field: "input_power_w",
                reason: format!("must be finite and > 0, got {input_power_w}"),
            });
        }
        if !(amplitude_noise_factor >= 1.0) || !amplitude_noise_factor.is_finite() {
            return Err(Error::InvalidParameter {
                field: "amplitude_noise_factor",
                reason: format!(
                    "input light cannot be sub-shot: factor must be >= 1, got {amplitude_noise_factor}"
                ),
            });
        }
        if !(frequency_noise_psd >= 0.0) || !frequency_noise_psd.is_finite() {
            return Err(Error::InvalidParameter {
                field: "frequency_noise_psd",
                reason: format!("must be finite and >= 0, got {frequency_noise_psd}"),
            });
        }
        Ok(Self {
            wavelength_m,
            input_power_w,
            amplitude_noise_factor,
            frequency_noise_psd,
        })
    }

    /// Optical carrier frequency c/lambda, Hz.
    pub fn optical_frequency_hz(&self) -> f64 {
        SPEED_OF_LIGHT / self.wavelength_m
    }

    /// Angular carrier frequency 2*pi*c/lambda, rad/s.
    pub fn angular_optical_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.optical_frequency_hz()
    }
}

/// Derived cavity figures of merit (see module docs for the relations).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityDerived {
    pub cavity: OpticalCavity,
    pub free_spectral_range_hz: f64,
    pub finesse: f64,
    pub linewidth_fwhm_hz: f64,
    /// kappa = pi * FWHM, rad/s.
    pub half_linewidth_angular: f64,
    /// eta = T / (T + excess loss).
    pub coupling_ratio: f64,
    /// Fractional drop of reflected power on resonance.
    pub reflection_dip: f64,
    pub circulating_power_w: f64,
}

impl CavityDerived {
    /// One-sided radiation-pressure force PSD from vacuum amplitude
    /// fluctuations, N^2/Hz, flat below the cavity pole.  Excess classical
    /// amplitude noise scales this by the amplitude-noise factor; that
    /// bookkeeping lives in the spectrum synthesis, not here.
    pub fn backaction_force_psd(&self, laser: &LaserDrive) -> f64 {
        let t = self.cavity.input_transmissivity;
        let f_over_pi = self.finesse / std::f64::consts::PI;
        REDUCED_PLANCK
            * laser.angular_optical_frequency()
            * laser.input_power_w
            * (4.0 / (SPEED_OF_LIGHT * SPEED_OF_LIGHT))
            * t
            * t
            * f_over_pi.powi(4)
            * self.cavity.mode_matching
    }

    /// DC displacement-to-phase gain of the on-resonance readout, rad/m:
    /// 8*sqrt(2)*eta*F/lambda (see module docs for the closure fixing it).
    pub fn displacement_to_phase_gain(&self, laser: &LaserDrive) -> f64 {
        8.0 * std::f64::consts::SQRT_2 * self.coupling_ratio * self.finesse / laser.wavelength_m
    }

    /// Single-pole response at angular frequency `omega`.
    pub fn pole_filter(&self, omega: f64) -> Complex64 {
        cavity_pole_filter(omega, self.half_linewidth_angular)
    }
}

/// Single-pole low-pass 1/(1 + i*w/kappa): magnitude 1 at DC, 1/sqrt(2) at
/// the pole, monotonically decreasing in |w|.
pub fn cavity_pole_filter(omega: f64, kappa: f64) -> Complex64 {
    Complex64::new(1.0, omega / kappa).inv()
}

/// Invert finesse = 2*pi/(T + p) for the excess loss p.
pub fn excess_loss_for_finesse(finesse: f64, input_transmissivity: f64) -> Result<f64> {
    if !(finesse > 0.0) || !finesse.is_finite() {
        return Err(Error::InvalidParameter {
            field: "finesse",
            reason: format!("must be finite and > 0, got {finesse}"),
        });
    }
    let total = 2.0 * std::f64::consts::PI / finesse;
    let excess = total - input_transmissivity;
    if excess < 0.0 {
        return Err(Error::Domain(format!(
            "finesse {finesse} needs total loss {total:e}, below the input transmissivity {input_transmissivity:e}"
        )));
    }
    Ok(excess)
}

/// Invert dip = mode_matching * 4*eta*(1 - eta) for the mode matching.
pub fn mode_matching_for_dip(
    reflection_dip: f64,
    input_transmissivity: f64,
    roundtrip_excess_loss: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&reflection_dip) {
        return Err(Error::RatioOutOfRange {
            context: "reflection_dip",
            value: reflection_dip,
        });
    }
    let eta = input_transmissivity / (input_transmissivity + roundtrip_excess_loss);
    let ideal = 4.0 * eta * (1.0 - eta);
    let mm = reflection_dip / ideal;
    if !(mm > 0.0 && mm <= 1.0) {
        return Err(Error::Domain(format!(
            "dip {reflection_dip} exceeds the perfect-overlap prediction {ideal:.6}: no mode matching in (0, 1] reproduces it"
        )));
    }
    Ok(mm)
}

/// Both sides of the quantum-regime condition and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumRegimeMargin {
    /// Radiation-pressure force PSD (the condition's left-hand side), N^2/Hz.
    pub backaction_psd: f64,
    /// Thermal force reference 2*k*T*m*w_M/Q (right-hand side), N^2/Hz.
    pub thermal_reference_psd: f64,
    /// backaction_psd / thermal_reference_psd; > 1 means back-action
    /// dominates and ponderomotive squeezing is observable.
    pub margin: f64,
}

/// Evaluate the quantum-regime condition for an oscillator in a thermal bath
/// read out by this cavity and laser.
pub fn quantum_regime_margin(
    osc: &MechanicalOscillator,
    env: &NoiseEnvironment,
    derived: &CavityDerived,
    laser: &LaserDrive,
) -> QuantumRegimeMargin {
    let backaction_psd = derived.backaction_force_psd(laser);
    let thermal_reference_psd = 2.0
        * BOLTZMANN
        * env.bath_temperature_k
        * osc.effective_mass_kg
        * osc.resonance_angular_frequency
        / osc.quality_factor;
    QuantumRegimeMargin {
        backaction_psd,
        thermal_reference_psd,
        margin: backaction_psd / thermal_reference_psd,
    }
}
