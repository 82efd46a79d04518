//! Bundled measurement configurations: every parameter record a synthesis or
//! feasibility run needs, plus the frequency grid policy and two named
//! benchmark presets.

use crate::cavity::{excess_loss_for_finesse, mode_matching_for_dip, LaserDrive, OpticalCavity};
use crate::model::{ClassicalInjection, MechanicalOscillator, NoiseEnvironment};
use crate::noise::DetectionChain;
use crate::{Error, Result};

/// Which level squeezing is quoted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqueezingReference {
    /// True vacuum: detected PSD relative to the shot-noise level (= 1).
    /// The natural reference when the input light is close to shot-limited.
    VacuumShot,
    /// The classical-analog reference: at angle phi, the wing level
    /// cos^2(phi) times the amplitude-quadrature trace that "plays the role"
    /// of shot noise.  Used when a large injected classical noise stands in
    /// for the quantum back-action.
    AmplitudeWings,
}

/// Frequency-grid policy: a logarithmic base grid with a linear refinement
/// window around the mechanical resonance (the line is ~f_M/Q wide, far too
/// narrow for any reasonable global log spacing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min_hz: f64,
    pub max_hz: f64,
    /// Points of the logarithmic base grid (>= 2).
    pub log_points: usize,
    /// Half-width of the linear refinement window, in units of the
    /// mechanical linewidth f_M/Q.  Zero disables refinement.
    pub refine_half_width_linewidths: f64,
    /// Points across the refinement window (>= 2 when refinement is on).
    pub refine_points: usize,
}

impl GridSpec {
    /// Default policy around a given oscillator: half a decade either side,
    /// refinement of +-20 linewidths sampled at 400 points per linewidth.
    pub fn around(osc: &MechanicalOscillator) -> Self {
        let f_m = osc.resonance_frequency_hz();
        Self {
            min_hz: f_m / 4.0,
            max_hz: 4.0 * f_m,
            log_points: 801,
            refine_half_width_linewidths: 20.0,
            refine_points: 16001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_hz > 0.0 && self.min_hz.is_finite()) || self.max_hz <= self.min_hz {
            return Err(Error::InvalidParameter {
                field: "grid.min_hz/max_hz",
                reason: format!(
                    "need 0 < min < max and finite, got [{}, {}]",
                    self.min_hz, self.max_hz
                ),
            });
        }
        if self.log_points < 2 {
            return Err(Error::InvalidParameter {
                field: "grid.log_points",
                reason: format!("need at least 2, got {}", self.log_points),
            });
        }
        if self.refine_half_width_linewidths < 0.0 {
            return Err(Error::InvalidParameter {
                field: "grid.refine_half_width_linewidths",
                reason: "must be >= 0".into(),
            });
        }
        if self.refine_half_width_linewidths > 0.0 && self.refine_points < 2 {
            return Err(Error::InvalidParameter {
                field: "grid.refine_points",
                reason: format!(
                    "need at least 2 with refinement on, got {}",
                    self.refine_points
                ),
            });
        }
        Ok(())
    }

    /// Materialize the grid for `osc`: strictly increasing, spanning
    /// [min_hz, max_hz], containing f_M exactly when it lies inside.
    pub fn build(&self, osc: &MechanicalOscillator) -> Result<Vec<f64>> {
        self.validate()?;
        let mut grid = Vec::with_capacity(self.log_points + self.refine_points + 1);

        let (ln_min, ln_max) = (self.min_hz.ln(), self.max_hz.ln());
        for i in 0..self.log_points {
            let t = i as f64 / (self.log_points - 1) as f64;
            grid.push((ln_min + t * (ln_max - ln_min)).exp());
        }

        let f_m = osc.resonance_frequency_hz();
        if self.refine_half_width_linewidths > 0.0 {
            let half = self.refine_half_width_linewidths * osc.linewidth_hz();
            let lo = (f_m - half).max(self.min_hz);
            let hi = (f_m + half).min(self.max_hz);
            if hi > lo {
                for i in 0..self.refine_points {
                    let t = i as f64 / (self.refine_points - 1) as f64;
                    grid.push(lo + t * (hi - lo));
                }
            }
        }
        if f_m > self.min_hz && f_m < self.max_hz {
            grid.push(f_m);
        }

        grid.sort_by(|a, b| a.partial_cmp(b).expect("grid frequencies are finite"));
        grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        Ok(grid)
    }
}

/// A complete, validated measurement configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub oscillator: MechanicalOscillator,
    pub environment: NoiseEnvironment,
    pub cavity: OpticalCavity,
    pub laser: LaserDrive,
    pub detection: DetectionChain,
    pub grid: GridSpec,
    /// Displacement-equivalent laser frequency noise, m^2/Hz.  `None` uses
    /// the rigid-cavity conversion (L/nu)^2 * S_nu; `Some` overrides it with
    /// a measured/quoted equivalent level.
    pub frequency_noise_displacement_override: Option<f64>,
    pub reference: SqueezingReference,
}

impl Scenario {
    /// Re-run every component validation (useful after field-level edits).
    pub fn validate(&self) -> Result<()> {
        MechanicalOscillator::new(
            self.oscillator.effective_mass_kg,
            self.oscillator.resonance_angular_frequency,
            self.oscillator.quality_factor,
        )?;
        let env = NoiseEnvironment::new(self.environment.bath_temperature_k)?;
        if let Some(inj) = self.environment.classical_injection {
            env.with_injection(inj)?;
        }
        OpticalCavity::new(
            self.cavity.length_m,
            self.cavity.input_transmissivity,
            self.cavity.roundtrip_excess_loss,
            self.cavity.mode_matching,
        )?;
        LaserDrive::new(
            self.laser.wavelength_m,
            self.laser.input_power_w,
            self.laser.amplitude_noise_factor,
            self.laser.frequency_noise_psd,
        )?;
        DetectionChain::new(
            self.detection.detection_loss,
            self.detection.signal_to_lo_power_ratio,
            self.detection.homodyne_angle,
            self.detection.wideband_displacement_noise_psd,
        )?;
        self.grid.validate()?;
        if let Some(v) = self.frequency_noise_displacement_override {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    field: "frequency_noise_displacement_override",
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Displacement-equivalent frequency-noise PSD, m^2/Hz (flat).
    pub fn frequency_noise_displacement_psd(&self) -> f64 {
        match self.frequency_noise_displacement_override {
            Some(v) => v,
            None => {
                // delta_x / L = delta_nu / nu for a rigid cavity lock
                let ratio = self.cavity.length_m / self.laser.optical_frequency_hz();
                ratio * ratio * self.laser.frequency_noise_psd
            }
        }
    }

    /// Benchmark preset: the room-temperature classical-analog measurement.
    /// A 249.3 kHz / Q = 5500 / 0.11 ug mirror mode in a 12.2 mm cavity of
    /// finesse 1e4 (T = 110 ppm, reflection dip 38%), probed with 5.6 mW at
    /// 1064 nm; band-limited amplitude noise drives the mirror 10 dB above
    /// the thermal force over 15 kHz around resonance.  Squeezing is quoted
    /// against the amplitude-wing level.
    pub fn classical_analog() -> Self {
        // Conversions from lab units (kHz, mm, ppm, nm, mW) are spelled the
        // same way the configuration loader spells them, so a config file
        // holding these numbers rebuilds this scenario bit for bit.
        let oscillator = MechanicalOscillator::from_frequency_hz(1.1e-7, 249.3 * 1e3, 5500.0)
            .expect("preset oscillator parameters are valid");
        let environment = NoiseEnvironment::new(300.0)
            .expect("preset bath temperature is valid")
            .with_injection(ClassicalInjection {
                center_frequency_hz: 249.3 * 1e3,
                bandwidth_hz: 15.0 * 1e3,
                force_psd_over_thermal_db: 10.0,
            })
            .expect("preset injection parameters are valid");
        let transmissivity = 110.0 / 1e6;
        let excess = excess_loss_for_finesse(1e4, transmissivity)
            .expect("preset finesse is reachable with preset transmissivity");
        let mode_matching = mode_matching_for_dip(0.38, transmissivity, excess)
            .expect("preset reflection dip is reachable");
        let cavity = OpticalCavity::new(12.2 / 1e3, transmissivity, excess, mode_matching)
            .expect("preset cavity parameters are valid");
        let laser = LaserDrive::new(1064.0 / 1e9, 5.6 / 1e3, 1.0, 0.0)
            .expect("preset laser parameters are valid");
        let detection = DetectionChain::new(0.0, 0.01, (-44.0f64).to_radians(), 0.0)
            .expect("preset detection parameters are valid");
        Self {
            oscillator,
            environment,
            cavity,
            laser,
            detection,
            grid: GridSpec {
                min_hz: 62.325 * 1e3,
                max_hz: 997.2 * 1e3,
                log_points: 801,
                refine_half_width_linewidths: 25.0,
                refine_points: 20_001,
            },
            frequency_noise_displacement_override: None,
            reference: SqueezingReference::AmplitudeWings,
        }
    }

    /// Benchmark preset: the cryogenic quantum noise budget.  A 100 kHz /
    /// Q = 1e5 / 50 ng mode in a 6 mm cavity (T = 50 ppm, 40 ppm excess
    /// loss, unity mode matching) probed with 30 mW at 1064 nm; laser
    /// amplitude noise 5x shot, frequency noise quoted as a 1e-33 m^2/Hz
    /// displacement equivalent; homodyne angle 1e-4 rad, 1% detection loss;
    /// bath at 4.2 K.  Squeezing is quoted against vacuum shot noise.
    pub fn quantum_budget() -> Self {
        let oscillator = MechanicalOscillator::from_frequency_hz(5e-8, 100.0 * 1e3, 1e5)
            .expect("preset oscillator parameters are valid");
        let environment = NoiseEnvironment::new(4.2).expect("preset bath temperature is valid");
        let cavity = OpticalCavity::new(6.0 / 1e3, 50.0 / 1e6, 40.0 / 1e6, 1.0)
            .expect("preset cavity parameters are valid");
        let laser = LaserDrive::new(1064.0 / 1e9, 30.0 / 1e3, 5.0, 1.0)
            .expect("preset laser parameters are valid");
        let detection = DetectionChain::new(0.01, 0.01, 1e-4, 0.0)
            .expect("preset detection parameters are valid");
        Self {
            oscillator,
            environment,
            cavity,
            laser,
            detection,
            grid: GridSpec {
                min_hz: 25.0 * 1e3,
                max_hz: 400.0 * 1e3,
                log_points: 801,
                refine_half_width_linewidths: 1500.0,
                refine_points: 12_001,
            },
            frequency_noise_displacement_override: Some(1e-33),
            reference: SqueezingReference::VacuumShot,
        }
    }
}
