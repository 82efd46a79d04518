//! Homodyne quadrature noise synthesis.
//!
//! The detected quadrature at homodyne angle phi is
//!
//! ```text
//!     dX_phi = dX_1 cos(phi) - dX_2 sin(phi)
//! ```
//!
//! with all spectra normalized so that vacuum shot noise is 1.  Intracavity
//! amplitude fluctuations (vacuum + laser excess + any injected classical
//! noise) drive the mirror through radiation pressure; the resulting motion
//! is read out in the phase quadrature together with thermal and readout
//! displacement noise.  With
//!
//! ```text
//!     tau^2(w)  = 1 / (1 + (w/kappa)^2)         cavity pole (power)
//!     T(w)      = S_F0 tau^2 chi(w) / hbar      amplitude->phase transfer
//!     G(w)      = S_F0 tau^2 / hbar^2           displacement->phase gain
//!     N(f)      = A + S_inj(f) / (S_F0 tau^2)   total amplitude PSD
//! ```
//!
//! the quadrature pair is
//!
//! ```text
//!     S_11 = D N + l
//!     S_22 = D (1 + |T|^2 N + G Sx) + l
//!     S_12 = D T N
//! ```
//!
//! where D = 1 - l is the detection efficiency, l the detection loss, and
//! Sx the sum of thermal, wideband, and frequency-noise displacement PSDs.
//! Mixing at angle phi and splitting by physical origin gives the budget
//! columns synthesized here; the cross term -2 c s Re(T) N is what pushes
//! the detected noise below the reference on one side of the resonance.
//!
//! Attribution convention: the coherent (field) part of each amplitude-type
//! noise stays under its own label via the factor (cos phi - sin phi ReT)^2,
//! while the dissipative mirror motion it drives, sin^2(phi) ImT^2 N, is
//! pooled under `backaction` — that column is the total radiation-pressure
//! driven motion, quantum and classical alike.

use std::fmt;

use crate::consts::REDUCED_PLANCK;
use crate::model::{MechanicalOscillator, NoiseEnvironment, QuadraturePair};
use crate::scenario::{Scenario, SqueezingReference};
use crate::{Error, Result};

/// Readout chain parameters: losses, local-oscillator sizing, homodyne
/// angle, and any flat displacement-equivalent sensing noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionChain {
    /// Total optical/electronic detection loss, fraction in [0, 1).
    pub detection_loss: f64,
    /// Signal power over local-oscillator power at the readout port, (0, 1).
    pub signal_to_lo_power_ratio: f64,
    /// Homodyne angle phi in radians, (-pi/2, pi/2].
    pub homodyne_angle: f64,
    /// Flat displacement-equivalent sensing noise, m^2/Hz.
    pub wideband_displacement_noise_psd: f64,
}

impl DetectionChain {
    pub fn new(
        detection_loss: f64,
        signal_to_lo_power_ratio: f64,
        homodyne_angle: f64,
        wideband_displacement_noise_psd: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&detection_loss) {
            return Err(Error::InvalidParameter {
                field: "detection_loss",
                reason: format!("must lie in [0, 1), got {detection_loss}"),
            });
        }
        if !(signal_to_lo_power_ratio > 0.0 && signal_to_lo_power_ratio < 1.0) {
            return Err(Error::InvalidParameter {
                field: "signal_to_lo_power_ratio",
                reason: format!("must lie in (0, 1), got {signal_to_lo_power_ratio}"),
            });
        }
        if !homodyne_angle.is_finite()
            || homodyne_angle <= -std::f64::consts::FRAC_PI_2
            || homodyne_angle > std::f64::consts::FRAC_PI_2
        {
            return Err(Error::InvalidParameter {
                field: "homodyne_angle",
                reason: format!("must lie in (-pi/2, pi/2], got {homodyne_angle}"),
            });
        }
        if !(wideband_displacement_noise_psd >= 0.0) || !wideband_displacement_noise_psd.is_finite()
        {
            return Err(Error::InvalidParameter {
                field: "wideband_displacement_noise_psd",
                reason: format!("must be finite and >= 0, got {wideband_displacement_noise_psd}"),
            });
        }
        Ok(Self {
            detection_loss,
            signal_to_lo_power_ratio,
            homodyne_angle,
            wideband_displacement_noise_psd,
        })
    }
}

/// Labels for the per-source budget columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(usize)]
pub enum SourceTag {
    Shot = 0,
    Backaction = 1,
    Thermal = 2,
    LaserAmplitude = 3,
    LaserFrequency = 4,
    LossVacuum = 5,
    BsVacuum = 6,
    InjectedClassical = 7,
}

impl SourceTag {
    pub const ALL: [SourceTag; 8] = [
        SourceTag::Shot,
        SourceTag::Backaction,
        SourceTag::Thermal,
        SourceTag::LaserAmplitude,
        SourceTag::LaserFrequency,
        SourceTag::LossVacuum,
        SourceTag::BsVacuum,
        SourceTag::InjectedClassical,
    ];

    /// Stable machine-readable column name.
    pub fn label(self) -> &'static str {
        match self {
            SourceTag::Shot => "shot",
            SourceTag::Backaction => "backaction",
            SourceTag::Thermal => "thermal",
            SourceTag::LaserAmplitude => "laser_amplitude",
            SourceTag::LaserFrequency => "laser_frequency",
            SourceTag::LossVacuum => "loss_vacuum",
            SourceTag::BsVacuum => "bs_vacuum",
            SourceTag::InjectedClassical => "injected_classical",
        }
    }
}

/// Which side of the mechanical resonance a feature sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceSide {
    BelowResonance,
    AboveResonance,
}

impl fmt::Display for ResonanceSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResonanceSide::BelowResonance => write!(f, "below resonance"),
            ResonanceSide::AboveResonance => write!(f, "above resonance"),
        }
    }
}

/// A synthesized homodyne spectrum with its per-source decomposition.
///
/// All PSDs are one-sided and in shot-noise units (vacuum = 1).  The
/// per-source columns sum to `total` exactly at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpectrum {
    pub frequency_hz: Vec<f64>,
    pub per_source: [Vec<f64>; 8],
    pub total: Vec<f64>,
    /// The level squeezing is quoted against, same units as `total`.
    pub reference: Vec<f64>,
    pub homodyne_angle: f64,
    /// Frequency window the squeezing metrics are restricted to (the
    /// injection band when classical noise is injected, otherwise `None`).
    pub metric_band_hz: Option<(f64, f64)>,
}

impl QuadratureSpectrum {
    pub fn len(&self) -> usize {
        self.frequency_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequency_hz.is_empty()
    }

    pub fn source(&self, tag: SourceTag) -> &[f64] {
        &self.per_source[tag as usize]
    }

    /// total / reference, pointwise.
    pub fn relative_psd(&self) -> Vec<f64> {
        self.total
            .iter()
            .zip(&self.reference)
            .map(|(t, r)| t / r)
            .collect()
    }
}

/// Squeezing/anti-squeezing summary of one synthesized spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingReport {
    /// Deepest total/reference, in dB (negative = below the reference).
    pub min_relative_psd_db: f64,
    pub at_frequency_hz: f64,
    pub side: ResonanceSide,
    /// Largest total/reference, in dB.
    pub max_relative_psd_db: f64,
    pub max_at_frequency_hz: f64,
}

/// Band-limited white force noise, N^2/Hz one-sided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectedForcePsd {
    pub force_psd_n2_per_hz: f64,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl InjectedForcePsd {
    /// Top-hat evaluation at frequency `f_hz`.
    pub fn at(&self, f_hz: f64) -> f64 {
        if f_hz >= self.lo_hz && f_hz <= self.hi_hz {
            self.force_psd_n2_per_hz
        } else {
            0.0
        }
    }
}

/// Resolve the configured classical injection into an absolute force PSD.
///
/// The level is quoted relative to the thermal force PSD of `osc` in the
/// environment `env`; the band must contain the mechanical resonance.
pub fn inject_classical_noise(
    env: &NoiseEnvironment,
    osc: &MechanicalOscillator,
) -> Result<InjectedForcePsd> {
    let inj = env.classical_injection.ok_or_else(|| {
        Error::Domain("no classical injection configured in this environment".into())
    })?;
    let lo_hz = inj.center_frequency_hz - inj.bandwidth_hz / 2.0;
    let hi_hz = inj.center_frequency_hz + inj.bandwidth_hz / 2.0;
    let resonance_hz = osc.resonance_frequency_hz();
    if !(lo_hz <= resonance_hz && resonance_hz <= hi_hz) {
        return Err(Error::InjectionBandExcludesResonance {
            lo_hz,
            hi_hz,
            resonance_hz,
        });
    }
    let thermal = osc.thermal_force_psd(env, osc.resonance_angular_frequency)?;
    Ok(InjectedForcePsd {
        force_psd_n2_per_hz: thermal * 10f64.powf(inj.force_psd_over_thermal_db / 10.0),
        lo_hz,
        hi_hz,
    })
}

/// Frequency-independent scenario state plus the per-frequency transfer
/// quantities, precomputed once so that many homodyne angles can be
/// synthesized cheaply from the same grid.
#[derive(Debug, Clone)]
pub struct SpectrumKernel {
    frequency_hz: Vec<f64>,
    re_transfer: Vec<f64>,
    im_transfer: Vec<f64>,
    /// G(w) = S_F0 tau^2 / hbar^2, phase-quadrature PSD per m^2/Hz.
    gain: Vec<f64>,
    /// Thermal + wideband displacement PSD, m^2/Hz.
    thermal_x: Vec<f64>,
    /// Flat displacement-equivalent laser frequency noise, m^2/Hz.
    frequency_noise_x: f64,
    /// Injected noise in amplitude-quadrature units, per point.
    amplitude_injection: Vec<f64>,
    amplitude_factor: f64,
    detection_loss: f64,
    /// Fraction of the detected phase vacuum entering via cavity losses.
    loss_weight: f64,
    reference: SqueezingReference,
    metric_band_hz: Option<(f64, f64)>,
}

impl SpectrumKernel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let osc = &scenario.oscillator;
        let env = &scenario.environment;
        let grid = scenario.grid.build(osc)?;
        let derived = scenario.cavity.derive(&scenario.laser);
        let s_f0 = derived.backaction_force_psd(&scenario.laser);
        let kappa = derived.half_linewidth_angular;
        let injection = match env.classical_injection {
            Some(_) => Some(inject_classical_noise(env, osc)?),
            None => None,
        };
        let wideband = scenario.detection.wideband_displacement_noise_psd;

        let n = grid.len();
        let mut re_transfer = Vec::with_capacity(n);
        let mut im_transfer = Vec::with_capacity(n);
        let mut gain = Vec::with_capacity(n);
        let mut thermal_x = Vec::with_capacity(n);
        let mut amplitude_injection = Vec::with_capacity(n);
        for &f in &grid {
            let omega = std::f64::consts::TAU * f;
            let tau_sq = 1.0 / (1.0 + (omega / kappa).powi(2));
            let chi = osc.susceptibility(omega).value();
            let scale = s_f0 * tau_sq / REDUCED_PLANCK;
            re_transfer.push(scale * chi.re);
            im_transfer.push(scale * chi.im);
            gain.push(scale / REDUCED_PLANCK);
            thermal_x.push(osc.thermal_displacement_psd(env, omega)? + wideband);
            amplitude_injection.push(match injection {
                Some(inj) => inj.at(f) / (s_f0 * tau_sq),
                None => 0.0,
            });
        }

        let metric_band_hz = injection.map(|inj| {
            (
                inj.lo_hz.max(grid[0]),
                inj.hi_hz.min(*grid.last().expect("grid is non-empty")),
            )
        });

        Ok(Self {
            frequency_hz: grid,
            re_transfer,
            im_transfer,
            gain,
            thermal_x,
            frequency_noise_x: scenario.frequency_noise_displacement_psd(),
            amplitude_injection,
            amplitude_factor: scenario.laser.amplitude_noise_factor,
            detection_loss: scenario.detection.detection_loss,
            loss_weight: derived.reflection_dip,
            reference: scenario.reference,
            metric_band_hz,
        })
    }

    pub fn frequency_hz(&self) -> &[f64] {
        &self.frequency_hz
    }

    /// Synthesize the budget at homodyne angle `phi` (radians).
    pub fn synthesize(&self, phi: f64) -> Result<QuadratureSpectrum> {
        if !phi.is_finite() {
            return Err(Error::InvalidParameter {
                field: "homodyne_angle",
                reason: format!("must be finite, got {phi}"),
            });
        }
        let (s, c) = phi.sin_cos();
        let d = 1.0 - self.detection_loss;
        let ell = self.detection_loss;
        let a_excess = self.amplitude_factor - 1.0;
        let w_loss = self.loss_weight;
        let w_in = 1.0 - w_loss;

        let n_pts = self.frequency_hz.len();
        let mut per_source: [Vec<f64>; 8] = std::array::from_fn(|_| Vec::with_capacity(n_pts));
        let mut total = Vec::with_capacity(n_pts);
        let mut reference = Vec::with_capacity(n_pts);

        for i in 0..n_pts {
            let re_t = self.re_transfer[i];
            let im_t = self.im_transfer[i];
            let g = self.gain[i];
            let a_inj = self.amplitude_injection[i];
            let n_amp = self.amplitude_factor + a_inj;
            let base = (c - s * re_t) * (c - s * re_t);
            let s_sq = s * s;

            let shot = d * base;
            let backaction = d * s_sq * im_t * im_t * n_amp;
            let thermal = d * s_sq * g * self.thermal_x[i];
            let laser_amplitude = d * base * a_excess;
            let laser_frequency = d * s_sq * g * self.frequency_noise_x;
            let loss_vacuum = d * s_sq * w_loss;
            let bs_vacuum = ell + d * s_sq * w_in;
            let injected = d * base * a_inj;

            per_source[SourceTag::Shot as usize].push(shot);
            per_source[SourceTag::Backaction as usize].push(backaction);
            per_source[SourceTag::Thermal as usize].push(thermal);
            per_source[SourceTag::LaserAmplitude as usize].push(laser_amplitude);
            per_source[SourceTag::LaserFrequency as usize].push(laser_frequency);
            per_source[SourceTag::LossVacuum as usize].push(loss_vacuum);
            per_source[SourceTag::BsVacuum as usize].push(bs_vacuum);
            per_source[SourceTag::InjectedClassical as usize].push(injected);
            total.push(
                shot + backaction
                    + thermal
                    + laser_amplitude
                    + laser_frequency
                    + loss_vacuum
                    + bs_vacuum
                    + injected,
            );
            reference.push(match self.reference {
                SqueezingReference::VacuumShot => 1.0,
                // wing level of this angle's own trace: cos^2(phi) times the
                // amplitude-quadrature plateau playing the role of shot noise
                SqueezingReference::AmplitudeWings => c * c * (d * n_amp + ell),
            });
        }

        Ok(QuadratureSpectrum {
            frequency_hz: self.frequency_hz.clone(),
            per_source,
            total,
            reference,
            homodyne_angle: phi,
            metric_band_hz: self.metric_band_hz,
        })
    }
}

/// The amplitude/phase quadrature pair at a single angular frequency.
pub fn quadrature_pair(scenario: &Scenario, omega: f64) -> Result<QuadraturePair> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!(
            "quadrature pair requires omega > 0, got {omega}"
        )));
    }
    scenario.validate()?;
    let osc = &scenario.oscillator;
    let env = &scenario.environment;
    let derived = scenario.cavity.derive(&scenario.laser);
    let s_f0 = derived.backaction_force_psd(&scenario.laser);
    let kappa = derived.half_linewidth_angular;
    let tau_sq = 1.0 / (1.0 + (omega / kappa).powi(2));
    let transfer = osc.susceptibility(omega).value() * (s_f0 * tau_sq / REDUCED_PLANCK);
    let gain = s_f0 * tau_sq / (REDUCED_PLANCK * REDUCED_PLANCK);

    let a_inj = match env.classical_injection {
        Some(_) => {
            inject_classical_noise(env, osc)?.at(omega / std::f64::consts::TAU) / (s_f0 * tau_sq)
        }
        None => 0.0,
    };
    let n_amp = scenario.laser.amplitude_noise_factor + a_inj;
    let x_total = osc.thermal_displacement_psd(env, omega)?
        + scenario.detection.wideband_displacement_noise_psd
        + scenario.frequency_noise_displacement_psd();

    let d = 1.0 - scenario.detection.detection_loss;
    let ell = scenario.detection.detection_loss;
    Ok(QuadraturePair {
        amplitude_psd: d * n_amp + ell,
        phase_psd: d * (1.0 + transfer.norm_sqr() * n_amp + gain * x_total) + ell,
        cross_psd: transfer * (d * n_amp),
    })
}

/// Synthesize the full budget for `scenario` at homodyne angle `phi`.
pub fn synthesize_spectrum(scenario: &Scenario, phi: f64) -> Result<QuadratureSpectrum> {
    SpectrumKernel::new(scenario)?.synthesize(phi)
}

/// Mirror displacement PSD (m^2/Hz): thermal motion, classically driven
/// motion, and wideband sensing noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementSpectrum {
    pub frequency_hz: Vec<f64>,
    pub psd_m2_per_hz: Vec<f64>,
}

pub fn displacement_spectrum(scenario: &Scenario) -> Result<DisplacementSpectrum> {
    scenario.validate()?;
    let osc = &scenario.oscillator;
    let env = &scenario.environment;
    let grid = scenario.grid.build(osc)?;
    let injection = match env.classical_injection {
        Some(_) => Some(inject_classical_noise(env, osc)?),
        None => None,
    };
    let wideband = scenario.detection.wideband_displacement_noise_psd;
    let mut psd = Vec::with_capacity(grid.len());
    for &f in &grid {
        let omega = std::f64::consts::TAU * f;
        let driven = match injection {
            Some(inj) => osc.susceptibility(omega).magnitude_squared() * inj.at(f),
            None => 0.0,
        };
        psd.push(osc.thermal_displacement_psd(env, omega)? + driven + wideband);
    }
    Ok(DisplacementSpectrum {
        frequency_hz: grid,
        psd_m2_per_hz: psd,
    })
}

/// Locate the deepest and highest total/reference points of a spectrum.
///
/// The grid must bracket the resonance by at least an octave on both sides
/// ([f_M/2, 2 f_M]); when the spectrum carries a metric band (classical
/// injection), the search is restricted to it so that the quoted extrema
/// describe the driven measurement band rather than distant wings.
pub fn squeezing_metrics(
    spectrum: &QuadratureSpectrum,
    resonance_hz: f64,
) -> Result<SqueezingReport> {
    if !(resonance_hz > 0.0) || !resonance_hz.is_finite() {
        return Err(Error::Domain(format!(
            "squeezing metrics require a positive resonance frequency, got {resonance_hz}"
        )));
    }
    if spectrum.is_empty() {
        return Err(Error::GridCoverage("spectrum has no points".into()));
    }
    let f_lo = spectrum.frequency_hz[0];
    let f_hi = *spectrum.frequency_hz.last().expect("non-empty");
    if f_lo > resonance_hz / 2.0 * (1.0 + 1e-9) || f_hi < 2.0 * resonance_hz * (1.0 - 1e-9) {
        return Err(Error::GridCoverage(format!(
            "grid [{f_lo}, {f_hi}] Hz must span [{}, {}] Hz around the resonance",
            resonance_hz / 2.0,
            2.0 * resonance_hz
        )));
    }

    let in_domain = |f: f64| match spectrum.metric_band_hz {
        Some((lo, hi)) => f >= lo && f <= hi,
        None => true,
    };

    let mut min_rel = f64::INFINITY;
    let mut min_f = f64::NAN;
    let mut max_rel = f64::NEG_INFINITY;
    let mut max_f = f64::NAN;
    for i in 0..spectrum.len() {
        let f = spectrum.frequency_hz[i];
        if !in_domain(f) {
            continue;
        }
        let rel = spectrum.total[i] / spectrum.reference[i];
        if rel < min_rel {
            min_rel = rel;
            min_f = f;
        }
        if rel > max_rel {
            max_rel = rel;
            max_f = f;
        }
    }
    if !min_f.is_finite() {
        return Err(Error::GridCoverage(
            "metric band contains no grid points".into(),
        ));
    }

    let side = if min_f < resonance_hz {
        ResonanceSide::BelowResonance
    } else {
        ResonanceSide::AboveResonance
    };
    Ok(SqueezingReport {
        min_relative_psd_db: 10.0 * min_rel.log10(),
        at_frequency_hz: min_f,
        side,
        max_relative_psd_db: 10.0 * max_rel.log10(),
        max_at_frequency_hz: max_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::LaserDrive;
    use crate::model::ClassicalInjection;
    use crate::scenario::GridSpec;
    use proptest::prelude::*;

    fn assert_close(actual: f64, expected: f64, rel: f64) {
        let scale = expected.abs().max(1e-300);
        assert!(
            (actual - expected).abs() <= rel * scale,
            "expected {expected:e}, got {actual:e} (rel {:e})",
            (actual - expected).abs() / scale
        );
    }

    /// Practically uncoupled probe: vanishing power so radiation pressure
    /// and correlations are negligible, huge amplitude noise so the
    /// coherent quadrature dominates everything else.
    fn weak_coupling() -> Scenario {
        let mut s = Scenario::classical_analog();
        s.environment = NoiseEnvironment::new(300.0).unwrap();
        s.laser = LaserDrive::new(1.064e-6, 1e-12, 1e6, 0.0).unwrap();
        s.detection = DetectionChain::new(0.0, 0.01, 0.0, 0.0).unwrap();
        s.reference = SqueezingReference::VacuumShot;
        s
    }

    #[test]
    fn columns_sum_to_total_exactly() {
        for scenario in [Scenario::classical_analog(), Scenario::quantum_budget()] {
            let spec = synthesize_spectrum(&scenario, scenario.detection.homodyne_angle).unwrap();
            for i in 0..spec.len() {
                let sum: f64 = SourceTag::ALL.iter().map(|&t| spec.source(t)[i]).sum();
                assert_close(sum, spec.total[i], 1e-12);
            }
        }
    }

    #[test]
    fn columns_match_quadrature_pair_mix() {
        for scenario in [Scenario::classical_analog(), Scenario::quantum_budget()] {
            let phi = scenario.detection.homodyne_angle;
            let spec = synthesize_spectrum(&scenario, phi).unwrap();
            for &i in &[0usize, spec.len() / 3, spec.len() / 2, spec.len() - 1] {
                let omega = std::f64::consts::TAU * spec.frequency_hz[i];
                let pair = quadrature_pair(&scenario, omega).unwrap();
                assert_close(pair.mix(phi), spec.total[i], 1e-12);
            }
        }
    }

    #[test]
    fn amplitude_quadrature_is_flat() {
        // At phi = 0 only the amplitude quadrature is detected: no mirror
        // signal, no phase vacuum, just D*A + loss, flat across the grid.
        let scenario = Scenario::quantum_budget();
        let spec = synthesize_spectrum(&scenario, 0.0).unwrap();
        let expected = 0.99 * 5.0 + 0.01;
        for &t in &spec.total {
            assert_close(t, expected, 1e-12);
        }
    }

    #[test]
    fn wings_follow_cosine_squared() {
        let scenario = weak_coupling();
        let kernel = SpectrumKernel::new(&scenario).unwrap();
        let reference = kernel.synthesize(0.0).unwrap();
        let f_m = scenario.oscillator.resonance_frequency_hz();
        let lw = scenario.oscillator.linewidth_hz();
        for deg in [-60.0, -30.0, 30.0, 60.0] {
            let phi = f64::to_radians(deg);
            let spec = kernel.synthesize(phi).unwrap();
            let c2 = phi.cos().powi(2);
            for i in 0..spec.len() {
                if (spec.frequency_hz[i] - f_m).abs() <= 50.0 * lw {
                    continue;
                }
                assert_close(spec.total[i] / reference.total[i], c2, 1e-3);
            }
        }
    }

    #[test]
    fn no_coupling_total_never_falls_below_projected_shot() {
        let scenario = weak_coupling();
        let spec = synthesize_spectrum(&scenario, 0.7).unwrap();
        let floor = 0.7f64.cos().powi(2) * 1e6; // cos^2 phi * amplitude PSD
        for &t in &spec.total {
            assert!(t >= floor * (1.0 - 1e-9), "total {t} below floor {floor}");
        }
    }

    #[test]
    fn classical_preset_dips_below_the_wing_reference() {
        let scenario = Scenario::classical_analog();
        let spec = synthesize_spectrum(&scenario, scenario.detection.homodyne_angle).unwrap();
        let report =
            squeezing_metrics(&spec, scenario.oscillator.resonance_frequency_hz()).unwrap();
        assert!(
            report.min_relative_psd_db < -6.0 && report.min_relative_psd_db > -12.0,
            "min {} dB",
            report.min_relative_psd_db
        );
        assert!(report.max_relative_psd_db > 10.0);
        // extrema must be quoted inside the driven band
        let (lo, hi) = spec.metric_band_hz.unwrap();
        assert!(report.at_frequency_hz >= lo && report.at_frequency_hz <= hi);
        assert!(report.max_at_frequency_hz >= lo && report.max_at_frequency_hz <= hi);
    }

    #[test]
    fn dip_side_flips_with_homodyne_angle_sign() {
        let scenario = Scenario::classical_analog();
        let kernel = SpectrumKernel::new(&scenario).unwrap();
        let f_m = scenario.oscillator.resonance_frequency_hz();
        let neg = squeezing_metrics(&kernel.synthesize(-0.7).unwrap(), f_m).unwrap();
        let pos = squeezing_metrics(&kernel.synthesize(0.7).unwrap(), f_m).unwrap();
        assert_eq!(neg.side, ResonanceSide::AboveResonance);
        assert_eq!(pos.side, ResonanceSide::BelowResonance);
        assert_ne!(neg.side, pos.side);
    }

    #[test]
    fn quantum_preset_budget() {
        let scenario = Scenario::quantum_budget();
        let spec = synthesize_spectrum(&scenario, scenario.detection.homodyne_angle).unwrap();
        let f_m = scenario.oscillator.resonance_frequency_hz();
        let report = squeezing_metrics(&spec, f_m).unwrap();
        assert!(
            report.min_relative_psd_db < -0.5 && report.min_relative_psd_db > -3.5,
            "min {} dB",
            report.min_relative_psd_db
        );
        assert_eq!(report.side, ResonanceSide::BelowResonance);
        assert!((report.at_frequency_hz - f_m).abs() < 1000.0);
        // anti-squeezing peaks on the thermal line
        assert!(
            (report.max_at_frequency_hz - f_m).abs() < 2.0 * scenario.oscillator.linewidth_hz()
        );
        assert!(report.max_relative_psd_db > 30.0);
        // every budget line except the (absent) injection is alive somewhere
        for tag in SourceTag::ALL {
            let max = spec.source(tag).iter().cloned().fold(0.0f64, f64::max);
            if tag == SourceTag::InjectedClassical {
                assert_eq!(max, 0.0);
            } else {
                assert!(max > 0.0, "{} column is identically zero", tag.label());
            }
        }
    }

    #[test]
    fn injected_noise_raises_displacement_peak_by_its_headroom() {
        let scenario = Scenario::classical_analog();
        let driven = displacement_spectrum(&scenario).unwrap();
        let mut quiet_scenario = scenario;
        quiet_scenario.environment = NoiseEnvironment::new(300.0).unwrap();
        let quiet = displacement_spectrum(&quiet_scenario).unwrap();
        let f_m = scenario.oscillator.resonance_frequency_hz();
        let i = driven
            .frequency_hz
            .iter()
            .position(|&f| f == f_m)
            .expect("resonance is on the grid");
        // 10 dB of injected force over thermal -> 10*log10(11) dB peak rise
        let rise_db = 10.0 * (driven.psd_m2_per_hz[i] / quiet.psd_m2_per_hz[i]).log10();
        assert_close(rise_db, 10.0 * 11f64.log10(), 1e-9);

        // outside the band the driven and quiet spectra agree exactly
        let j = driven
            .frequency_hz
            .iter()
            .position(|&f| f > f_m + 10_000.0)
            .unwrap();
        assert_eq!(driven.psd_m2_per_hz[j], quiet.psd_m2_per_hz[j]);
    }

    #[test]
    fn zero_db_injection_doubles_the_peak() {
        let mut scenario = Scenario::classical_analog();
        let mut env = NoiseEnvironment::new(300.0).unwrap();
        env = env
            .with_injection(ClassicalInjection {
                center_frequency_hz: 249_300.0,
                bandwidth_hz: 15_000.0,
                force_psd_over_thermal_db: 0.0,
            })
            .unwrap();
        scenario.environment = env;
        let driven = displacement_spectrum(&scenario).unwrap();
        let mut quiet_scenario = scenario;
        quiet_scenario.environment = NoiseEnvironment::new(300.0).unwrap();
        let quiet = displacement_spectrum(&quiet_scenario).unwrap();
        let i = driven
            .frequency_hz
            .iter()
            .position(|&f| f == 249_300.0)
            .unwrap();
        let rise_db = 10.0 * (driven.psd_m2_per_hz[i] / quiet.psd_m2_per_hz[i]).log10();
        assert_close(rise_db, 10.0 * 2f64.log10(), 1e-9);
    }

    #[test]
    fn injection_band_must_contain_resonance() {
        let osc = MechanicalOscillator::from_frequency_hz(1.1e-7, 249_300.0, 5500.0).unwrap();
        let env = NoiseEnvironment::new(300.0)
            .unwrap()
            .with_injection(ClassicalInjection {
                center_frequency_hz: 300_000.0,
                bandwidth_hz: 1000.0,
                force_psd_over_thermal_db: 10.0,
            })
            .unwrap();
        match inject_classical_noise(&env, &osc) {
            Err(Error::InjectionBandExcludesResonance { resonance_hz, .. }) => {
                assert_eq!(resonance_hz, 249_300.0)
            }
            other => panic!("expected band error, got {other:?}"),
        }
        let quiet = NoiseEnvironment::new(300.0).unwrap();
        assert!(matches!(
            inject_classical_noise(&quiet, &osc),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn warming_the_bath_only_raises_the_spectrum() {
        let cold = Scenario::quantum_budget();
        let mut warm = cold;
        warm.environment = NoiseEnvironment::new(42.0).unwrap();
        let phi = cold.detection.homodyne_angle;
        let spec_cold = synthesize_spectrum(&cold, phi).unwrap();
        let spec_warm = synthesize_spectrum(&warm, phi).unwrap();
        for i in 0..spec_cold.len() {
            assert!(spec_warm.total[i] >= spec_cold.total[i] * (1.0 - 1e-12));
        }
        let f_m = cold.oscillator.resonance_frequency_hz();
        let r_cold = squeezing_metrics(&spec_cold, f_m).unwrap();
        let r_warm = squeezing_metrics(&spec_warm, f_m).unwrap();
        assert!(r_warm.min_relative_psd_db > r_cold.min_relative_psd_db);
    }

    #[test]
    fn metrics_demand_an_octave_either_side() {
        let mut scenario = Scenario::quantum_budget();
        scenario.grid = GridSpec {
            min_hz: 90_000.0,
            max_hz: 110_000.0,
            log_points: 101,
            refine_half_width_linewidths: 0.0,
            refine_points: 0,
        };
        let spec = synthesize_spectrum(&scenario, 0.01).unwrap();
        assert!(matches!(
            squeezing_metrics(&spec, 1e5),
            Err(Error::GridCoverage(_))
        ));
    }

    #[test]
    fn shot_column_is_projected_vacuum_in_the_wings() {
        let scenario = weak_coupling();
        let phi = -0.6f64;
        let spec = synthesize_spectrum(&scenario, phi).unwrap();
        let f_m = scenario.oscillator.resonance_frequency_hz();
        let lw = scenario.oscillator.linewidth_hz();
        let c2 = phi.cos().powi(2);
        for i in 0..spec.len() {
            if (spec.frequency_hz[i] - f_m).abs() <= 50.0 * lw {
                continue;
            }
            assert_close(spec.source(SourceTag::Shot)[i], c2, 1e-6);
        }
    }

    #[test]
    fn synthesize_rejects_non_finite_angle() {
        let kernel = SpectrumKernel::new(&Scenario::quantum_budget()).unwrap();
        assert!(kernel.synthesize(f64::NAN).is_err());
        assert!(kernel.synthesize(f64::INFINITY).is_err());
    }

    proptest! {
        #[test]
        fn budget_is_nonnegative_and_closed(
            phi in -1.4f64..1.4,
            temp in 1.0f64..600.0,
            power_mw in 0.1f64..100.0,
            amp in 1.0f64..10.0,
            loss in 0.0f64..0.5,
        ) {
            let mut scenario = Scenario::quantum_budget();
            scenario.environment = NoiseEnvironment::new(temp).unwrap();
            scenario.laser = LaserDrive::new(1.064e-6, power_mw * 1e-3, amp, 1.0).unwrap();
            scenario.detection = DetectionChain::new(loss, 0.01, 1e-4, 0.0).unwrap();
            scenario.grid = GridSpec {
                min_hz: 2.5e4,
                max_hz: 4e5,
                log_points: 33,
                refine_half_width_linewidths: 5.0,
                refine_points: 101,
            };
            let spec = synthesize_spectrum(&scenario, phi).unwrap();
            for i in 0..spec.len() {
                let mut sum = 0.0;
                for tag in SourceTag::ALL {
                    let v = spec.source(tag)[i];
                    prop_assert!(v.is_finite() && v >= 0.0);
                    sum += v;
                }
                prop_assert!((sum - spec.total[i]).abs() <= 1e-12 * spec.total[i].abs());
            }
        }

        #[test]
        fn pair_respects_cauchy_schwarz(
            omega_khz in 10.0f64..2000.0,
            power_mw in 0.1f64..100.0,
            amp in 1.0f64..10.0,
        ) {
            let mut scenario = Scenario::quantum_budget();
            scenario.laser = LaserDrive::new(1.064e-6, power_mw * 1e-3, amp, 1.0).unwrap();
            let pair = quadrature_pair(&scenario, omega_khz * 1e3 * std::f64::consts::TAU).unwrap();
            prop_assert!(pair.cross_psd.norm_sqr() <= pair.amplitude_psd * pair.phase_psd * (1.0 + 1e-12));
        }
    }
}
