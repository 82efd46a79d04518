//! Scenario configuration files.
//!
//! A config is TOML (or JSON) with one table per scenario section; every
//! numeric key carries its unit in the name.  Sections are all-or-nothing:
//! a section present in the file replaces the preset's section completely,
//! a section absent falls back to the preset (so a bare `preset = "..."`
//! file is valid, and a preset-less file must provide every section).
//! The same types serialize back out as the scenario echo in run
//! summaries, so a summary's `scenario` block is itself a loadable config.

use std::path::Path;

use serde::{Deserialize, Serialize};

use pondero::{
    excess_loss_for_finesse, mode_matching_for_dip, ClassicalInjection, DetectionChain, GridSpec,
    LaserDrive, MechanicalOscillator, NoiseEnvironment, OpticalCavity, Scenario,
    SqueezingReference,
};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillator: Option<OscillatorConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub laser: Option<LaserConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorConfig {
    pub resonance_frequency_khz: f64,
    pub quality_factor: f64,
    pub effective_mass_kg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub bath_temperature_k: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injection: Option<InjectionConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionConfig {
    pub center_frequency_khz: f64,
    pub bandwidth_khz: f64,
    pub level_over_thermal_db: f64,
}

/// Cavity losses accept either the physical pair (excess loss + mode
/// matching) or the measured pair (finesse + reflection dip), one from
/// each column.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub length_mm: f64,
    pub input_transmissivity_ppm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roundtrip_excess_loss_ppm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finesse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_matching: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reflection_dip: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserConfig {
    pub wavelength_nm: f64,
    pub input_power_mw: f64,
    pub amplitude_noise_factor: f64,
    pub frequency_noise_psd_hz2_per_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    pub detection_loss: f64,
    pub signal_to_lo_power_ratio: f64,
    pub homodyne_angle_deg: f64,
    pub wideband_displacement_noise_m2_per_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min_khz: f64,
    pub max_khz: f64,
    pub log_points: usize,
    pub refine_half_width_linewidths: f64,
    pub refine_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Displacement-equivalent laser frequency noise override, m^2/Hz;
    /// omit to derive it from the laser's frequency-noise PSD
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_noise_displacement_m2_per_hz: Option<f64>,
    /// "vacuum-shot" or "amplitude-wings"
    pub squeezing_reference: String,
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_json {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

/// The presets in config-file vocabulary.  Building one of these yields
/// the corresponding `Scenario` preset bit for bit: the preset
/// constructors in the library spell their unit conversions exactly the
/// way `build_resolved` does.
pub fn canonical_preset_config(name: &str) -> Result<ScenarioConfig, CliError> {
    let config = match name {
        "paper-classical" => ScenarioConfig {
            preset: None,
            oscillator: Some(OscillatorConfig {
                resonance_frequency_khz: 249.3,
                quality_factor: 5500.0,
                effective_mass_kg: 1.1e-7,
            }),
            environment: Some(EnvironmentConfig {
                bath_temperature_k: 300.0,
                injection: Some(InjectionConfig {
                    center_frequency_khz: 249.3,
                    bandwidth_khz: 15.0,
                    level_over_thermal_db: 10.0,
                }),
            }),
            cavity: Some(CavityConfig {
                length_mm: 12.2,
                input_transmissivity_ppm: 110.0,
                roundtrip_excess_loss_ppm: None,
                finesse: Some(1e4),
                mode_matching: None,
                reflection_dip: Some(0.38),
            }),
            laser: Some(LaserConfig {
                wavelength_nm: 1064.0,
                input_power_mw: 5.6,
                amplitude_noise_factor: 1.0,
                frequency_noise_psd_hz2_per_hz: 0.0,
            }),
            detection: Some(DetectionConfig {
                detection_loss: 0.0,
                signal_to_lo_power_ratio: 0.01,
                homodyne_angle_deg: -44.0,
                wideband_displacement_noise_m2_per_hz: 0.0,
            }),
            grid: Some(GridConfig {
                min_khz: 62.325,
                max_khz: 997.2,
                log_points: 801,
                refine_half_width_linewidths: 25.0,
                refine_points: 20_001,
            }),
            model: Some(ModelConfig {
                frequency_noise_displacement_m2_per_hz: None,
                squeezing_reference: "amplitude-wings".into(),
            }),
        },
        "paper-quantum" => ScenarioConfig {
            preset: None,
            oscillator: Some(OscillatorConfig {
                resonance_frequency_khz: 100.0,
                quality_factor: 1e5,
                effective_mass_kg: 5e-8,
            }),
            environment: Some(EnvironmentConfig {
                bath_temperature_k: 4.2,
                injection: None,
            }),
            cavity: Some(CavityConfig {
                length_mm: 6.0,
                input_transmissivity_ppm: 50.0,
                roundtrip_excess_loss_ppm: Some(40.0),
                finesse: None,
                mode_matching: Some(1.0),
                reflection_dip: None,
            }),
            laser: Some(LaserConfig {
                wavelength_nm: 1064.0,
                input_power_mw: 30.0,
                amplitude_noise_factor: 5.0,
                frequency_noise_psd_hz2_per_hz: 1.0,
            }),
            detection: Some(DetectionConfig {
                detection_loss: 0.01,
                signal_to_lo_power_ratio: 0.01,
                homodyne_angle_deg: (1e-4f64).to_degrees(),
                wideband_displacement_noise_m2_per_hz: 0.0,
            }),
            grid: Some(GridConfig {
                min_khz: 25.0,
                max_khz: 400.0,
                log_points: 801,
                refine_half_width_linewidths: 1500.0,
                refine_points: 12_001,
            }),
            model: Some(ModelConfig {
                frequency_noise_displacement_m2_per_hz: Some(1e-33),
                squeezing_reference: "vacuum-shot".into(),
            }),
        },
        other => {
            return Err(CliError::Validation(format!(
                "unknown preset '{other}' (expected paper-classical or paper-quantum)"
            )))
        }
    };
    Ok(config)
}

fn validation<T>(section: &str, result: pondero::Result<T>) -> Result<T, CliError> {
    result.map_err(|e| CliError::Validation(format!("{section}: {e}")))
}

/// Resolve a loaded config against the preset selection: preset sections
/// first, then whole-section replacements from the file.  The result has
/// every section populated with the literal numbers a rerun would load —
/// it is the scenario echo written into run summaries, and resolving it
/// again reproduces it verbatim.
pub fn resolve_config(
    file: &ScenarioConfig,
    preset_flag: Option<&str>,
) -> Result<(ScenarioConfig, Option<String>), CliError> {
    let preset_name = match (preset_flag, file.preset.as_deref()) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Validation(format!(
                "--preset {a} conflicts with config preset = \"{b}\""
            )))
        }
        (Some(a), _) => Some(a),
        (None, b) => b,
    };
    let mut resolved = match preset_name {
        Some(name) => canonical_preset_config(name)?,
        None => ScenarioConfig::default(),
    };
    if file.oscillator.is_some() {
        resolved.oscillator = file.oscillator.clone();
    }
    if file.environment.is_some() {
        resolved.environment = file.environment.clone();
    }
    if file.cavity.is_some() {
        resolved.cavity = file.cavity.clone();
    }
    if file.laser.is_some() {
        resolved.laser = file.laser.clone();
    }
    if file.detection.is_some() {
        resolved.detection = file.detection.clone();
    }
    if file.grid.is_some() {
        resolved.grid = file.grid.clone();
    }
    if file.model.is_some() {
        resolved.model = file.model.clone();
    }
    // the model section is optional even without a preset
    if resolved.model.is_none() {
        resolved.model = Some(ModelConfig {
            frequency_noise_displacement_m2_per_hz: None,
            squeezing_reference: "vacuum-shot".into(),
        });
    }
    for (name, present) in [
        ("oscillator", resolved.oscillator.is_some()),
        ("environment", resolved.environment.is_some()),
        ("cavity", resolved.cavity.is_some()),
        ("laser", resolved.laser.is_some()),
        ("detection", resolved.detection.is_some()),
        ("grid", resolved.grid.is_some()),
    ] {
        if !present {
            return Err(missing(name));
        }
    }
    Ok((resolved, preset_name.map(String::from)))
}

/// Build the scenario a fully resolved config describes.
pub fn build_resolved(resolved: &ScenarioConfig) -> Result<Scenario, CliError> {
    let c = resolved
        .oscillator
        .as_ref()
        .ok_or_else(|| missing("oscillator"))?;
    let oscillator = validation(
        "oscillator",
        MechanicalOscillator::from_frequency_hz(
            c.effective_mass_kg,
            c.resonance_frequency_khz * 1e3,
            c.quality_factor,
        ),
    )?;

    let c = resolved
        .environment
        .as_ref()
        .ok_or_else(|| missing("environment"))?;
    let environment = {
        let env = validation("environment", NoiseEnvironment::new(c.bath_temperature_k))?;
        match &c.injection {
            Some(inj) => validation(
                "environment.injection",
                env.with_injection(ClassicalInjection {
                    center_frequency_hz: inj.center_frequency_khz * 1e3,
                    bandwidth_hz: inj.bandwidth_khz * 1e3,
                    force_psd_over_thermal_db: inj.level_over_thermal_db,
                }),
            )?,
            None => env,
        }
    };

    let c = resolved.cavity.as_ref().ok_or_else(|| missing("cavity"))?;
    let cavity = {
        let transmissivity = c.input_transmissivity_ppm / 1e6;
        let excess = match (c.roundtrip_excess_loss_ppm, c.finesse) {
            (Some(ppm), None) => ppm / 1e6,
            (None, Some(finesse)) => validation(
                "cavity.finesse",
                excess_loss_for_finesse(finesse, transmissivity),
            )?,
            _ => {
                return Err(CliError::Validation(
                    "cavity: provide exactly one of roundtrip_excess_loss_ppm or finesse".into(),
                ))
            }
        };
        let mode_matching = match (c.mode_matching, c.reflection_dip) {
            (Some(mm), None) => mm,
            (None, Some(dip)) => validation(
                "cavity.reflection_dip",
                mode_matching_for_dip(dip, transmissivity, excess),
            )?,
            _ => {
                return Err(CliError::Validation(
                    "cavity: provide exactly one of mode_matching or reflection_dip".into(),
                ))
            }
        };
        validation(
            "cavity",
            OpticalCavity::new(c.length_mm / 1e3, transmissivity, excess, mode_matching),
        )?
    };

    let c = resolved.laser.as_ref().ok_or_else(|| missing("laser"))?;
    let laser = validation(
        "laser",
        LaserDrive::new(
            c.wavelength_nm / 1e9,
            c.input_power_mw / 1e3,
            c.amplitude_noise_factor,
            c.frequency_noise_psd_hz2_per_hz,
        ),
    )?;

    let c = resolved
        .detection
        .as_ref()
        .ok_or_else(|| missing("detection"))?;
    let detection = validation(
        "detection",
        DetectionChain::new(
            c.detection_loss,
            c.signal_to_lo_power_ratio,
            c.homodyne_angle_deg.to_radians(),
            c.wideband_displacement_noise_m2_per_hz,
        ),
    )?;

    let c = resolved.grid.as_ref().ok_or_else(|| missing("grid"))?;
    let grid = GridSpec {
        min_hz: c.min_khz * 1e3,
        max_hz: c.max_khz * 1e3,
        log_points: c.log_points,
        refine_half_width_linewidths: c.refine_half_width_linewidths,
        refine_points: c.refine_points,
    };
    validation("grid", grid.validate())?;

    let (frequency_noise_displacement_override, reference) = match &resolved.model {
        Some(c) => {
            let reference = match c.squeezing_reference.as_str() {
                "vacuum-shot" => SqueezingReference::VacuumShot,
                "amplitude-wings" => SqueezingReference::AmplitudeWings,
                other => {
                    return Err(CliError::Validation(format!(
                        "model.squeezing_reference: unknown value '{other}' \
                         (expected vacuum-shot or amplitude-wings)"
                    )))
                }
            };
            (c.frequency_noise_displacement_m2_per_hz, reference)
        }
        None => (None, SqueezingReference::VacuumShot),
    };

    let scenario = Scenario {
        oscillator,
        environment,
        cavity,
        laser,
        detection,
        grid,
        frequency_noise_displacement_override,
        reference,
    };
    validation("scenario", scenario.validate())?;
    Ok(scenario)
}

/// Resolve and build in one step.
#[cfg(test)]
fn build_scenario(
    config: &ScenarioConfig,
    preset_flag: Option<&str>,
) -> Result<Scenario, CliError> {
    let (resolved, _) = resolve_config(config, preset_flag)?;
    build_resolved(&resolved)
}

fn missing(section: &str) -> CliError {
    CliError::Validation(format!(
        "config has no [{section}] section and no preset supplies it"
    ))
}

/// Back-convert a scenario into config vocabulary.  Echoes normally copy
/// the resolved config verbatim; this is used for sections a `--set`
/// override touched, where the scenario is the only source of truth.
/// The emitted numbers are the nearest representable lab-unit values.
pub fn scenario_to_config(scenario: &Scenario) -> ScenarioConfig {
    ScenarioConfig {
        preset: None,
        oscillator: Some(OscillatorConfig {
            resonance_frequency_khz: scenario.oscillator.resonance_frequency_hz() / 1e3,
            quality_factor: scenario.oscillator.quality_factor,
            effective_mass_kg: scenario.oscillator.effective_mass_kg,
        }),
        environment: Some(EnvironmentConfig {
            bath_temperature_k: scenario.environment.bath_temperature_k,
            injection: scenario
                .environment
                .classical_injection
                .map(|inj| InjectionConfig {
                    center_frequency_khz: inj.center_frequency_hz / 1e3,
                    bandwidth_khz: inj.bandwidth_hz / 1e3,
                    level_over_thermal_db: inj.force_psd_over_thermal_db,
                }),
        }),
        cavity: Some(CavityConfig {
            length_mm: scenario.cavity.length_m * 1e3,
            input_transmissivity_ppm: scenario.cavity.input_transmissivity * 1e6,
            roundtrip_excess_loss_ppm: Some(scenario.cavity.roundtrip_excess_loss * 1e6),
            finesse: None,
            mode_matching: Some(scenario.cavity.mode_matching),
            reflection_dip: None,
        }),
        laser: Some(LaserConfig {
            wavelength_nm: scenario.laser.wavelength_m * 1e9,
            input_power_mw: scenario.laser.input_power_w * 1e3,
            amplitude_noise_factor: scenario.laser.amplitude_noise_factor,
            frequency_noise_psd_hz2_per_hz: scenario.laser.frequency_noise_psd,
        }),
        detection: Some(DetectionConfig {
            detection_loss: scenario.detection.detection_loss,
            signal_to_lo_power_ratio: scenario.detection.signal_to_lo_power_ratio,
            homodyne_angle_deg: scenario.detection.homodyne_angle.to_degrees(),
            wideband_displacement_noise_m2_per_hz: scenario
                .detection
                .wideband_displacement_noise_psd,
        }),
        grid: Some(GridConfig {
            min_khz: scenario.grid.min_hz / 1e3,
            max_khz: scenario.grid.max_hz / 1e3,
            log_points: scenario.grid.log_points,
            refine_half_width_linewidths: scenario.grid.refine_half_width_linewidths,
            refine_points: scenario.grid.refine_points,
        }),
        model: Some(ModelConfig {
            frequency_noise_displacement_m2_per_hz: scenario.frequency_noise_displacement_override,
            squeezing_reference: match scenario.reference {
                SqueezingReference::VacuumShot => "vacuum-shot".into(),
                SqueezingReference::AmplitudeWings => "amplitude-wings".into(),
            },
        }),
    }
}
