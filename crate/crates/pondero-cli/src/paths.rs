//! Dotted-path parameter overrides (`--set` and sweep `--param`).
//!
//! Paths name scenario fields in SI units, e.g. `laser.input_power_w` or
//! `oscillator.resonance_frequency_hz`; integers (grid point counts) are
//! rounded from the numeric value.  The scenario is re-validated by the
//! caller after all overrides are applied, so a value that is individually
//! representable but physically inconsistent still fails cleanly.

use pondero::Scenario;

use crate::error::CliError;

pub const KNOWN_PATHS: &[&str] = &[
    "oscillator.effective_mass_kg",
    "oscillator.resonance_frequency_hz",
    "oscillator.quality_factor",
    "environment.bath_temperature_k",
    "environment.injection.center_frequency_hz",
    "environment.injection.bandwidth_hz",
    "environment.injection.level_over_thermal_db",
    "cavity.length_m",
    "cavity.input_transmissivity",
    "cavity.roundtrip_excess_loss",
    "cavity.mode_matching",
    "laser.wavelength_m",
    "laser.input_power_w",
    "laser.amplitude_noise_factor",
    "laser.frequency_noise_psd",
    "detection.detection_loss",
    "detection.signal_to_lo_power_ratio",
    "detection.homodyne_angle_rad",
    "detection.wideband_displacement_noise_psd",
    "grid.min_hz",
    "grid.max_hz",
    "grid.log_points",
    "grid.refine_half_width_linewidths",
    "grid.refine_points",
    "model.frequency_noise_displacement_m2_per_hz",
];

/// Set one scenario field by dotted path.  Does not re-validate.
pub fn set_path(scenario: &mut Scenario, path: &str, value: f64) -> Result<(), CliError> {
    if !value.is_finite() {
        return Err(CliError::Validation(format!(
            "{path}: value must be finite, got {value}"
        )));
    }
    let as_count = || -> Result<usize, CliError> {
        if value < 0.5 {
            return Err(CliError::Validation(format!(
                "{path}: expected a positive count, got {value}"
            )));
        }
        Ok(value.round() as usize)
    };
    match path {
        "oscillator.effective_mass_kg" => scenario.oscillator.effective_mass_kg = value,
        "oscillator.resonance_frequency_hz" => {
            scenario.oscillator.resonance_angular_frequency = 2.0 * std::f64::consts::PI * value
        }
        "oscillator.quality_factor" => scenario.oscillator.quality_factor = value,
        "environment.bath_temperature_k" => scenario.environment.bath_temperature_k = value,
        "environment.injection.center_frequency_hz"
        | "environment.injection.bandwidth_hz"
        | "environment.injection.level_over_thermal_db" => {
            let inj = scenario
                .environment
                .classical_injection
                .as_mut()
                .ok_or_else(|| {
                    CliError::Validation(format!(
                        "{path}: scenario has no classical injection to modify"
                    ))
                })?;
            match path {
                "environment.injection.center_frequency_hz" => inj.center_frequency_hz = value,
                "environment.injection.bandwidth_hz" => inj.bandwidth_hz = value,
                _ => inj.force_psd_over_thermal_db = value,
            }
        }
        "cavity.length_m" => scenario.cavity.length_m = value,
        "cavity.input_transmissivity" => scenario.cavity.input_transmissivity = value,
        "cavity.roundtrip_excess_loss" => scenario.cavity.roundtrip_excess_loss = value,
        "cavity.mode_matching" => scenario.cavity.mode_matching = value,
        "laser.wavelength_m" => scenario.laser.wavelength_m = value,
        "laser.input_power_w" => scenario.laser.input_power_w = value,
        "laser.amplitude_noise_factor" => scenario.laser.amplitude_noise_factor = value,
        "laser.frequency_noise_psd" => scenario.laser.frequency_noise_psd = value,
        "detection.detection_loss" => scenario.detection.detection_loss = value,
        "detection.signal_to_lo_power_ratio" => scenario.detection.signal_to_lo_power_ratio = value,
        "detection.homodyne_angle_rad" => scenario.detection.homodyne_angle = value,
        "detection.wideband_displacement_noise_psd" => {
            scenario.detection.wideband_displacement_noise_psd = value
        }
        "grid.min_hz" => scenario.grid.min_hz = value,
        "grid.max_hz" => scenario.grid.max_hz = value,
        "grid.log_points" => scenario.grid.log_points = as_count()?,
        "grid.refine_half_width_linewidths" => scenario.grid.refine_half_width_linewidths = value,
        "grid.refine_points" => scenario.grid.refine_points = as_count()?,
        "model.frequency_noise_displacement_m2_per_hz" => {
            scenario.frequency_noise_displacement_override = Some(value)
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown parameter path '{other}'; known paths: {}",
                KNOWN_PATHS.join(", ")
            )))
        }
    }
    Ok(())
}

/// Parse one `--set PATH=VALUE` argument and apply it.
pub fn apply_assignment(scenario: &mut Scenario, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        CliError::Validation(format!("--set expects PATH=VALUE, got '{assignment}'"))
    })?;
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("--set {path}: '{raw}' is not a number")))?;
    set_path(scenario, path.trim(), value)
}
