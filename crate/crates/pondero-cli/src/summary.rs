//! JSON run summaries.
//!
//! Every command that produces files also writes `summary.json` next to
//! them.  The summary echoes the fully resolved scenario in config-file
//! vocabulary, so it can be fed back in with `--config` to reproduce the
//! run, and repeats the headline numbers (squeezing depths, margin, fit
//! parameters) exactly as the library computed them.

use serde::{Deserialize, Serialize};

use pondero::{FitResult, QuantumRegimeMargin, SqueezingReport};

use crate::config::ScenarioConfig;
use crate::error::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub angles: Vec<AngleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantum_regime: Option<MarginReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl RunSummary {
    pub fn new(command: &str) -> Self {
        RunSummary {
            command: command.to_string(),
            preset: None,
            seed: None,
            scenario: None,
            outputs: Vec::new(),
            angles: Vec::new(),
            quantum_regime: None,
            fit: None,
            notes: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &std::path::Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &std::path::Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("summary serializes");
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
    }
}

/// Squeezing metrics for one homodyne angle, flattened for JSON.
#[derive(Debug, Serialize, Deserialize)]
pub struct AngleReport {
    pub homodyne_angle_deg: f64,
    pub min_relative_psd_db: f64,
    pub min_at_frequency_hz: f64,
    pub min_side: String,
    pub max_relative_psd_db: f64,
    pub max_at_frequency_hz: f64,
}

impl AngleReport {
    pub fn from_report(phi_deg: f64, report: &SqueezingReport) -> Self {
        AngleReport {
            homodyne_angle_deg: phi_deg,
            min_relative_psd_db: report.min_relative_psd_db,
            min_at_frequency_hz: report.at_frequency_hz,
            min_side: report.side.to_string(),
            max_relative_psd_db: report.max_relative_psd_db,
            max_at_frequency_hz: report.max_at_frequency_hz,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MarginReport {
    pub backaction_force_psd_n2_per_hz: f64,
    pub thermal_force_psd_n2_per_hz: f64,
    pub margin: f64,
    pub verdict: String,
}

impl From<QuantumRegimeMargin> for MarginReport {
    fn from(m: QuantumRegimeMargin) -> Self {
        let verdict = if m.margin > 1.0 {
            "quantum-dominated"
        } else {
            "thermal-dominated"
        };
        MarginReport {
            backaction_force_psd_n2_per_hz: m.backaction_psd,
            thermal_force_psd_n2_per_hz: m.thermal_reference_psd,
            margin: m.margin,
            verdict: verdict.to_string(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub converged: bool,
    pub iterations: usize,
    pub resonance_frequency_hz: f64,
    pub quality_factor: f64,
    pub effective_mass_kg: f64,
    pub floor_m2_per_hz: f64,
    pub std_error_resonance_frequency_hz: f64,
    pub std_error_quality_factor: f64,
    pub std_error_effective_mass_kg: f64,
    pub std_error_floor: f64,
    pub residual_norm: f64,
}

impl From<FitResult> for FitReport {
    fn from(fit: FitResult) -> Self {
        FitReport {
            converged: fit.converged,
            iterations: fit.iterations,
            resonance_frequency_hz: fit.f_m_hz,
            quality_factor: fit.quality_factor,
            effective_mass_kg: fit.mass_kg,
            floor_m2_per_hz: fit.floor_m2_per_hz,
            std_error_resonance_frequency_hz: fit.std_error_f_m_hz,
            std_error_quality_factor: fit.std_error_quality_factor,
            std_error_effective_mass_kg: fit.std_error_mass_kg,
            std_error_floor: fit.std_error_floor,
            residual_norm: fit.residual_norm,
        }
    }
}
