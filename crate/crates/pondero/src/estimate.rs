//! Parameter estimation from measured spectra.
//!
//! Thermal spectra are fit in log-PSD space to the model
//!
//! ```text
//!     S(f) = 4 kT w_M / (Q m D(w)) + floor,
//!     D(w) = (w_M^2 - w^2)^2 + (w w_M / Q)^2
//! ```
//!
//! with parameters (ln w_M, ln Q, ln m, ln floor): log-space keeps every
//! parameter positive, makes the Jacobian dimensionless, and weights the
//! many decades of a resonance line evenly.  Driven magnitude responses
//! use the same machinery on |chi| = 1 / (m sqrt(D)) with a known force
//! calibration.  Standard errors come from the usual linearized covariance
//! sigma^2 (J'J)^-1 mapped back through the log parametrization.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::consts::BOLTZMANN;
use crate::lm;
use crate::model::{homodyne_angle_from_offset_ratio, AngleEstimate, MechanicalOscillator};
use crate::{Error, Result};

/// A one-sided displacement PSD measurement, m^2/Hz on a strictly
/// increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredSpectrum {
    pub frequency_hz: Vec<f64>,
    pub psd_m2_per_hz: Vec<f64>,
    /// Optional per-point weights (inverse relative variances).
    pub weights: Option<Vec<f64>>,
}

impl MeasuredSpectrum {
    pub fn new(frequency_hz: Vec<f64>, psd_m2_per_hz: Vec<f64>) -> Result<Self> {
        if frequency_hz.len() != psd_m2_per_hz.len() {
            return Err(Error::DegenerateData(format!(
                "frequency and PSD lengths differ ({} vs {})",
                frequency_hz.len(),
                psd_m2_per_hz.len()
            )));
        }
        if frequency_hz.len() < 8 {
            return Err(Error::DegenerateData(format!(
                "need at least 8 points to fit, got {}",
                frequency_hz.len()
            )));
        }
        if !frequency_hz.iter().all(|f| f.is_finite() && *f > 0.0) {
            return Err(Error::DegenerateData(
                "frequencies must be finite and positive".into(),
            ));
        }
        if !frequency_hz.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::DegenerateData(
                "frequencies must be strictly increasing".into(),
            ));
        }
        if !psd_m2_per_hz.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::DegenerateData(
                "PSD values must be finite and positive".into(),
            ));
        }
        Ok(Self {
            frequency_hz,
            psd_m2_per_hz,
            weights: None,
        })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.frequency_hz.len() {
            return Err(Error::DegenerateData(format!(
                "weight length {} does not match {} points",
                weights.len(),
                self.frequency_hz.len()
            )));
        }
        if !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::DegenerateData(
                "weights must be finite and positive".into(),
            ));
        }
        self.weights = Some(weights);
        Ok(self)
    }
}

/// A driven transfer-magnitude measurement |x/F| * calibration, same grid
/// conventions as [`MeasuredSpectrum`].
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenResponse {
    pub frequency_hz: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub weights: Option<Vec<f64>>,
}

impl DrivenResponse {
    pub fn new(frequency_hz: Vec<f64>, magnitude: Vec<f64>) -> Result<Self> {
        let base = MeasuredSpectrum::new(frequency_hz, magnitude)?;
        Ok(Self {
            frequency_hz: base.frequency_hz,
            magnitude: base.psd_m2_per_hz,
            weights: None,
        })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        let base = MeasuredSpectrum {
            frequency_hz: self.frequency_hz.clone(),
            psd_m2_per_hz: self.magnitude.clone(),
            weights: None,
        }
        .with_weights(weights)?;
        self.weights = base.weights;
        Ok(self)
    }
}

/// Optional user-supplied starting point for the thermal fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialGuess {
    pub f_m_hz: f64,
    pub quality_factor: f64,
    pub mass_kg: f64,
    pub floor_m2_per_hz: f64,
}

impl InitialGuess {
    fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("initial.f_m_hz", self.f_m_hz),
            ("initial.quality_factor", self.quality_factor),
            ("initial.mass_kg", self.mass_kg),
            ("initial.floor_m2_per_hz", self.floor_m2_per_hz),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Fitted oscillator parameters with linearized one-sigma errors.
///
/// Driven-response fits have no noise floor; their floor fields are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub f_m_hz: f64,
    pub quality_factor: f64,
    pub mass_kg: f64,
    pub floor_m2_per_hz: f64,
    pub std_error_f_m_hz: f64,
    pub std_error_quality_factor: f64,
    pub std_error_mass_kg: f64,
    pub std_error_floor: f64,
    /// sqrt of the (weighted) sum of squared log residuals.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn denominator(wm: f64, q: f64, w: f64) -> f64 {
    let detune = wm * wm - w * w;
    let damp = w * wm / q;
    detune * detune + damp * damp
}

fn thermal_psd_raw(four_kt: f64, wm: f64, q: f64, m: f64, w: f64) -> f64 {
    four_kt * wm / (q * m * denominator(wm, q, w))
}

fn sqrt_weights(weights: &Option<Vec<f64>>, n: usize) -> Vec<f64> {
    match weights {
        Some(w) => w.iter().map(|w| w.sqrt()).collect(),
        None => vec![1.0; n],
    }
}

/// Peak/floor/width heuristics shared by the automatic starting points.
struct PeakSketch {
    peak_index: usize,
    peak_value: f64,
    floor: f64,
    width_hz: f64,
}

fn sketch_peak(
    frequency_hz: &[f64],
    values: &[f64],
    half_level: impl Fn(f64, f64) -> f64,
) -> Result<PeakSketch> {
    let peak_index = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("values are finite"))
        .map(|(i, _)| i)
        .expect("data is non-empty");
    let peak_value = values[peak_index];

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values are finite"));
    let decile = &sorted[..(sorted.len() / 10).max(1)];
    let floor = decile[decile.len() / 2];

    if peak_value < 2.0 * floor {
        return Err(Error::DegenerateData(format!(
            "no resonance peak: maximum {peak_value:e} is within 3 dB of the floor {floor:e}"
        )));
    }

    let level = half_level(peak_value, floor);
    let mut left = peak_index;
    while left > 0 && values[left] > level {
        left -= 1;
    }
    let mut right = peak_index;
    while right + 1 < values.len() && values[right] > level {
        right += 1;
    }
    let spacing = if peak_index + 1 < frequency_hz.len() {
        frequency_hz[peak_index + 1] - frequency_hz[peak_index]
    } else {
        frequency_hz[peak_index] - frequency_hz[peak_index - 1]
    };
    let width_hz = (frequency_hz[right] - frequency_hz[left]).max(spacing);
    Ok(PeakSketch {
        peak_index,
        peak_value,
        floor,
        width_hz,
    })
}

fn standard_errors(solution: &lm::Solution, dof: usize, params: &[f64]) -> Vec<f64> {
    let sigma_sq = solution.cost / dof.max(1) as f64;
    match solution.jtj.clone().try_inverse() {
        Some(cov) => params
            .iter()
            .enumerate()
            .map(|(i, p)| p * (sigma_sq * cov[(i, i)]).max(0.0).sqrt())
            .collect(),
        None => vec![f64::INFINITY; params.len()],
    }
}

/// Fit a thermal displacement spectrum, returning the oscillator
/// parameters, white sensing floor, and their standard errors.
pub fn fit_thermal_spectrum(
    data: &MeasuredSpectrum,
    bath_temperature_k: f64,
    initial: Option<InitialGuess>,
) -> Result<FitResult> {
    if !(bath_temperature_k > 0.0) || !bath_temperature_k.is_finite() {
        return Err(Error::InvalidParameter {
            field: "bath_temperature_k",
            reason: format!("must be finite and > 0, got {bath_temperature_k}"),
        });
    }
    let four_kt = 4.0 * BOLTZMANN * bath_temperature_k;
    let n = data.frequency_hz.len();
    let omega: Vec<f64> = data
        .frequency_hz
        .iter()
        .map(|f| std::f64::consts::TAU * f)
        .collect();
    let log_y: Vec<f64> = data.psd_m2_per_hz.iter().map(|y| y.ln()).collect();
    let w_sqrt = sqrt_weights(&data.weights, n);

    let start = match initial {
        Some(guess) => {
            guess.validate()?;
            guess
        }
        None => {
            let sketch = sketch_peak(&data.frequency_hz, &data.psd_m2_per_hz, |peak, floor| {
                floor + (peak - floor) / 2.0
            })?;
            let f_hat = data.frequency_hz[sketch.peak_index];
            let q_hat = (f_hat / sketch.width_hz).clamp(10.0, 1e8);
            let w_hat = std::f64::consts::TAU * f_hat;
            let height = sketch.peak_value - sketch.floor;
            InitialGuess {
                f_m_hz: f_hat,
                quality_factor: q_hat,
                mass_kg: four_kt * q_hat / (height * w_hat.powi(3)),
                floor_m2_per_hz: sketch.floor,
            }
        }
    };

    let theta0 = [
        (std::f64::consts::TAU * start.f_m_hz).ln(),
        start.quality_factor.ln(),
        start.mass_kg.ln(),
        start.floor_m2_per_hz.ln(),
    ];

    let residuals = |theta: &[f64]| {
        let (wm, q, m, floor) = (
            theta[0].exp(),
            theta[1].exp(),
            theta[2].exp(),
            theta[3].exp(),
        );
        DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let s = thermal_psd_raw(four_kt, wm, q, m, omega[i]) + floor;
                w_sqrt[i] * (s.ln() - log_y[i])
            }),
        )
    };
    let jacobian = |theta: &[f64]| {
        let (wm, q, m, floor) = (
            theta[0].exp(),
            theta[1].exp(),
            theta[2].exp(),
            theta[3].exp(),
        );
        DMatrix::from_fn(n, 4, |i, j| {
            let w = omega[i];
            let d = denominator(wm, q, w);
            let s_th = thermal_psd_raw(four_kt, wm, q, m, w);
            let s = s_th + floor;
            let u = s_th / s;
            let damp_sq = (w * wm / q) * (w * wm / q);
            let col = match j {
                0 => u * (1.0 - (4.0 * wm * wm * (wm * wm - w * w) + 2.0 * damp_sq) / d),
                1 => u * (-1.0 + 2.0 * damp_sq / d),
                2 => -u,
                _ => floor / s,
            };
            w_sqrt[i] * col
        })
    };

    let solution = lm::solve(&theta0, residuals, jacobian, &lm::Options::default());
    let wm = solution.params[0].exp();
    let params = [
        wm / std::f64::consts::TAU,
        solution.params[1].exp(),
        solution.params[2].exp(),
        solution.params[3].exp(),
    ];
    let errors = standard_errors(&solution, n.saturating_sub(4), &params);
    Ok(FitResult {
        f_m_hz: params[0],
        quality_factor: params[1],
        mass_kg: params[2],
        floor_m2_per_hz: params[3],
        std_error_f_m_hz: errors[0],
        std_error_quality_factor: errors[1],
        std_error_mass_kg: errors[2],
        std_error_floor: errors[3],
        residual_norm: solution.cost.sqrt(),
        converged: solution.converged,
        iterations: solution.iterations,
    })
}

/// Fit a driven magnitude response y(f) = calibration * |chi(f)|.
///
/// `force_calibration` is the known drive amplitude scale mapping |chi|
/// (m/N) to the measured magnitude.
pub fn fit_driven_response(data: &DrivenResponse, force_calibration: f64) -> Result<FitResult> {
    if !(force_calibration > 0.0) || !force_calibration.is_finite() {
        return Err(Error::InvalidParameter {
            field: "force_calibration",
            reason: format!("must be finite and > 0, got {force_calibration}"),
        });
    }
    let n = data.frequency_hz.len();
    let omega: Vec<f64> = data
        .frequency_hz
        .iter()
        .map(|f| std::f64::consts::TAU * f)
        .collect();
    let log_y: Vec<f64> = data.magnitude.iter().map(|y| y.ln()).collect();
    let w_sqrt = sqrt_weights(&data.weights, n);
    let ln_cal = force_calibration.ln();

    // |chi| falls to half its peak at sqrt(3) half-linewidths
    let sketch = sketch_peak(&data.frequency_hz, &data.magnitude, |peak, _| peak / 2.0)?;
    let f_hat = data.frequency_hz[sketch.peak_index];
    let q_hat = (3f64.sqrt() * f_hat / sketch.width_hz).clamp(10.0, 1e8);
    let w_hat = std::f64::consts::TAU * f_hat;
    let m_hat = force_calibration * q_hat / (sketch.peak_value * w_hat * w_hat);
    let theta0 = [w_hat.ln(), q_hat.ln(), m_hat.ln()];

    let residuals = |theta: &[f64]| {
        let (wm, q, m) = (theta[0].exp(), theta[1].exp(), theta[2].exp());
        DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let model = ln_cal - m.ln() - 0.5 * denominator(wm, q, omega[i]).ln();
                w_sqrt[i] * (model - log_y[i])
            }),
        )
    };
    let jacobian = |theta: &[f64]| {
        let (wm, q, _m) = (theta[0].exp(), theta[1].exp(), theta[2].exp());
        DMatrix::from_fn(n, 3, |i, j| {
            let w = omega[i];
            let d = denominator(wm, q, w);
            let damp_sq = (w * wm / q) * (w * wm / q);
            let col = match j {
                0 => -(2.0 * wm * wm * (wm * wm - w * w) + damp_sq) / d,
                1 => damp_sq / d,
                _ => -1.0,
            };
            w_sqrt[i] * col
        })
    };

    let solution = lm::solve(&theta0, residuals, jacobian, &lm::Options::default());
    let params = [
        solution.params[0].exp() / std::f64::consts::TAU,
        solution.params[1].exp(),
        solution.params[2].exp(),
    ];
    let errors = standard_errors(&solution, n.saturating_sub(3), &params);
    Ok(FitResult {
        f_m_hz: params[0],
        quality_factor: params[1],
        mass_kg: params[2],
        floor_m2_per_hz: 0.0,
        std_error_f_m_hz: errors[0],
        std_error_quality_factor: errors[1],
        std_error_mass_kg: errors[2],
        std_error_floor: 0.0,
        residual_norm: solution.cost.sqrt(),
        converged: solution.converged,
        iterations: solution.iterations,
    })
}

/// Convert fringe-offset calibration rows (offset, measured level) into
/// homodyne angles.  The row with offset exactly 0 provides the reference
/// level; every angle magnitude is recovered from level/reference via
/// cos^2, with the sign left ambiguous as flagged on [`AngleEstimate`].
pub fn calibrate_homodyne_angle(rows: &[(f64, f64)]) -> Result<Vec<(f64, AngleEstimate)>> {
    if rows.is_empty() {
        return Err(Error::DegenerateData("no calibration rows".into()));
    }
    for &(offset, level) in rows {
        if !offset.is_finite() || !level.is_finite() || level <= 0.0 {
            return Err(Error::DegenerateData(format!(
                "calibration rows need finite offsets and positive levels, got ({offset}, {level})"
            )));
        }
    }
    let reference = rows
        .iter()
        .find(|(offset, _)| *offset == 0.0)
        .map(|&(_, level)| level)
        .ok_or_else(|| {
            Error::DegenerateData("calibration needs a zero-offset reference row".into())
        })?;
    rows.iter()
        .map(|&(offset, level)| {
            homodyne_angle_from_offset_ratio(level / reference).map(|est| (offset, est))
        })
        .collect()
}

/// Generate a synthetic thermal measurement: model PSD on `grid` with a
/// white floor, perturbed by relative Gaussian noise.  Deterministic in
/// `seed` (bit-identical across runs and platforms).
pub fn synthesize_measurement(
    osc: &MechanicalOscillator,
    bath_temperature_k: f64,
    grid: &[f64],
    floor_m2_per_hz: f64,
    noise_rel: f64,
    seed: u64,
) -> Result<MeasuredSpectrum> {
    if !(bath_temperature_k > 0.0) || !bath_temperature_k.is_finite() {
        return Err(Error::InvalidParameter {
            field: "bath_temperature_k",
            reason: format!("must be finite and > 0, got {bath_temperature_k}"),
        });
    }
    if !(floor_m2_per_hz >= 0.0) || !floor_m2_per_hz.is_finite() {
        return Err(Error::InvalidParameter {
            field: "floor_m2_per_hz",
            reason: format!("must be finite and >= 0, got {floor_m2_per_hz}"),
        });
    }
    if !(0.0..1.0).contains(&noise_rel) {
        return Err(Error::InvalidParameter {
            field: "noise_rel",
            reason: format!("must lie in [0, 1), got {noise_rel}"),
        });
    }
    let four_kt = 4.0 * BOLTZMANN * bath_temperature_k;
    let wm = osc.resonance_angular_frequency;
    let (q, m) = (osc.quality_factor, osc.effective_mass_kg);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = move || {
        // Box-Muller; 1 - u keeps the log argument in (0, 1]
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let psd = grid
        .iter()
        .map(|&f| {
            let w = std::f64::consts::TAU * f;
            let clean = thermal_psd_raw(four_kt, wm, q, m, w) + floor_m2_per_hz;
            clean * (1.0 + noise_rel * gauss()).max(1e-6)
        })
        .collect();
    MeasuredSpectrum::new(grid.to_vec(), psd)
}
