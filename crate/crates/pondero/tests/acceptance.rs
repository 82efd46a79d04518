//! Acceptance gate: one test per shipping criterion, each printing a
//! single PASS/FAIL line (visible with `--nocapture`) and enforcing its
//! runtime budget.  These are end-to-end checks of the physics contract;
//! unit-level coverage lives next to the modules.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pondero::*;

type CheckResult = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !($cond) {
            return Err(format!($($arg)+));
        }
    };
}

fn report(number: u32, description: &str, limit: Duration, body: impl FnOnce() -> CheckResult) {
    let start = Instant::now();
    let result = body();
    let elapsed = start.elapsed();
    let result = result.and_then(|detail| {
        if elapsed <= limit {
            Ok(detail)
        } else {
            Err(format!("runtime {elapsed:?} exceeds budget {limit:?}"))
        }
    });
    match &result {
        Ok(detail) => println!("criterion {number}: PASS — {description} ({detail}; {elapsed:?})"),
        Err(detail) => println!("criterion {number}: FAIL — {description} ({detail})"),
    }
    if let Err(detail) = result {
        panic!("criterion {number} failed: {detail}");
    }
}

#[test]
fn criterion_01_fluctuation_dissipation_identity() {
    report(
        1,
        "S_x^th = |chi|^2 S_F^th to 1e-12 over 1e4 points x 100 parameter sets",
        Duration::from_secs(1),
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(101);
            let mut log_uniform =
                move |lo: f64, hi: f64| -> f64 { rng.gen_range(lo.ln()..hi.ln()).exp() };
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let f_m = log_uniform(1e3, 1e6);
                let q = log_uniform(10.0, 1e7);
                let m = log_uniform(1e-12, 1e-3);
                let temp = log_uniform(0.01, 1000.0);
                let osc = MechanicalOscillator::from_frequency_hz(m, f_m, q)
                    .map_err(|e| e.to_string())?;
                let env = NoiseEnvironment::new(temp).map_err(|e| e.to_string())?;
                for i in 0..10_000usize {
                    let f = 1.0 * (1e7f64 / 1.0).powf(i as f64 / 9999.0);
                    let w = std::f64::consts::TAU * f;
                    let lhs = osc
                        .thermal_displacement_psd(&env, w)
                        .map_err(|e| e.to_string())?;
                    let rhs = osc.susceptibility(w).magnitude_squared()
                        * osc.thermal_force_psd(&env, w).map_err(|e| e.to_string())?;
                    let rel = (lhs - rhs).abs() / rhs;
                    worst = worst.max(rel);
                    ensure!(rel <= 1e-12, "identity broken at f={f:.3} Hz: rel {rel:e}");
                }
            }
            Ok(format!("worst relative deviation {worst:.2e}"))
        },
    );
}

#[test]
fn criterion_02_quadrature_sum_conservation() {
    report(
        2,
        "mix(phi) + mix(phi + pi/2) = S11 + S22 to 1e-12 over 1e5 random cases",
        Duration::from_secs(1),
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(202);
            let mut worst = 0.0f64;
            for _ in 0..100_000 {
                let s11 = rng.gen_range(-3.0f64..3.0).exp2() * rng.gen_range(1e-3..1e3);
                let s22 = rng.gen_range(1e-3f64..1e3);
                let mag = (s11 * s22).sqrt() * rng.gen_range(0.0..10.0);
                let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                let pair = QuadraturePair {
                    amplitude_psd: s11,
                    phase_psd: s22,
                    cross_psd: Complex64::from_polar(mag, angle),
                };
                let phi = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                let sum = pair.mix(phi) + pair.mix(phi + std::f64::consts::FRAC_PI_2);
                let rel = (sum - (s11 + s22)).abs() / (s11 + s22);
                worst = worst.max(rel);
                ensure!(
                    rel <= 1e-12,
                    "conservation broken: rel {rel:e} at phi={phi}"
                );
            }
            Ok(format!("worst relative deviation {worst:.2e}"))
        },
    );
}

#[test]
fn criterion_03_cosine_squared_wing_law() {
    report(
        3,
        "total(phi)/total(0) = cos^2(phi) within 0.1% at wing frequencies, 5-degree phi grid",
        Duration::from_secs(5),
        || {
            // decouple the probe so the pure projection law is visible
            let mut scenario = Scenario::classical_analog();
            scenario.environment = NoiseEnvironment::new(300.0).map_err(|e| e.to_string())?;
            scenario.laser =
                LaserDrive::new(1.064e-6, 1e-12, 1e6, 0.0).map_err(|e| e.to_string())?;
            scenario.detection =
                DetectionChain::new(0.0, 0.01, 0.0, 0.0).map_err(|e| e.to_string())?;
            scenario.reference = SqueezingReference::VacuumShot;

            let kernel = SpectrumKernel::new(&scenario).map_err(|e| e.to_string())?;
            let baseline = kernel.synthesize(0.0).map_err(|e| e.to_string())?;
            let f_m = scenario.oscillator.resonance_frequency_hz();
            let wing = 50.0 * scenario.oscillator.linewidth_hz();

            let mut worst = 0.0f64;
            let mut angles = 0usize;
            for deg in (-80..=80).step_by(5) {
                if deg == 0 {
                    continue;
                }
                angles += 1;
                let phi = (deg as f64).to_radians();
                let c2 = phi.cos().powi(2);
                let spec = kernel.synthesize(phi).map_err(|e| e.to_string())?;
                for i in 0..spec.len() {
                    if (spec.frequency_hz[i] - f_m).abs() <= wing {
                        continue;
                    }
                    let rel = (spec.total[i] / baseline.total[i] - c2).abs() / c2;
                    worst = worst.max(rel);
                    ensure!(
                        rel <= 1e-3,
                        "wing law broken at phi={deg} deg, f={:.1} Hz: rel {rel:e}",
                        spec.frequency_hz[i]
                    );
                }
            }
            Ok(format!(
                "{angles} angles, worst relative deviation {worst:.2e}"
            ))
        },
    );
}

#[test]
fn criterion_04_injection_raises_peak_by_closed_form() {
    report(
        4,
        "10 dB force injection lifts the displacement peak by 10*log10(11) dB",
        Duration::from_secs(1),
        || {
            let scenario = Scenario::classical_analog();
            let driven = displacement_spectrum(&scenario).map_err(|e| e.to_string())?;
            let mut quiet_scenario = scenario;
            quiet_scenario.environment = NoiseEnvironment::new(300.0).map_err(|e| e.to_string())?;
            let quiet = displacement_spectrum(&quiet_scenario).map_err(|e| e.to_string())?;
            let f_m = scenario.oscillator.resonance_frequency_hz();
            let i = driven
                .frequency_hz
                .iter()
                .position(|&f| f == f_m)
                .ok_or("resonance missing from grid")?;
            let rise_db = 10.0 * (driven.psd_m2_per_hz[i] / quiet.psd_m2_per_hz[i]).log10();
            let expected = 10.0 * 11f64.log10();
            ensure!(
                (rise_db - expected).abs() <= 0.01,
                "peak rise {rise_db:.4} dB vs closed form {expected:.4} dB"
            );
            Ok(format!(
                "peak rise {rise_db:.4} dB (closed form {expected:.4} dB)"
            ))
        },
    );
}

#[test]
fn criterion_05_classical_squeezing_phenomenology() {
    report(
        5,
        "classical preset: sub-reference dip, side flip under phi -> -phi, optimal depth 9 +- 3 dB",
        Duration::from_secs(10),
        || {
            let scenario = Scenario::classical_analog();
            let f_m = scenario.oscillator.resonance_frequency_hz();
            let kernel = SpectrumKernel::new(&scenario).map_err(|e| e.to_string())?;

            // (a) at the preset angle: dip below reference on one side, excess on the other
            let spec = kernel
                .synthesize(scenario.detection.homodyne_angle)
                .map_err(|e| e.to_string())?;
            let rep = squeezing_metrics(&spec, f_m).map_err(|e| e.to_string())?;
            ensure!(
                rep.min_relative_psd_db < 0.0,
                "no sub-reference dip at preset angle (min {:.2} dB)",
                rep.min_relative_psd_db
            );
            ensure!(
                rep.max_relative_psd_db > 0.0,
                "no excess at preset angle (max {:.2} dB)",
                rep.max_relative_psd_db
            );
            let max_side = if rep.max_at_frequency_hz < f_m {
                ResonanceSide::BelowResonance
            } else {
                ResonanceSide::AboveResonance
            };
            ensure!(
                rep.side != max_side,
                "dip and excess on the same side of resonance"
            );

            // (b) argmin side flips with the sign of phi
            let phi = scenario.detection.homodyne_angle.abs();
            let pos = squeezing_metrics(&kernel.synthesize(phi).map_err(|e| e.to_string())?, f_m)
                .map_err(|e| e.to_string())?;
            let neg = squeezing_metrics(&kernel.synthesize(-phi).map_err(|e| e.to_string())?, f_m)
                .map_err(|e| e.to_string())?;
            ensure!(
                pos.side != neg.side,
                "dip side did not flip: {} for both signs",
                pos.side
            );

            // (c) optimal angle on a 1-degree grid
            let mut best_db = f64::INFINITY;
            let mut best_deg = 0i32;
            for deg in -80..=80 {
                if deg == 0 {
                    continue;
                }
                let spec = kernel
                    .synthesize((deg as f64).to_radians())
                    .map_err(|e| e.to_string())?;
                let rep = squeezing_metrics(&spec, f_m).map_err(|e| e.to_string())?;
                if rep.min_relative_psd_db < best_db {
                    best_db = rep.min_relative_psd_db;
                    best_deg = deg;
                }
            }
            ensure!(
                (-12.0..=-6.0).contains(&best_db),
                "optimal depth {best_db:.2} dB at {best_deg} deg outside 9 +- 3 dB"
            );
            Ok(format!(
                "preset min {:.2} dB ({}), optimal {best_db:.2} dB at {best_deg} deg",
                rep.min_relative_psd_db, rep.side
            ))
        },
    );
}

#[test]
fn criterion_06_quantum_budget_minimum_and_legend() {
    report(
        6,
        "quantum preset: minimum between -0.5 and -3.5 dB of shot, six legend sources present",
        Duration::from_secs(10),
        || {
            let scenario = Scenario::quantum_budget();
            let spec = synthesize_spectrum(&scenario, scenario.detection.homodyne_angle)
                .map_err(|e| e.to_string())?;
            let rep = squeezing_metrics(&spec, scenario.oscillator.resonance_frequency_hz())
                .map_err(|e| e.to_string())?;
            ensure!(
                (-3.5..=-0.5).contains(&rep.min_relative_psd_db),
                "minimum {:.3} dB outside [-3.5, -0.5]",
                rep.min_relative_psd_db
            );
            let legend = [
                SourceTag::Shot,
                SourceTag::Backaction,
                SourceTag::Thermal,
                SourceTag::LaserAmplitude,
                SourceTag::LaserFrequency,
                SourceTag::LossVacuum,
            ];
            for tag in legend {
                let max = spec.source(tag).iter().cloned().fold(0.0f64, f64::max);
                ensure!(max > 0.0, "{} column identically zero", tag.label());
            }
            Ok(format!(
                "minimum {:.3} dB at {:.0} Hz ({})",
                rep.min_relative_psd_db, rep.at_frequency_hz, rep.side
            ))
        },
    );
}

#[test]
fn criterion_07_feasibility_margin_oracle() {
    report(
        7,
        "quantum-regime margin > 1 at 4.2 K, < 1 at 300 K, matching hand arithmetic to 1%",
        Duration::from_secs(1),
        || {
            // hand oracle, CODATA 2018 constants:
            //   LHS = hbar w_L P (4/c^2) T^2 (F/pi)^4
            //       = 1.054571817e-34 * 2*pi*2.81760e14 * 0.03 * 4/(8.98755e16)
            //         * (50e-6)^2 * (69813.17/pi)^4 = 1.5197e-28 N^2/Hz
            //   RHS(T) = 2 k T m w_M / Q
            //   RHS(4.2 K) = 2*1.380649e-23*4.2*5e-8*2*pi*1e5/1e5 = 3.6435e-29
            let oracle_lhs = 1.5197e-28;
            let oracle_rhs_cold = 3.6435e-29;
            let oracle_margin_cold = oracle_lhs / oracle_rhs_cold;
            let oracle_margin_warm = oracle_margin_cold * 4.2 / 300.0;

            let scenario = Scenario::quantum_budget();
            let derived = scenario.cavity.derive(&scenario.laser);
            let cold = quantum_regime_margin(
                &scenario.oscillator,
                &scenario.environment,
                &derived,
                &scenario.laser,
            );
            let warm_env = NoiseEnvironment::new(300.0).map_err(|e| e.to_string())?;
            let warm =
                quantum_regime_margin(&scenario.oscillator, &warm_env, &derived, &scenario.laser);

            ensure!(cold.margin > 1.0, "cold margin {:.3} not > 1", cold.margin);
            ensure!(warm.margin < 1.0, "warm margin {:.3} not < 1", warm.margin);
            for (name, got, oracle) in [
                ("back-action PSD", cold.backaction_psd, oracle_lhs),
                (
                    "thermal reference",
                    cold.thermal_reference_psd,
                    oracle_rhs_cold,
                ),
                ("cold margin", cold.margin, oracle_margin_cold),
                ("warm margin", warm.margin, oracle_margin_warm),
            ] {
                let rel = (got - oracle).abs() / oracle;
                ensure!(
                    rel <= 0.01,
                    "{name} {got:e} vs oracle {oracle:e} (rel {rel:.3e})"
                );
            }
            Ok(format!(
                "margin {:.3} at 4.2 K, {:.4} at 300 K",
                cold.margin, warm.margin
            ))
        },
    );
}

#[test]
fn criterion_08_fit_round_trip() {
    report(
        8,
        "50 noiseless fit round-trips to 1e-6; noisy medians f_M 0.1%, Q and m 5%",
        Duration::from_secs(60),
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(808);
            for draw in 0..50 {
                let f_m = rng.gen_range(5e4f64.ln()..5e5f64.ln()).exp();
                let q = rng.gen_range(500f64.ln()..5e4f64.ln()).exp();
                let m = rng.gen_range(1e-8f64.ln()..1e-6f64.ln()).exp();
                let osc = MechanicalOscillator::from_frequency_hz(m, f_m, q)
                    .map_err(|e| e.to_string())?;
                let w_m = osc.resonance_angular_frequency;
                let peak = 4.0 * 1.380649e-23 * 300.0 * q / (m * w_m.powi(3));
                let floor = peak * 10f64.powf(-rng.gen_range(3.0..5.0));
                let grid = GridSpec {
                    min_hz: f_m / 2.0,
                    max_hz: 2.0 * f_m,
                    log_points: 401,
                    refine_half_width_linewidths: 20.0,
                    refine_points: 1601,
                }
                .build(&osc)
                .map_err(|e| e.to_string())?;
                let data = synthesize_measurement(&osc, 300.0, &grid, floor, 0.0, draw)
                    .map_err(|e| e.to_string())?;
                let fit = fit_thermal_spectrum(&data, 300.0, None).map_err(|e| e.to_string())?;
                ensure!(fit.converged, "draw {draw} did not converge");
                for (name, got, truth) in [
                    ("f_M", fit.f_m_hz, f_m),
                    ("Q", fit.quality_factor, q),
                    ("m", fit.mass_kg, m),
                    ("floor", fit.floor_m2_per_hz, floor),
                ] {
                    let rel = (got - truth).abs() / truth;
                    ensure!(
                        rel <= 1e-6,
                        "draw {draw}: {name} off by {rel:.2e} (got {got:e}, truth {truth:e})"
                    );
                }
            }

            // noisy arm: fixed oscillator, 20 seeds, median errors
            let osc = MechanicalOscillator::from_frequency_hz(1.1e-7, 249_300.0, 5500.0)
                .map_err(|e| e.to_string())?;
            let grid = GridSpec {
                min_hz: 124_650.0,
                max_hz: 498_600.0,
                log_points: 401,
                refine_half_width_linewidths: 20.0,
                refine_points: 1601,
            }
            .build(&osc)
            .map_err(|e| e.to_string())?;
            let mut err_f = Vec::new();
            let mut err_q = Vec::new();
            let mut err_m = Vec::new();
            for seed in 0..20 {
                let data = synthesize_measurement(&osc, 300.0, &grid, 1e-34, 0.05, seed)
                    .map_err(|e| e.to_string())?;
                let fit = fit_thermal_spectrum(&data, 300.0, None).map_err(|e| e.to_string())?;
                ensure!(fit.converged, "seed {seed} did not converge");
                err_f.push((fit.f_m_hz - 249_300.0).abs() / 249_300.0);
                err_q.push((fit.quality_factor - 5500.0).abs() / 5500.0);
                err_m.push((fit.mass_kg - 1.1e-7).abs() / 1.1e-7);
            }
            let median = |v: &mut Vec<f64>| -> f64 {
                v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                v[v.len() / 2]
            };
            let (mf, mq, mm) = (median(&mut err_f), median(&mut err_q), median(&mut err_m));
            ensure!(mf <= 1e-3, "median f_M error {mf:.2e} > 0.1%");
            ensure!(mq <= 0.05, "median Q error {mq:.2e} > 5%");
            ensure!(mm <= 0.05, "median m error {mm:.2e} > 5%");
            Ok(format!(
                "noiseless exact; noisy medians f {mf:.1e}, Q {mq:.1e}, m {mm:.1e}"
            ))
        },
    );
}

#[test]
fn criterion_09_angle_inversion_round_trip() {
    report(
        9,
        "cos^2 angle inversion round-trips to 1e-9 rad on [0, pi/2]; bad ratios rejected",
        Duration::from_secs(1),
        || {
            let mut worst = 0.0f64;
            for i in 0..=100_000 {
                let phi = std::f64::consts::FRAC_PI_2 * i as f64 / 100_000.0;
                let ratio = phi.cos().powi(2);
                let est = homodyne_angle_from_offset_ratio(ratio).map_err(|e| e.to_string())?;
                let err = (est.magnitude_rad - phi).abs();
                worst = worst.max(err);
                ensure!(err <= 1e-9, "round trip off by {err:e} rad at phi={phi}");
            }
            ensure!(
                homodyne_angle_from_offset_ratio(-1e-9).is_err(),
                "negative ratio accepted"
            );
            ensure!(
                homodyne_angle_from_offset_ratio(1.0 + 1e-6).is_err(),
                "ratio above 1 accepted"
            );
            ensure!(
                homodyne_angle_from_offset_ratio(f64::NAN).is_err(),
                "NaN ratio accepted"
            );
            Ok(format!("worst round-trip error {worst:.2e} rad"))
        },
    );
}

#[test]
fn criterion_10_cavity_derivations() {
    report(
        10,
        "finesse(50 ppm, 40 ppm) = 69813 +- 1; excess loss 518 +- 5 ppm; dip 38.0 +- 0.1%",
        Duration::from_secs(1),
        || {
            let laser = LaserDrive::new(1.064e-6, 30e-3, 1.0, 0.0).map_err(|e| e.to_string())?;
            let cryo = OpticalCavity::new(6e-3, 50e-6, 40e-6, 1.0).map_err(|e| e.to_string())?;
            let finesse = cryo.derive(&laser).finesse;
            ensure!(
                (finesse - 69_813.0).abs() <= 1.0,
                "finesse {finesse:.2} not within 1 of 69813"
            );

            let excess = excess_loss_for_finesse(1e4, 110e-6).map_err(|e| e.to_string())?;
            ensure!(
                (excess * 1e6 - 518.0).abs() <= 5.0,
                "excess loss {:.2} ppm not within 5 of 518",
                excess * 1e6
            );

            let mm = mode_matching_for_dip(0.38, 110e-6, excess).map_err(|e| e.to_string())?;
            let bench =
                OpticalCavity::new(12.2e-3, 110e-6, excess, mm).map_err(|e| e.to_string())?;
            let dip = bench.derive(&laser).reflection_dip;
            ensure!(
                (dip - 0.380).abs() <= 0.001,
                "reflection dip {:.4} not within 0.1% of 38.0%",
                dip
            );
            Ok(format!(
                "finesse {finesse:.2}, excess {:.2} ppm, dip {:.2}%",
                excess * 1e6,
                dip * 100.0
            ))
        },
    );
}
