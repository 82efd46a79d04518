//! Subcommand implementations.
//!
//! Every command follows the same shape: resolve inputs, compute all
//! results, and only then touch the filesystem — a run that fails
//! validation leaves no partial output behind.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pondero::{
    calibrate_homodyne_angle, displacement_spectrum, fit_driven_response, fit_thermal_spectrum,
    quantum_regime_margin, squeezing_metrics, synthesize_spectrum, DrivenResponse,
    MeasuredSpectrum, QuadratureSpectrum, Scenario, SourceTag, SpectrumKernel,
};

use crate::cli::{
    AngleCalArgs, BudgetArgs, Cli, Command, FeasibilityArgs, FitArgs, FitMode, OutputFormat,
    ScenarioArgs, SweepArgs, SynthArgs,
};
use crate::config::{
    build_resolved, load_config, resolve_config, scenario_to_config, ScenarioConfig,
};
use crate::csvio::{read_numeric_csv, Table};
use crate::error::CliError;
use crate::paths::{apply_assignment, set_path};
use crate::summary::{AngleReport, FitReport, MarginReport, RunSummary};

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Budget(args) => run_budget(args),
        Command::Fit(args) => run_fit(args),
        Command::Feasibility(args) => run_feasibility(args),
        Command::Sweep(args) => run_sweep(args),
        Command::AngleCal(args) => run_angle_cal(args),
    }
}

/// A scenario ready to run, together with what the summary should echo.
struct Resolved {
    scenario: Scenario,
    preset: Option<String>,
    /// Fully resolved config: preset + file sections verbatim, with any
    /// section a `--set` touched regenerated from the scenario.  Loading
    /// this reproduces the run.
    echo: ScenarioConfig,
}

/// Preset and/or config file, then `--set` overrides, then validation.
fn resolve_scenario(args: &ScenarioArgs) -> Result<Resolved, CliError> {
    if args.config.is_none() && args.preset.is_none() {
        return Err(CliError::Validation(
            "no scenario given: pass --preset <paper-classical|paper-quantum> \
             and/or --config FILE"
                .into(),
        ));
    }
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => ScenarioConfig::default(),
    };
    let (mut echo, preset) = resolve_config(&file, args.preset.as_deref())?;
    let mut scenario = build_resolved(&echo)?;
    if !args.set.is_empty() {
        let mut touched = std::collections::BTreeSet::new();
        for assignment in &args.set {
            apply_assignment(&mut scenario, assignment)?;
            if let Some((path, _)) = assignment.split_once('=') {
                if let Some(section) = path.trim().split('.').next() {
                    touched.insert(section.to_string());
                }
            }
        }
        scenario.validate().map_err(CliError::from)?;
        let back = scenario_to_config(&scenario);
        for section in touched {
            match section.as_str() {
                "oscillator" => echo.oscillator = back.oscillator.clone(),
                "environment" => echo.environment = back.environment.clone(),
                "cavity" => echo.cavity = back.cavity.clone(),
                "laser" => echo.laser = back.laser.clone(),
                "detection" => echo.detection = back.detection.clone(),
                "grid" => echo.grid = back.grid.clone(),
                "model" => echo.model = back.model.clone(),
                _ => {}
            }
        }
    }
    Ok(Resolved {
        scenario,
        preset,
        echo,
    })
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))
}

fn table_path(dir: &Path, stem: &str, format: OutputFormat) -> PathBuf {
    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    dir.join(format!("{stem}.{ext}"))
}

fn write_table(table: &Table, path: &Path, format: OutputFormat) -> Result<(), CliError> {
    match format {
        OutputFormat::Csv => table.write_csv(path),
        OutputFormat::Json => table.write_json(path),
    }
}

/// The spectrum/budget table: frequency, total in shot units, the eight
/// source columns (which sum to the total), and total over reference.
fn spectrum_table(spectrum: &QuadratureSpectrum) -> Table {
    let mut columns = vec!["frequency_hz".to_string(), "total_rel_shot".to_string()];
    columns.extend(SourceTag::ALL.iter().map(|tag| tag.label().to_string()));
    columns.push("total_rel_reference".to_string());
    let relative = spectrum.relative_psd();
    let mut table = Table::new(columns);
    for (i, &frequency) in spectrum.frequency_hz.iter().enumerate() {
        let mut row = Vec::with_capacity(11);
        row.push(frequency);
        row.push(spectrum.total[i]);
        for tag in SourceTag::ALL {
            row.push(spectrum.source(tag)[i]);
        }
        row.push(relative[i]);
        table.push_row(row);
    }
    table
}

fn print_angle_line(report: &AngleReport) {
    println!(
        "  phi {:+7.2} deg: min {:+8.3} dB at {:.1} Hz ({}), max {:+8.3} dB at {:.1} Hz",
        report.homodyne_angle_deg,
        report.min_relative_psd_db,
        report.min_at_frequency_hz,
        report.min_side,
        report.max_relative_psd_db,
        report.max_at_frequency_hz,
    );
}

/// Same multiplicative-noise recipe as the library's measurement
/// synthesizer: PSD * max(1 + noise_rel * z, 1e-6) with Gaussian z.
fn apply_multiplicative_noise(values: &mut [f64], noise_rel: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for value in values.iter_mut() {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        *value *= (1.0 + noise_rel * z).max(1e-6);
    }
}

fn margin_report(scenario: &Scenario) -> MarginReport {
    let derived = scenario.cavity.derive(&scenario.laser);
    quantum_regime_margin(
        &scenario.oscillator,
        &scenario.environment,
        &derived,
        &scenario.laser,
    )
    .into()
}

fn run_synth(args: SynthArgs) -> Result<(), CliError> {
    if args.phi.is_empty() {
        return Err(CliError::Validation(
            "--phi needs at least one homodyne angle".into(),
        ));
    }
    if let Some(noise_rel) = args.noise_rel {
        if !(0.0..1.0).contains(&noise_rel) {
            return Err(CliError::Validation(format!(
                "--noise-rel must be in [0, 1), got {noise_rel}"
            )));
        }
    }
    let resolved = resolve_scenario(&args.scenario)?;
    let scenario = resolved.scenario;
    let resonance_hz = scenario.oscillator.resonance_frequency_hz();
    let kernel = SpectrumKernel::new(&scenario)?;

    let mut spectra = Vec::with_capacity(args.phi.len());
    for &phi_deg in &args.phi {
        let spectrum = kernel.synthesize(phi_deg.to_radians())?;
        let report = squeezing_metrics(&spectrum, resonance_hz)?;
        spectra.push((phi_deg, spectrum, report));
    }
    let mut displacement = displacement_spectrum(&scenario)?;
    let seed = args.noise_rel.map(|_| args.seed.unwrap_or(0));
    if let Some(noise_rel) = args.noise_rel {
        apply_multiplicative_noise(
            &mut displacement.psd_m2_per_hz,
            noise_rel,
            seed.unwrap_or(0),
        );
    }

    ensure_dir(&args.out)?;
    let mut summary = RunSummary::new("synth");
    summary.preset = resolved.preset;
    summary.seed = seed;
    summary.scenario = Some(resolved.echo);
    summary.quantum_regime = Some(margin_report(&scenario));

    println!(
        "synthesized {} angle(s), {} frequency points each",
        spectra.len(),
        kernel.frequency_hz().len()
    );
    for (phi_deg, spectrum, report) in &spectra {
        let path = table_path(
            &args.out,
            &format!("spectrum_phi_{phi_deg}deg"),
            args.format,
        );
        write_table(&spectrum_table(spectrum), &path, args.format)?;
        summary.record_output(&path);
        let angle = AngleReport::from_report(*phi_deg, report);
        print_angle_line(&angle);
        summary.angles.push(angle);
    }

    let mut displacement_table = Table::new(vec!["frequency_hz".into(), "psd_m2_per_hz".into()]);
    for i in 0..displacement.frequency_hz.len() {
        displacement_table.push_row(vec![
            displacement.frequency_hz[i],
            displacement.psd_m2_per_hz[i],
        ]);
    }
    let displacement_path = table_path(&args.out, "displacement", args.format);
    write_table(&displacement_table, &displacement_path, args.format)?;
    summary.record_output(&displacement_path);

    let summary_path = args.out.join("summary.json");
    summary.write(&summary_path)?;
    println!(
        "wrote {} data file(s) and {} to {}",
        summary.outputs.len(),
        summary_path.file_name().unwrap().to_string_lossy(),
        args.out.display()
    );
    Ok(())
}

fn run_budget(args: BudgetArgs) -> Result<(), CliError> {
    let resolved = resolve_scenario(&args.scenario)?;
    let scenario = resolved.scenario;
    let phi_deg = scenario.detection.homodyne_angle.to_degrees();
    let spectrum = synthesize_spectrum(&scenario, scenario.detection.homodyne_angle)?;
    let report = squeezing_metrics(&spectrum, scenario.oscillator.resonance_frequency_hz())?;
    let margin = margin_report(&scenario);

    ensure_dir(&args.out)?;
    let budget_path = table_path(&args.out, "budget", args.format);
    write_table(&spectrum_table(&spectrum), &budget_path, args.format)?;

    println!(
        "noise budget at phi = {phi_deg:.3} deg, {} frequency points",
        spectrum.len()
    );
    println!("  source              peak (shot units)");
    for tag in SourceTag::ALL {
        let peak = spectrum.source(tag).iter().cloned().fold(0.0_f64, f64::max);
        println!("  {:<19} {peak:.4e}", tag.label());
    }
    let angle = AngleReport::from_report(phi_deg, &report);
    print_angle_line(&angle);
    println!(
        "  quantum-regime margin {:.4} ({})",
        margin.margin, margin.verdict
    );

    let mut summary = RunSummary::new("budget");
    summary.preset = resolved.preset;
    summary.scenario = Some(resolved.echo);
    summary.record_output(&budget_path);
    summary.angles.push(angle);
    summary.quantum_regime = Some(margin);
    let summary_path = args.out.join("summary.json");
    summary.write(&summary_path)?;
    println!("wrote {} and summary.json", budget_path.display());
    Ok(())
}

fn run_fit(args: FitArgs) -> Result<(), CliError> {
    let (columns, rows) = read_numeric_csv(&args.input, 2)?;
    if columns.len() > 3 {
        return Err(CliError::Validation(format!(
            "{}: expected at most 3 columns, found {}",
            args.input.display(),
            columns.len()
        )));
    }
    if columns[0] != "frequency_hz" {
        return Err(CliError::Validation(format!(
            "{}: first column must be 'frequency_hz', got '{}'",
            args.input.display(),
            columns[0]
        )));
    }
    let value_name_ok = match args.mode {
        FitMode::Thermal => columns[1] == "psd_m2_per_hz",
        FitMode::Driven => columns[1] == "psd_m2_per_hz" || columns[1] == "magnitude",
    };
    if !value_name_ok {
        return Err(CliError::Validation(format!(
            "{}: second column must be 'psd_m2_per_hz', got '{}'",
            args.input.display(),
            columns[1]
        )));
    }
    if columns.len() == 3 && columns[2] != "weight" {
        return Err(CliError::Validation(format!(
            "{}: third column must be 'weight', got '{}'",
            args.input.display(),
            columns[2]
        )));
    }
    let frequency: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let values: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let weights: Option<Vec<f64>> =
        (columns.len() == 3).then(|| rows.iter().map(|r| r[2]).collect());

    let (fit, mode_name) = match args.mode {
        FitMode::Thermal => {
            let temperature = args.temperature_k.ok_or_else(|| {
                CliError::Validation("--temperature-k is required for thermal fits".into())
            })?;
            let mut data = MeasuredSpectrum::new(frequency, values)?;
            if let Some(w) = weights {
                data = data.with_weights(w)?;
            }
            (fit_thermal_spectrum(&data, temperature, None)?, "thermal")
        }
        FitMode::Driven => {
            let calibration = args.force_calibration.ok_or_else(|| {
                CliError::Validation("--force-calibration is required for driven fits".into())
            })?;
            let mut data = DrivenResponse::new(frequency, values)?;
            if let Some(w) = weights {
                data = data.with_weights(w)?;
            }
            (fit_driven_response(&data, calibration)?, "driven")
        }
    };

    ensure_dir(&args.out)?;
    let mut summary = RunSummary::new("fit");
    summary
        .notes
        .push(format!("input: {}", args.input.display()));
    summary.notes.push(format!("mode: {mode_name}"));
    summary.fit = Some(FitReport::from(fit));
    let fit_path = args.out.join("fit.json");
    summary.record_output(&fit_path);
    summary.write(&fit_path)?;

    println!(
        "{mode_name} fit {} after {} iteration(s), residual norm {:.4e}",
        if fit.converged {
            "converged"
        } else {
            "did NOT converge"
        },
        fit.iterations,
        fit.residual_norm
    );
    println!(
        "  resonance    {:.6e} Hz   +/- {:.2e}",
        fit.f_m_hz, fit.std_error_f_m_hz
    );
    println!(
        "  quality      {:.6e}      +/- {:.2e}",
        fit.quality_factor, fit.std_error_quality_factor
    );
    println!(
        "  mass         {:.6e} kg   +/- {:.2e}",
        fit.mass_kg, fit.std_error_mass_kg
    );
    if matches!(args.mode, FitMode::Thermal) {
        println!(
            "  floor        {:.6e} m^2/Hz +/- {:.2e}",
            fit.floor_m2_per_hz, fit.std_error_floor
        );
    }
    println!("wrote {}", fit_path.display());

    if !fit.converged {
        return Err(CliError::NonConvergence(format!(
            "best-so-far parameters written to {}",
            fit_path.display()
        )));
    }
    Ok(())
}

fn run_feasibility(args: FeasibilityArgs) -> Result<(), CliError> {
    let resolved = resolve_scenario(&args.scenario)?;
    let scenario = resolved.scenario;
    let report = margin_report(&scenario);
    println!(
        "back-action force PSD (LHS):   {:.6e} N^2/Hz",
        report.backaction_force_psd_n2_per_hz
    );
    println!(
        "thermal force reference (RHS): {:.6e} N^2/Hz",
        report.thermal_force_psd_n2_per_hz
    );
    println!("margin (LHS/RHS):              {:.6}", report.margin);
    println!("verdict:                       {}", report.verdict);

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let mut summary = RunSummary::new("feasibility");
        summary.preset = resolved.preset;
        summary.scenario = Some(resolved.echo);
        summary.quantum_regime = Some(report);
        let path = out.join("feasibility.json");
        summary.record_output(&path);
        summary.write(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sweep_values(from: f64, to: f64, steps: usize, log: bool) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::Validation("--steps must be at least 1".into()));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(CliError::Validation(format!(
            "sweep endpoints must be finite, got {from} and {to}"
        )));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    let n = (steps - 1) as f64;
    if log {
        if from <= 0.0 || to <= 0.0 {
            return Err(CliError::Validation(format!(
                "--log spacing needs positive endpoints, got {from} and {to}"
            )));
        }
        let ratio = to / from;
        Ok((0..steps)
            .map(|i| from * ratio.powf(i as f64 / n))
            .collect())
    } else {
        Ok((0..steps)
            .map(|i| from + (to - from) * i as f64 / n)
            .collect())
    }
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let values = sweep_values(args.from, args.to, args.steps, args.log)?;
    let resolved = resolve_scenario(&args.scenario)?;
    let base = resolved.scenario;

    let mut table = Table::new(vec!["value".into(), "min_db".into(), "margin".into()]);
    println!(
        "sweeping {} over [{:e}, {:e}] in {} step(s){}",
        args.param,
        args.from,
        args.to,
        args.steps,
        if args.log { ", log-spaced" } else { "" }
    );
    let mut best: Option<(f64, f64)> = None;
    for &value in &values {
        let mut scenario = base;
        set_path(&mut scenario, &args.param, value)?;
        scenario.validate().map_err(CliError::from)?;
        let spectrum = synthesize_spectrum(&scenario, scenario.detection.homodyne_angle)?;
        let report = squeezing_metrics(&spectrum, scenario.oscillator.resonance_frequency_hz())?;
        let margin = margin_report(&scenario);
        println!(
            "  {value:<14.6e} min {:+8.3} dB  margin {:.4}",
            report.min_relative_psd_db, margin.margin
        );
        if best.is_none_or(|(_, db)| report.min_relative_psd_db < db) {
            best = Some((value, report.min_relative_psd_db));
        }
        table.push_row(vec![value, report.min_relative_psd_db, margin.margin]);
    }
    if let Some((value, db)) = best {
        println!(
            "deepest squeezing {db:+.3} dB at {} = {value:.6e}",
            args.param
        );
    }

    ensure_dir(&args.out)?;
    let sweep_path = table_path(&args.out, "sweep", args.format);
    write_table(&table, &sweep_path, args.format)?;
    let mut summary = RunSummary::new("sweep");
    summary.preset = resolved.preset;
    summary.scenario = Some(resolved.echo);
    summary.record_output(&sweep_path);
    summary.notes.push(format!(
        "param={} from={:e} to={:e} steps={} spacing={}",
        args.param,
        args.from,
        args.to,
        args.steps,
        if args.log { "log" } else { "linear" }
    ));
    let summary_path = args.out.join("summary.json");
    summary.write(&summary_path)?;
    println!("wrote {} and summary.json", sweep_path.display());
    Ok(())
}

fn run_angle_cal(args: AngleCalArgs) -> Result<(), CliError> {
    let (columns, rows) = read_numeric_csv(&args.input, 2)?;
    if columns.len() != 2 || columns[0] != "offset" || columns[1] != "level" {
        return Err(CliError::Validation(format!(
            "{}: expected header 'offset,level', got '{}'",
            args.input.display(),
            columns.join(",")
        )));
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    let estimates = calibrate_homodyne_angle(&pairs)?;

    let mut table = Table::new(vec![
        "offset".into(),
        "angle_rad".into(),
        "angle_deg".into(),
        "sign_ambiguous".into(),
    ]);
    for (offset, estimate) in &estimates {
        println!(
            "  offset {offset:+.6}: |phi| = {:.6} rad = {:.3} deg{}",
            estimate.magnitude_rad,
            estimate.magnitude_rad.to_degrees(),
            if estimate.sign_ambiguous {
                " (sign ambiguous)"
            } else {
                ""
            }
        );
        table.push_row(vec![
            *offset,
            estimate.magnitude_rad,
            estimate.magnitude_rad.to_degrees(),
            if estimate.sign_ambiguous { 1.0 } else { 0.0 },
        ]);
    }

    ensure_dir(&args.out)?;
    let path = table_path(&args.out, "angle_cal", args.format);
    write_table(&table, &path, args.format)?;
    let mut summary = RunSummary::new("angle-cal");
    summary
        .notes
        .push(format!("input: {}", args.input.display()));
    summary.record_output(&path);
    let summary_path = args.out.join("summary.json");
    summary.write(&summary_path)?;
    println!("wrote {} and summary.json", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_values_cover_endpoints() {
        let linear = sweep_values(2.0, 30.0, 5, false).unwrap();
        assert_eq!(linear.len(), 5);
        assert_eq!(linear[0], 2.0);
        assert_eq!(linear[4], 30.0);
        let log = sweep_values(2.0, 32.0, 5, true).unwrap();
        assert!((log[1] / log[0] - 2.0).abs() < 1e-12);
        assert!((log[4] - 32.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_values_edge_cases() {
        assert_eq!(sweep_values(7.0, 9.0, 1, false).unwrap(), vec![7.0]);
        assert!(sweep_values(1.0, 2.0, 0, false).is_err());
        assert!(sweep_values(-1.0, 2.0, 3, true).is_err());
        assert!(sweep_values(f64::NAN, 2.0, 3, false).is_err());
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let mut a = vec![1.0; 64];
        let mut b = vec![1.0; 64];
        let mut c = vec![1.0; 64];
        apply_multiplicative_noise(&mut a, 0.1, 7);
        apply_multiplicative_noise(&mut b, 0.1, 7);
        apply_multiplicative_noise(&mut c, 0.1, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|v| *v > 0.0));
    }
}
