//! Command-line surface: subcommands, flags, shared scenario selection.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "pondero",
    version,
    about = "Cavity optomechanics noise workbench: synthesize homodyne spectra, \
             budget noise sources, check quantum-regime feasibility, fit measured spectra"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize homodyne quadrature spectra at one or more angles
    Synth(SynthArgs),
    /// Per-source noise budget at the configured homodyne angle
    Budget(BudgetArgs),
    /// Fit oscillator parameters from a measured spectrum CSV
    Fit(FitArgs),
    /// Quantum-regime feasibility: back-action vs thermal force
    Feasibility(FeasibilityArgs),
    /// Sweep one scenario parameter, tabulating squeezing and margin
    Sweep(SweepArgs),
    /// Convert fringe-offset calibration rows into homodyne angles
    AngleCal(AngleCalArgs),
}

/// How a scenario is assembled: preset, config file, and field overrides.
#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Scenario preset: paper-classical | paper-quantum
    #[arg(long)]
    pub preset: Option<String>,

    /// TOML or JSON configuration file; sections present in the file
    /// replace the corresponding preset section wholesale
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Field override as a dotted SI-unit path, e.g.
    /// laser.input_power_w=0.002 (repeatable, applied after the config)
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub set: Vec<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    /// Homodyne angles in degrees, comma-separated (e.g. --phi 0,-20,-44)
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub phi: Vec<f64>,

    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Relative multiplicative noise on the displacement spectrum output
    #[arg(long, value_name = "FRACTION")]
    pub noise_rel: Option<f64>,

    /// RNG seed for --noise-rel (recorded in the summary)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Table format for spectrum files
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct BudgetArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Table format for the budget file
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Thermal displacement PSD with a white floor
    Thermal,
    /// Driven transfer magnitude with a known force calibration
    Driven,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Input CSV: header `frequency_hz,psd_m2_per_hz[,weight]`
    #[arg(long)]
    pub input: PathBuf,

    /// Fit model
    #[arg(long, value_enum, default_value_t = FitMode::Thermal)]
    pub mode: FitMode,

    /// Bath temperature in kelvin (required for thermal fits)
    #[arg(long)]
    pub temperature_k: Option<f64>,

    /// Drive calibration mapping |chi| to the measured magnitude
    /// (required for driven fits)
    #[arg(long)]
    pub force_calibration: Option<f64>,

    /// Output directory for fit.json (created if missing)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FeasibilityArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    /// Optional output directory for feasibility.json
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,

    /// Dotted SI-unit path of the parameter to sweep
    /// (e.g. laser.input_power_w)
    #[arg(long)]
    pub param: String,

    /// First swept value
    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,

    /// Last swept value
    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,

    /// Number of evaluated points (>= 1)
    #[arg(long)]
    pub steps: usize,

    /// Space the points logarithmically (requires positive endpoints)
    #[arg(long)]
    pub log: bool,

    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Table format for the sweep file
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct AngleCalArgs {
    /// Input CSV: header `offset,level`, one zero-offset reference row
    #[arg(long)]
    pub input: PathBuf,

    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Table format for the calibration file
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}
