//! Command-line parsing and merging with an optional config file.
//!
//! Config-file keys are the long flag names of the command being run. Flags
//! given on the command line win over file values.

use std::ffi::OsString;
use std::path::PathBuf;

use capq::experiments::{Spacing, SweepConfig};
use capq::{BasisState, DeviceParams, DriveMode, GateSpec, QubitParams};
use clap::{Args, Parser, Subcommand};

use crate::keyfile::KeyFile;

pub const DEFAULT_PRECISION: usize = 12;
pub const PRECISION_RANGE: std::ops::RangeInclusive<usize> = 6..=17;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Significant digits for printed numbers.
    pub precision: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Levels(DeviceParams),
    Cnot {
        ratio: f64,
        mode: DriveMode,
    },
    Sweep {
        config: SweepConfig,
        out: Option<PathBuf>,
    },
    Simulate(SimulateConfig),
    Verify,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub device: DeviceParams,
    pub mode: DriveMode,
    pub gates: Vec<GateSpec>,
    pub psi0: BasisState,
    pub tol: f64,
}

/// Parsing either yields a configuration or text to print (help, version).
#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Run(RunConfig),
    Display(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "capq",
    version,
    about = "Simulate and compile gates for two capacitively coupled charge qubits"
)]
struct Cli {
    /// Flat `key = value` file supplying the same options as the flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Significant digits in numeric output (6-17).
    #[arg(long, global = true, value_name = "DIGITS")]
    precision: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Effective single-qubit levels for each neighbour state.
    #[command(allow_negative_numbers = true)]
    Levels(LevelsArgs),
    /// Compile and run one CNOT from |11>.
    #[command(allow_negative_numbers = true)]
    Cnot(CnotArgs),
    /// Sweep the coupling ratio and write CSV.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Compile and run a gate list given in the config file.
    Simulate,
    /// Run the built-in invariant checks.
    Verify,
}

#[derive(Debug, Args)]
struct LevelsArgs {
    #[arg(long)]
    d1: Option<f64>,
    #[arg(long)]
    d2: Option<f64>,
    #[arg(long)]
    d12: Option<f64>,
}

#[derive(Debug, Args)]
struct CnotArgs {
    /// Coupling over drive strength.
    #[arg(long)]
    ratio: Option<f64>,
    /// gated or always-on.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    min: Option<f64>,
    #[arg(long)]
    max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Logarithmic spacing (default).
    #[arg(long, conflicts_with = "linear")]
    log: bool,
    #[arg(long)]
    linear: bool,
    /// gated, always-on or both.
    #[arg(long)]
    mode: Option<String>,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

const LEVELS_KEYS: &[&str] = &["d1", "d2", "d12"];
const CNOT_KEYS: &[&str] = &["ratio", "mode"];
const SWEEP_KEYS: &[&str] = &["min", "max", "points", "spacing", "mode", "out"];
const SIMULATE_KEYS: &[&str] = &[
    "d1", "d2", "d12", "a1", "a2", "mode", "gates", "psi0", "tol",
];
const ALL_KEYS: &[&str] = &[
    "d1",
    "d2",
    "d12",
    "a1",
    "a2",
    "ratio",
    "mode",
    "min",
    "max",
    "points",
    "spacing",
    "out",
    "precision",
    "gates",
    "psi0",
    "tol",
];

fn check_keys(file: &KeyFile, command: &str, allowed: &[&str]) -> Result<(), UsageError> {
    for key in file.keys() {
        if key == "precision" || allowed.contains(&key) {
            continue;
        }
        let line = file.get(key).map(|e| e.line).unwrap_or(0);
        return Err(UsageError(if ALL_KEYS.contains(&key) {
            format!("config line {line}: key '{key}' does not apply to '{command}'")
        } else {
            format!("config line {line}: unknown key '{key}'")
        }));
    }
    Ok(())
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| "not a number".to_string())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("not finite".into())
    }
}

fn count(s: &str) -> Result<usize, String> {
    s.trim()
        .parse()
        .map_err(|_| "not a non-negative integer".to_string())
}

fn single_mode(s: &str) -> Result<DriveMode, String> {
    s.parse()
}

fn sweep_modes(s: &str) -> Result<Vec<DriveMode>, String> {
    match s.trim() {
        "both" => Ok(DriveMode::ALL.to_vec()),
        other => Ok(vec![other.parse::<DriveMode>().map_err(|_| {
            format!("unknown mode '{other}' (expected gated, always-on or both)")
        })?]),
    }
}

fn spacing(s: &str) -> Result<Spacing, String> {
    match s.trim() {
        "log" => Ok(Spacing::Log),
        "linear" => Ok(Spacing::Linear),
        other => Err(format!(
            "unknown spacing '{other}' (expected log or linear)"
        )),
    }
}

fn gate_list(s: &str) -> Result<Vec<GateSpec>, String> {
    let gates: Vec<GateSpec> = s
        .split(';')
        .map(str::trim)
        .filter(|g| !g.is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    if gates.is_empty() {
        return Err("empty gate list".into());
    }
    Ok(gates)
}

fn basis_state(s: &str) -> Result<BasisState, String> {
    let t = s
        .trim()
        .trim_start_matches('|')
        .trim_end_matches('>')
        .trim_end_matches('⟩');
    BasisState::ORDER
        .into_iter()
        .find(|b| b.label().trim_start_matches('|').trim_end_matches('>') == t)
        .ok_or_else(|| "expected one of 11, 10, 01, 00".into())
}

/// Flag value if given, otherwise the file value.
fn pick<T>(
    flag: Option<T>,
    file: &KeyFile,
    key: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>, UsageError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.parsed(key, parse).map_err(UsageError),
    }
}

fn required<T>(value: Option<T>, key: &str, command: &str) -> Result<T, UsageError> {
    value.ok_or_else(|| UsageError(format!("missing required option --{key} for '{command}'")))
}

fn flag_mode<T>(
    flag: Option<String>,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>, UsageError> {
    flag.map(|s| {
        parse(&s).map_err(|e| UsageError(format!("invalid value '{s}' for '--mode': {e}")))
    })
    .transpose()
}

pub fn parse_args<I, T>(argv: I) -> Result<Parsed, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Ok(Parsed::Display(e.to_string()))
                }
                _ => Err(UsageError(e.to_string().trim_end().to_string())),
            };
        }
    };

    let file = match &cli.config {
        Some(path) => KeyFile::load(path).map_err(UsageError)?,
        None => KeyFile::default(),
    };

    let precision = pick(cli.precision, &file, "precision", count)?.unwrap_or(DEFAULT_PRECISION);
    if !PRECISION_RANGE.contains(&precision) {
        return Err(UsageError(format!(
            "precision {precision} outside {}..={}",
            PRECISION_RANGE.start(),
            PRECISION_RANGE.end()
        )));
    }

    let command = match cli.command {
        Cmd::Levels(a) => {
            check_keys(&file, "levels", LEVELS_KEYS)?;
            let d1 = required(pick(a.d1, &file, "d1", number)?, "d1", "levels")?;
            let d2 = required(pick(a.d2, &file, "d2", number)?, "d2", "levels")?;
            let d12 = required(pick(a.d12, &file, "d12", number)?, "d12", "levels")?;
            let device = DeviceParams {
                q1: QubitParams::new(d1, 0.0),
                q2: QubitParams::new(d2, 0.0),
                delta12: d12,
                a_ref: 1.0,
            };
            device.validate().map_err(|e| UsageError(e.to_string()))?;
            Command::Levels(device)
        }
        Cmd::Cnot(a) => {
            check_keys(&file, "cnot", CNOT_KEYS)?;
            let ratio = required(pick(a.ratio, &file, "ratio", number)?, "ratio", "cnot")?;
            if ratio <= 0.0 {
                return Err(UsageError(format!("ratio {ratio} must be positive")));
            }
            let mode = pick(flag_mode(a.mode, single_mode)?, &file, "mode", single_mode)?
                .unwrap_or_default();
            Command::Cnot { ratio, mode }
        }
        Cmd::Sweep(a) => {
            check_keys(&file, "sweep", SWEEP_KEYS)?;
            let defaults = SweepConfig::default();
            let flag_spacing = match (a.log, a.linear) {
                (true, _) => Some(Spacing::Log),
                (_, true) => Some(Spacing::Linear),
                _ => None,
            };
            let config = SweepConfig {
                ratio_min: pick(a.min, &file, "min", number)?.unwrap_or(defaults.ratio_min),
                ratio_max: pick(a.max, &file, "max", number)?.unwrap_or(defaults.ratio_max),
                points: pick(a.points, &file, "points", count)?.unwrap_or(defaults.points),
                spacing: pick(flag_spacing, &file, "spacing", spacing)?.unwrap_or(defaults.spacing),
                modes: pick(flag_mode(a.mode, sweep_modes)?, &file, "mode", sweep_modes)?
                    .unwrap_or(defaults.modes),
                ..defaults
            };
            config.validate().map_err(|e| UsageError(e.to_string()))?;
            let out = pick(a.out, &file, "out", |s| Ok(PathBuf::from(s)))?;
            Command::Sweep { config, out }
        }
        Cmd::Simulate => {
            if cli.config.is_none() {
                return Err(UsageError(
                    "'simulate' needs --config <file> with a 'gates' entry".into(),
                ));
            }
            check_keys(&file, "simulate", SIMULATE_KEYS)?;
            let get = |key: &str| file.parsed(key, number).map_err(UsageError);
            let device = DeviceParams {
                q1: QubitParams::new(get("d1")?.unwrap_or(0.0), get("a1")?.unwrap_or(1.0)),
                q2: QubitParams::new(get("d2")?.unwrap_or(0.0), get("a2")?.unwrap_or(1.0)),
                delta12: required(get("d12")?, "d12", "simulate")?,
                a_ref: 1.0,
            };
            device.validate().map_err(|e| UsageError(e.to_string()))?;
            let tol = get("tol")?.unwrap_or(1e-2);
            if tol < 0.0 {
                return Err(UsageError(format!("tol {tol} must be non-negative")));
            }
            Command::Simulate(SimulateConfig {
                device,
                mode: file
                    .parsed("mode", single_mode)
                    .map_err(UsageError)?
                    .unwrap_or_default(),
                gates: required(
                    file.parsed("gates", gate_list).map_err(UsageError)?,
                    "gates",
                    "simulate",
                )?,
                psi0: file
                    .parsed("psi0", basis_state)
                    .map_err(UsageError)?
                    .unwrap_or(BasisState::S11),
                tol,
            })
        }
        Cmd::Verify => {
            check_keys(&file, "verify", &[])?;
            Command::Verify
        }
    };
    Ok(Parsed::Run(RunConfig { command, precision }))
}
