//! Command-line front end: argument parsing, configuration files and
//! result output.

mod commands;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
pub use table::{format_number, Cell, ResultTable};

/// Directory for output files when `--out` is not given.
pub const OUT_DIR_ENV: &str = "HUBBARD_QSIM_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "hubbard-qsim", version, about = "Hubbard-model ground states by simulated IQPE and adiabatic evolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ground-state energy by IQPE over a (U0, N_occ) grid.
    GseScan(GseScanArgs),
    /// IQPE error against bit precision or Trotter steps.
    Convergence(ConvergenceArgs),
    /// Observables after adiabatic evolution, against the oracle.
    Adiabatic(AdiabaticArgs),
    /// Mean and spread of noisy IQPE energies while one noise parameter is scaled.
    NoiseSweep(NoiseSweepArgs),
    /// Exact and noisy IQPE energies of the reduced lattice against U0.
    Fig8(Fig8Args),
    /// Exact diagonalization: sector energies, gaps and observables.
    Ed(EdArgs),
    /// Print a generated circuit.
    DumpCircuit(DumpArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Debug)]
pub struct CommonArgs {
    /// hexagon6 | triangle | chain:N | ring:N
    #[arg(long)]
    pub lattice: Option<String>,
    /// On-site interaction: value, list "0,1,3" or range "0..6" / "0..3:0.5".
    #[arg(long, allow_hyphen_values = true)]
    pub u0: Option<String>,
    /// Electron counts: value, list or range.
    #[arg(long)]
    pub nocc: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma0: f64,
    #[arg(long)]
    pub m_bits: Option<usize>,
    #[arg(long)]
    pub trotter_steps: Option<usize>,
    /// Shots per IQPE bit (or per run for sampled observables).
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Relative padding of the IQPE energy window.
    #[arg(long, default_value_t = 0.02)]
    pub margin: f64,
    /// Noise profile file (key = value lines).
    #[arg(long)]
    pub noise_profile: Option<PathBuf>,
    /// Scale a noise parameter, e.g. p2q=5 or t1t2=0.5; "strength" scales all errors. Repeatable.
    #[arg(long, value_name = "KEY=FACTOR")]
    pub scale: Vec<String>,
    /// auto | trajectories | density
    #[arg(long, default_value = "auto")]
    pub backend: String,
    /// Apply relaxation once per moment instead of merging idle spans.
    #[arg(long)]
    pub per_moment_relaxation: bool,
    /// Skip relaxation during the measurement window.
    #[arg(long)]
    pub no_measurement_relaxation: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also emit fillings whose adiabatic path closes the gap.
    #[arg(long)]
    pub include_gapless: bool,
    /// Controlled U^p as one evolution over p·t instead of p repetitions.
    #[arg(long)]
    pub fast_powers: bool,
    /// Fail (exit 1) when a row's error exceeds this value.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Fail (exit 1) when a row's error exceeds its default tolerance.
    #[arg(long)]
    pub check: bool,
    /// Record wall time in the manifest.
    #[arg(long)]
    pub timing: bool,
    /// Flat key = value file of option defaults; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GseScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Sweep {
    M,
    Trotter,
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Sweep::M)]
    pub sweep: Sweep,
    /// Values of the swept parameter (list or range).
    #[arg(long)]
    pub values: Option<String>,
}

#[derive(Args, Debug)]
pub struct AdiabaticArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 40.0)]
    pub total_time: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    /// Use one fixed term order in every slice.
    #[arg(long)]
    pub fixed_order: bool,
    /// η grid points for the adiabatic-limit reference.
    #[arg(long, default_value_t = 201)]
    pub transport_points: usize,
    /// η grid points for the minimum-gap scan.
    #[arg(long, default_value_t = 41)]
    pub gap_samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepMode {
    /// Every other channel off.
    Isolated,
    /// Every other channel at the base profile.
    Baseline,
}

#[derive(Args, Debug)]
pub struct NoiseSweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// p1q | p2q | t1 | t2 | t1t2 | t1q | t2q | tmeas | p01 | p10 | readout
    #[arg(long)]
    pub param: String,
    #[arg(long, default_value = "0.2,1,5")]
    pub factors: String,
    #[arg(long, value_enum, default_value_t = SweepMode::Isolated)]
    pub mode: SweepMode,
}

#[derive(Args, Debug)]
pub struct Fig8Args {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 50)]
    pub improved_runs: usize,
    #[arg(long, default_value_t = 50_000)]
    pub improved_shots: usize,
    /// Skip the m = 5, N_trot = 15 variants.
    #[arg(long)]
    pub no_improved: bool,
}

#[derive(Args, Debug)]
pub struct EdArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Emit ground-state observables instead of energies.
    #[arg(long)]
    pub observables: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CircuitKind {
    TrotterStep,
    Evolution,
    Slater,
    IqpeIteration,
    Adiabatic,
}

#[derive(Args, Debug)]
pub struct DumpArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = CircuitKind::TrotterStep)]
    pub kind: CircuitKind,
    /// Step or total time, depending on the kind.
    #[arg(long)]
    pub time: Option<f64>,
    /// IQPE iteration index (1-based).
    #[arg(long, default_value_t = 1)]
    pub iteration: usize,
    /// Feedback phase of the IQPE iteration, in turns.
    #[arg(long, default_value_t = 0.0)]
    pub omega: f64,
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::GseScan(a) => &a.common,
            Command::Convergence(a) => &a.common,
            Command::Adiabatic(a) => &a.common,
            Command::NoiseSweep(a) => &a.common,
            Command::Fig8(a) => &a.common,
            Command::Ed(a) => &a.common,
            Command::DumpCircuit(a) => &a.common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::GseScan(_) => "gse-scan",
            Command::Convergence(_) => "convergence",
            Command::Adiabatic(_) => "adiabatic",
            Command::NoiseSweep(_) => "noise-sweep",
            Command::Fig8(_) => "fig8",
            Command::Ed(_) => "ed",
            Command::DumpCircuit(_) => "dump-circuit",
        }
    }
}

/// Parses a flat `key = value` file into command-line arguments. Keys are
/// long option names without dashes; `true`/`false` toggle flags, and a
/// key may repeat for list options such as `scale`.
pub fn config_arguments(text: &str) -> Result<Vec<(String, Option<String>)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = k.trim().replace('_', "-");
        let value = v.trim();
        if key.is_empty() || key == "config" {
            return Err(Error::Parse(format!("config line {}: bad key '{}'", lineno + 1, k.trim())));
        }
        match value {
            "true" => out.push((key, None)),
            "false" => {}
            _ => out.push((key, Some(value.to_string()))),
        }
    }
    Ok(out)
}

/// Inserts options from a `--config` file right after the subcommand,
/// skipping any option that is also given on the command line.
fn expand_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let pos = strs.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else {
        return Ok(args);
    };
    let path = match strs[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => strs.get(pos + 1).cloned().ok_or("--config needs a file")?,
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let entries = config_arguments(&text).map_err(|e| e.to_string())?;
    let given = |key: &str| {
        let flag = format!("--{key}");
        strs.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let Some(sub) = strs.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 1) else {
        return Ok(args);
    };
    let mut out: Vec<OsString> = args[..=sub].to_vec();
    for (key, value) in entries {
        if given(&key) {
            continue;
        }
        out.push(format!("--{key}").into());
        if let Some(v) = value {
            out.push(v.into());
        }
    }
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

/// What a command produced.
pub enum Output {
    Table(ResultTable),
    Text(String, Value),
}

/// Runs the CLI and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e @ (Error::InvalidArgument(_) | Error::Parse(_))) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn execute(command: &Command) -> Result<i32> {
    let start = Instant::now();
    let common = command.common();
    let (output, mut manifest) = commands::dispatch(command)?;
    manifest.insert("tool".into(), Value::from("hubbard-qsim"));
    manifest.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    manifest.insert("command".into(), Value::from(command.name()));
    manifest.insert("seed".into(), Value::from(common.seed));
    if common.timing {
        manifest.insert("wall_time_s".into(), Value::from(start.elapsed().as_secs_f64()));
    }
    let (body, failures) = match (&output, common.format) {
        (Output::Table(t), Format::Csv) => {
            manifest.insert("rows".into(), Value::from(t.rows.len()));
            (t.to_csv(), t.failures)
        }
        (Output::Table(t), Format::Json) => {
            manifest.insert("rows".into(), Value::from(t.rows.len()));
            (t.to_json(&manifest), t.failures)
        }
        (Output::Text(text, _), Format::Csv) => (text.clone(), 0),
        (Output::Text(_, json), Format::Json) => {
            let mut doc = Map::new();
            doc.insert("manifest".into(), Value::Object(manifest.clone()));
            doc.insert("circuit".into(), json.clone());
            (serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable") + "\n", 0)
        }
    };
    let ext = match common.format {
        Format::Csv if matches!(output, Output::Text(..)) => "txt",
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let target = common.out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV).map(|d| Path::new(&d).join(format!("{}.{ext}", command.name())))
    });
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, body)?;
            if common.format == Format::Csv {
                let mut m = serde_json::to_string_pretty(&Value::Object(manifest)).expect("serializable");
                m.push('\n');
                let mut name = path.clone().into_os_string();
                name.push(".manifest.json");
                std::fs::write(PathBuf::from(name), m)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
        }
    }
    if failures > 0 {
        eprintln!("{failures} row(s) outside tolerance");
        return Ok(EXIT_CHECK_FAILED);
    }
    Ok(EXIT_OK)
}
