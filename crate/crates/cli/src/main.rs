//! `qdot`: spectra, driven dynamics and leakage sweeps of layered quantum dots.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 solver
//! error, 4 integrator step-size failure.

mod commands;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qdot_core::config::{parse_table, preset_name, set_key, Config};
use qdot_core::{Error, Result};
use toml::{Table, Value};

pub const VERSION: &str = env!("QDOT_VERSION");

#[derive(Parser)]
#[command(name = "qdot", version = VERSION, about = "Bound spectra and driven dynamics of layered quantum dots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound spectrum of one device, or of the fixed-offset family over a core-radius range
    Spectrum(Flags),
    /// Populations under a monochromatic drive
    Drive(Flags),
    /// Averaged leakage over drive strength, detuning or well depth
    Sweep(Flags),
    /// Compare spectral energies of a layered device with the exact ones
    OracleCheck(Flags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Drive(_) => "drive",
            Command::Sweep(_) => "sweep",
            Command::OracleCheck(_) => "oracle-check",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::Spectrum(f) | Command::Drive(f) | Command::Sweep(f) | Command::OracleCheck(f) => f,
        }
    }
}

/// Flags override the matching keys of the config file.
#[derive(Args, Debug, Default)]
struct Flags {
    /// TOML config, or a manifest.json from an earlier run
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// device1, device2, fig2, expsine or custom [device.preset]
    #[arg(long)]
    preset: Option<String>,
    /// Core radius of the fig2 preset, nm [device.core_radius_nm]
    #[arg(long, value_name = "NM", allow_negative_numbers = true)]
    core_radius: Option<f64>,
    /// Smallest core radius of the sweep, nm [spectrum.rc_min_nm]
    #[arg(long, value_name = "NM", allow_negative_numbers = true)]
    rc_min: Option<f64>,
    /// Largest core radius of the sweep, nm [spectrum.rc_max_nm]
    #[arg(long, value_name = "NM", allow_negative_numbers = true)]
    rc_max: Option<f64>,
    /// Number of core radii [spectrum.rc_steps]
    #[arg(long, value_name = "N")]
    rc_steps: Option<usize>,
    /// Drive amplitude: meV/nm, or atomic units for expsine [drive.a0_meV_per_nm | drive.a0_au]
    #[arg(long, value_name = "A0", allow_negative_numbers = true)]
    a0: Option<f64>,
    /// Drive frequency over the qubit resonance [drive.omega_rel]
    #[arg(long, value_name = "RATIO", allow_negative_numbers = true)]
    omega_rel: Option<f64>,
    /// strength, detuning or v0 [sweep.kind]
    #[arg(long)]
    kind: Option<String>,
    /// Also write sampled radial densities [spectrum.densities]
    #[arg(long)]
    densities: bool,
    /// Worker threads; 0 uses every core [run.jobs]
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Output directory [output.dir]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn read_config(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        return manifest::config_from_manifest(&text);
    }
    parse_table(&text)
}

fn resolve(flags: &Flags) -> Result<Config> {
    let mut table = match &flags.config {
        Some(path) => read_config(path)?,
        None => Table::new(),
    };
    if let Some(p) = &flags.preset {
        set_key(&mut table, "device.preset", Value::String(p.clone()))?;
    }
    let float_keys = [
        (flags.core_radius, "device.core_radius_nm"),
        (flags.rc_min, "spectrum.rc_min_nm"),
        (flags.rc_max, "spectrum.rc_max_nm"),
        (flags.omega_rel, "drive.omega_rel"),
    ];
    for (v, key) in float_keys {
        if let Some(v) = v {
            set_key(&mut table, key, Value::Float(v))?;
        }
    }
    if let Some(a) = flags.a0 {
        let key = if preset_name(&table) == "expsine" {
            "drive.a0_au"
        } else {
            "drive.a0_meV_per_nm"
        };
        set_key(&mut table, key, Value::Float(a))?;
    }
    if let Some(n) = flags.rc_steps {
        set_key(&mut table, "spectrum.rc_steps", Value::Integer(n as i64))?;
    }
    if let Some(k) = &flags.kind {
        set_key(&mut table, "sweep.kind", Value::String(k.clone()))?;
    }
    if flags.densities {
        set_key(&mut table, "spectrum.densities", Value::Boolean(true))?;
    }
    if let Some(j) = flags.jobs {
        set_key(&mut table, "run.jobs", Value::Integer(j as i64))?;
    }
    if let Some(out) = &flags.out {
        set_key(&mut table, "output.dir", Value::String(out.display().to_string()))?;
    }
    Config::from_table(&table)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::NotFound(_) | Error::InvalidParameter(_) => 2,
        Error::StepSize { .. } => 4,
        Error::Io(_) => 1,
        Error::Domain(_) | Error::IllConditioned(_) | Error::NoQubit(_) | Error::WidenRange(_) => 3,
    }
}

fn run(command: &Command) -> Result<()> {
    let config = resolve(command.flags())?;
    if config.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("run.jobs: {e}")))?;
    }
    let start = Instant::now();
    std::fs::create_dir_all(&config.output_dir)?;
    let outcome = match command {
        Command::Spectrum(_) => commands::spectrum(&config)?,
        Command::Drive(_) => commands::drive(&config)?,
        Command::Sweep(_) => commands::sweep(&config)?,
        Command::OracleCheck(_) => commands::oracle_check(&config)?,
    };
    let wall = start.elapsed().as_secs_f64();
    let written = manifest::write(command.name(), &config, &outcome, wall)?;
    for path in outcome.files.iter().map(|f| config.output_dir.join(&f.0)).chain(written) {
        println!("{}", path.display());
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    outcome.check()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qdot {}: {e}", cli.command.name());
            ExitCode::from(exit_code(&e))
        }
    }
}
