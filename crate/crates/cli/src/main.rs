//! `boundmetro`: data pipelines for the atom-in-cavity-array simulator.
//!
//! Every subcommand writes plain CSV/JSON next to an output prefix plus a
//! `<prefix>.manifest.json`. Frequencies are in units of ξ, times in 1/ξ.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use boundmetro::error::ErrorClass;
use boundmetro::io::{read_config, ParamOverrides};
use boundmetro::ModelParams;
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "boundmetro",
    version,
    about = "Bound-state dynamics and frequency metrology in a coupled-cavity array"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    /// Flat key = value parameter file; explicit flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Register size N; the array has 2^N - 1 cavities
    #[arg(long, conflicts_with = "cavities")]
    pub qubits: Option<u32>,
    /// Number of cavities n (odd)
    #[arg(long)]
    pub cavities: Option<usize>,
    /// Atomic transition frequency Ω
    #[arg(long, allow_hyphen_values = true)]
    pub omega_atom: Option<f64>,
    /// Cavity frequency ω₀
    #[arg(long, allow_hyphen_values = true)]
    pub omega_cavity: Option<f64>,
    /// Atom-cavity coupling J
    #[arg(long)]
    pub coupling: Option<f64>,
}

impl ParamArgs {
    fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            omega_atom: self.omega_atom,
            omega_cavity: self.omega_cavity,
            xi: None,
            coupling_j: self.coupling,
            qubits: self.qubits,
            cavities: self.cavities,
        }
    }

    /// Config file, then flags.
    pub fn layered(&self) -> boundmetro::Result<ParamOverrides> {
        let base = match &self.config {
            Some(path) => read_config(path)?,
            None => ParamOverrides::default(),
        };
        Ok(base.merged(self.overrides()))
    }

    /// Fully resolved parameters; a missing value is a usage error.
    pub fn resolve(&self) -> boundmetro::Result<ModelParams> {
        let layered = self.layered()?;
        let missing = layered.missing();
        if !missing.is_empty() {
            let flags: Vec<String> = missing.iter().map(|m| flag_name(m)).collect();
            Cli::command()
                .error(
                    ErrorKind::MissingRequiredArgument,
                    format!("missing required parameter(s): {} (flag or --config)", flags.join(", ")),
                )
                .exit();
        }
        layered.resolve()
    }
}

fn flag_name(key: &str) -> String {
    match key {
        "coupling_j" => "--coupling".into(),
        "qubits" => "--qubits/--cavities".into(),
        other => format!("--{}", other.replace('_', "-")),
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceArg {
    Numeric,
    LongtimeExact,
    Perturbative,
}

impl From<SourceArg> for boundmetro::metrology::Source {
    fn from(s: SourceArg) -> Self {
        use boundmetro::metrology::Source;
        match s {
            SourceArg::Numeric => Source::Numeric,
            SourceArg::LongtimeExact => Source::LongtimeExact,
            SourceArg::Perturbative => Source::Perturbative,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaperArg {
    Rectangular,
    Hann,
}

#[derive(Args, Debug, Clone)]
pub struct WindowArgs {
    /// Start of the analysis window (default: detected or whole range)
    #[arg(long)]
    pub window_start: Option<f64>,
    /// End of the analysis window
    #[arg(long)]
    pub window_end: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact excited-state population P_e(t)
    Dynamics {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = boundmetro::dynamics::DEFAULT_DT)]
        dt: f64,
        /// Add infinite-array columns `pe_analytic` (|α|²) and `pe_longtime`
        #[arg(long)]
        analytic: bool,
        #[arg(long, default_value = "dynamics")]
        out: PathBuf,
    },
    /// Bound-state poles, residue weights and the pole gap
    Poles {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value = "poles")]
        out: PathBuf,
    },
    /// Fourier spectrum of the regular oscillations
    Spectrum {
        #[command(flatten)]
        params: ParamArgs,
        /// Existing `t,pe` file instead of simulating
        #[arg(long)]
        input: Option<PathBuf>,
        /// Simulation horizon (default: long enough for window detection)
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, default_value_t = boundmetro::dynamics::DEFAULT_DT)]
        dt: f64,
        #[command(flatten)]
        window: WindowArgs,
        /// Transform the whole series instead of the regular window
        #[arg(long)]
        full: bool,
        #[arg(long, value_enum, default_value_t = TaperArg::Rectangular)]
        taper: TaperArg,
        /// Zero-padding factor
        #[arg(long, default_value_t = 8)]
        padding: usize,
        #[arg(long, default_value = "spectrum")]
        out: PathBuf,
    },
    /// Regular-window duration versus register size
    DurationScaling {
        #[command(flatten)]
        params: ParamArgs,
        /// Register sizes, comma separated
        #[arg(long, value_delimiter = ',', default_value = "5,6,7,8,9,10")]
        n_list: Vec<u32>,
        /// Window-test threshold as a fraction of the long-time amplitude
        #[arg(long, default_value_t = 0.20)]
        threshold: f64,
        /// Window-test length in oscillation periods
        #[arg(long, default_value_t = 4.0)]
        window_periods: f64,
        #[arg(long, default_value = "duration_scaling")]
        out: PathBuf,
    },
    /// Frequency uncertainty δΩ(t) for a total budget T
    Metrology {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 120.0)]
        t_total: f64,
        /// First encoding time (default: dt)
        #[arg(long)]
        tmin: Option<f64>,
        /// Last encoding time (default: T)
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = SourceArg::Numeric)]
        source: SourceArg,
        #[arg(long, default_value = "metrology")]
        out: PathBuf,
    },
    /// Power-law fit of δΩ against 1/t at the per-period optimal times
    Scaling {
        #[command(flatten)]
        params: ParamArgs,
        /// Existing `t,delta_omega` file instead of computing the curve
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 120.0)]
        t_total: f64,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = SourceArg::Numeric)]
        source: SourceArg,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value = "scaling")]
        out: PathBuf,
    },
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Usage => 2,
        ErrorClass::Domain => 3,
        ErrorClass::Numerical => 4,
        ErrorClass::Io => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
