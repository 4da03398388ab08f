use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ParamSet;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "QEMS_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "qems", version, about = "Trapped-ion / nanomechanical oscillator exchange, readout and cooling")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config file; flags take precedence over its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output CSV path, `-` for stdout [default: stdout, or <command>.csv in $QEMS_OUTPUT_DIR]
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Seed for Monte Carlo readout
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Leave the generation time out of the preamble
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    #[command(flatten)]
    pub params: ParamSet,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// End of the output grid, e.g. 50us
    #[arg(long)]
    pub t_max: Option<String>,
    /// Number of grid points including both ends
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Resolved parameters and derived device quantities
    Params,
    /// Mean occupations during the exchange, from the moment equations
    Exchange {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Full master-equation evolution on a truncated Fock space
    Evolve {
        #[command(flatten)]
        grid: GridArgs,
        /// Oscillator Fock levels [default: from the thermal tail]
        #[arg(long)]
        levels_a: Option<usize>,
        /// Ion Fock levels [default: from the thermal tail]
        #[arg(long)]
        levels_b: Option<usize>,
        /// Run above the occupation guardrail after printing a cost estimate
        #[arg(long)]
        allow_large: bool,
    },
    /// Sideband thermometry: ideal ratio for --nbar, or the two-stage protocol
    Readout {
        /// Thermal ion occupation to read out directly
        #[arg(long, conflicts_with = "tau")]
        nbar: Option<f64>,
        /// Exchange time before readout [default: n̄_a0 κ² τ² = 1]
        #[arg(long)]
        tau: Option<String>,
        /// Shots per sideband color
        #[arg(long)]
        shots: Option<u64>,
        /// Sideband coupling g [default: η Ω]
        #[arg(long)]
        g: Option<String>,
        /// Sideband pulse length [default: π / (2√2 g)]
        #[arg(long)]
        pulse: Option<String>,
    },
    /// Cooling schemes for the oscillator
    Cool {
        #[arg(long, value_enum, default_value_t = SchemeArg::All)]
        scheme: SchemeArg,
        /// Iterative cooling cycles
        #[arg(long, default_value_t = 10)]
        cycles: usize,
        /// Rethermalization time between cycles
        #[arg(long, default_value = "100us")]
        recool: String,
        /// Ion damping rate for continuous cooling (1/s)
        #[arg(long, default_value = "1e5")]
        ion_damping: String,
    },
    /// Phonon shift from a resonant classical force
    Force {
        /// Force amplitudes in newtons [default: the one-quantum force]
        #[arg(long, value_delimiter = ',')]
        force: Vec<f64>,
    },
    /// Single-exchange cooling across a parameter range
    Sweep {
        #[arg(long, value_enum)]
        vary: VaryArg,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        #[arg(long, default_value_t = 10)]
        points: usize,
        /// Logarithmic spacing
        #[arg(long)]
        log: bool,
        /// Worker threads [default: available cores]
        #[arg(long)]
        jobs: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Params => "params",
            Command::Exchange { .. } => "exchange",
            Command::Evolve { .. } => "evolve",
            Command::Readout { .. } => "readout",
            Command::Cool { .. } => "cool",
            Command::Force { .. } => "force",
            Command::Sweep { .. } => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    All,
    Single,
    Dump,
    TwoTraps,
    Iterative,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VaryArg {
    Kappa,
    Q,
    GammaA,
    NbarA0,
    Delta,
    Frequency,
}

impl VaryArg {
    pub fn column(self) -> &'static str {
        match self {
            VaryArg::Kappa => "kappa_rad_s",
            VaryArg::Q => "q",
            VaryArg::GammaA => "gamma_a_per_s",
            VaryArg::NbarA0 => "nbar_a0",
            VaryArg::Delta => "delta_rad_s",
            VaryArg::Frequency => "omega_rad_s",
        }
    }
}
