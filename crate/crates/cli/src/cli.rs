//! Command-line surface. Every config key has a flag of the same name.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::config::{parse_assignment, ExperimentConfig, FileConfig, Mode, Overrides, OUTPUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "spikelab", version, about = "Strong-measurement limits of Belavkin equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config file; command-line values take precedence over it.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for ensembles and sweeps (0: one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Set any param, `key=value` (value read as JSON when possible).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

macro_rules! mode_args {
    ($name:ident { $($field:ident : $ty:ty = $key:literal),* $(,)? } lists { $($lfield:ident = $lkey:literal),* $(,)? }) => {
        #[derive(Debug, Clone, Default, Args)]
        pub struct $name {
            $(
                #[arg(long = $key)]
                pub $field: Option<$ty>,
            )*
            $(
                #[arg(long = $lkey, value_delimiter = ',', num_args = 1..)]
                pub $lfield: Option<Vec<f64>>,
            )*
        }

        impl $name {
            pub fn overrides(&self) -> Vec<(String, Value)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push(($key.to_string(), serde_json::json!(v)));
                    }
                )*
                $(
                    if let Some(v) = &self.$lfield {
                        out.push(($lkey.to_string(), serde_json::json!(v)));
                    }
                )*
                out
            }
        }
    };
}

mode_args!(BelavkinArgs {
    dim: u64 = "dim",
    gamma: f64 = "gamma",
    model: String = "model",
    dt: f64 = "dt",
    horizon: f64 = "T",
    stride: u64 = "stride",
    trajectories: u64 = "trajectories",
} lists {
    amplitudes = "amplitudes",
    n_values = "n_values",
    energies = "energies",
    hamiltonian = "hamiltonian",
    measurement = "measurement",
    rho0 = "rho0",
    populations = "populations",
});

mode_args!(TwostateArgs {
    lambda: f64 = "lambda",
    p: f64 = "p",
    gamma: f64 = "gamma",
    q0: f64 = "q0",
    dt: f64 = "dt",
    horizon: f64 = "T",
    stride: u64 = "stride",
    trajectories: u64 = "trajectories",
} lists {});

mode_args!(CoupledSweepArgs {
    lambda: f64 = "lambda",
    p: f64 = "p",
    x0: f64 = "x0",
    dt_eff: f64 = "dt_eff",
    len: f64 = "L",
    epsilon: f64 = "epsilon",
    horizon: f64 = "H",
    delta: f64 = "delta",
    m_min: f64 = "m_min",
    dt_out: f64 = "dt_out",
    dump_stride: u64 = "dump_stride",
} lists {
    gammas = "gammas",
});

mode_args!(LimitSampleArgs {
    lambda: f64 = "lambda",
    p: f64 = "p",
    x0: f64 = "x0",
    horizon: f64 = "H",
    m_min: f64 = "m_min",
    trajectories: u64 = "trajectories",
} lists {});

mode_args!(ValidateArgs {
    lambda: f64 = "lambda",
    p: f64 = "p",
} lists {
    criteria = "criteria",
});

mode_args!(HausdorffSweepArgs {
    reference: String = "reference",
    horizon: f64 = "H",
} lists {
    deltas = "deltas",
});

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Euler-Maruyama trajectories of an n-level Belavkin equation.
    Belavkin {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: BelavkinArgs,
    },
    /// Trajectories of the scalar two-state model.
    Twostate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: TwostateArgs,
    },
    /// Time-changed paths over a list of gammas on one Brownian path, with the limit graph.
    CoupledSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: CoupledSweepArgs,
    },
    /// Samples of the limiting jump chain and its spikes.
    LimitSample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: LimitSampleArgs,
    },
    /// Runs acceptance criteria and writes a JSON report.
    Validate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: ValidateArgs,
    },
    /// Hausdorff distances from CSV sets to a reference set.
    HausdorffSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: HausdorffSweepArgs,
        /// Candidate set files.
        #[arg(long = "candidates", num_args = 1..)]
        candidates: Vec<String>,
    },
}

impl Command {
    /// Mode, shared options and the flag overrides.
    pub fn parts(&self) -> (Mode, &Common, Vec<(String, Value)>) {
        match self {
            Command::Belavkin { common, args } => (Mode::Belavkin, common, args.overrides()),
            Command::Twostate { common, args } => (Mode::Twostate, common, args.overrides()),
            Command::CoupledSweep { common, args } => (Mode::CoupledSweep, common, args.overrides()),
            Command::LimitSample { common, args } => (Mode::LimitSample, common, args.overrides()),
            Command::Validate { common, args } => (Mode::Validate, common, args.overrides()),
            Command::HausdorffSweep { common, args, candidates } => {
                let mut o = args.overrides();
                if !candidates.is_empty() {
                    o.push(("candidates".into(), serde_json::json!(candidates)));
                }
                (Mode::HausdorffSweep, common, o)
            }
        }
    }

    /// The resolved config and worker count.
    pub fn resolve(&self) -> Result<(ExperimentConfig, usize)> {
        let (mode, common, flags) = self.parts();
        let file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        // `--set` first so that dedicated flags win over it
        let mut params = common.set.iter().map(|s| parse_assignment(s)).collect::<Result<Vec<_>>>()?;
        params.extend(flags);
        let overrides = Overrides {
            seed: common.seed,
            output_dir: common.output_dir.clone(),
            params,
        };
        Ok((ExperimentConfig::resolve(mode, file, overrides)?, common.workers))
    }
}
