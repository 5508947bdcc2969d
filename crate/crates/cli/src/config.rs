//! Experiment configuration: TOML file, command-line overrides, typed access.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const DEFAULT_SEED: u64 = spikelab::validation::MASTER_SEED;
pub const DEFAULT_OUTPUT_DIR: &str = "spikelab-output";
/// Environment variable overriding `output_dir` from the config file.
pub const OUTPUT_DIR_ENV: &str = "SPIKELAB_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Belavkin,
    Twostate,
    CoupledSweep,
    LimitSample,
    Validate,
    HausdorffSweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Belavkin => "belavkin",
            Mode::Twostate => "twostate",
            Mode::CoupledSweep => "coupled-sweep",
            Mode::LimitSample => "limit-sample",
            Mode::Validate => "validate",
            Mode::HausdorffSweep => "hausdorff-sweep",
        }
    }

    /// Keys accepted under `[params]`.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Mode::Belavkin => &[
                "dim", "gamma", "model", "amplitudes", "n_values", "energies", "hamiltonian", "measurement",
                "couplings", "rho0", "populations", "dt", "T", "stride", "trajectories",
            ],
            Mode::Twostate => &["lambda", "p", "gamma", "q0", "dt", "T", "stride", "trajectories"],
            Mode::CoupledSweep => &[
                "lambda", "p", "x0", "gammas", "dt_eff", "L", "epsilon", "H", "delta", "m_min", "dt_out", "dump_stride",
            ],
            Mode::LimitSample => &["lambda", "p", "x0", "H", "m_min", "trajectories"],
            Mode::Validate => &["lambda", "p", "criteria"],
            Mode::HausdorffSweep => &["reference", "candidates", "H", "deltas"],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub type Params = BTreeMap<String, Value>;

/// The on-disk form; every field may be left to the command line.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: Params,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub params: Params,
    pub seed: u64,
    pub output_dir: PathBuf,
}

/// Command-line values layered over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub params: Vec<(String, Value)>,
}

/// `key=value`, with the value read as JSON when it parses and as a string otherwise.
pub fn parse_assignment(s: &str) -> Result<(String, Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("expected key=value, got `{s}`"))?;
    let v = v.trim();
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

impl ExperimentConfig {
    /// Precedence, lowest first: defaults, file, command line. The
    /// environment override of `output_dir` arrives through the command line.
    pub fn resolve(mode: Mode, file: FileConfig, overrides: Overrides) -> Result<Self> {
        if let Some(m) = file.mode {
            if m != mode {
                bail!("config file is for mode `{m}` but `{mode}` was requested");
            }
        }
        let mut params = file.params;
        params.extend(overrides.params);
        let cfg = Self {
            mode,
            params,
            seed: overrides.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            output_dir: overrides
                .output_dir
                .or(file.output_dir)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        };
        cfg.check_keys()?;
        Ok(cfg)
    }

    pub fn check_keys(&self) -> Result<()> {
        let allowed = self.mode.keys();
        for k in self.params.keys() {
            if !allowed.contains(&k.as_str()) {
                bail!("unknown key `{k}` for mode `{}` (accepted: {})", self.mode, allowed.join(", "));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of mode, seed and params. The output
    /// directory is not part of the experiment's identity.
    pub fn hash(&self) -> String {
        let canonical = serde_json::json!({
            "mode": self.mode,
            "seed": self.seed,
            "params": self.params,
        });
        hex(&Sha256::digest(canonical.to_string().as_bytes()))
    }

    pub fn get(&self) -> Getter<'_> {
        Getter { cfg: self }
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Typed access to params with key-named errors.
pub struct Getter<'a> {
    cfg: &'a ExperimentConfig,
}

impl Getter<'_> {
    fn raw(&self, key: &str) -> Option<&Value> {
        self.cfg.params.get(key)
    }

    fn missing(&self, key: &str) -> anyhow::Error {
        anyhow!("missing required key `{key}` for mode `{}`", self.cfg.mode)
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|v| v.as_f64().ok_or_else(|| anyhow!("key `{key}`: expected a number, got {v}")))
            .transpose()
    }

    pub fn f64(&self, key: &str, default: Option<f64>) -> Result<f64> {
        self.f64_opt(key)?.or(default).ok_or_else(|| self.missing(key))
    }

    pub fn u64(&self, key: &str, default: Option<u64>) -> Result<u64> {
        match self.raw(key) {
            Some(v) => v.as_u64().ok_or_else(|| anyhow!("key `{key}`: expected a nonnegative integer, got {v}")),
            None => default.ok_or_else(|| self.missing(key)),
        }
    }

    /// Integer at least `min`.
    pub fn count(&self, key: &str, default: usize, min: usize) -> Result<usize> {
        let n = self.u64(key, Some(default as u64))? as usize;
        if n < min {
            bail!("key `{key}` = {n}: expected an integer >= {min}");
        }
        Ok(n)
    }

    /// A list of numbers; a bare number is a one-element list.
    pub fn f64_list(&self, key: &str, default: Option<&[f64]>) -> Result<Vec<f64>> {
        match self.raw(key) {
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| anyhow!("key `{key}`: expected numbers, got {v}")))
                .collect(),
            Some(v) => Ok(vec![v.as_f64().ok_or_else(|| anyhow!("key `{key}`: expected a list of numbers, got {v}"))?]),
            None => default.map(<[f64]>::to_vec).ok_or_else(|| self.missing(key)),
        }
    }

    pub fn f64_list_list(&self, key: &str) -> Result<Vec<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(Vec::new()),
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|x| match x {
                    Value::Array(ys) => ys
                        .iter()
                        .map(|v| v.as_f64().ok_or_else(|| anyhow!("key `{key}`: expected numbers, got {v}")))
                        .collect(),
                    other => Err(anyhow!("key `{key}`: expected a list of lists, got {other}")),
                })
                .collect(),
            Some(v) => bail!("key `{key}`: expected a list of lists, got {v}"),
        }
    }

    pub fn string(&self, key: &str, default: Option<&str>) -> Result<String> {
        match self.raw(key) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(v) => bail!("key `{key}`: expected a string, got {v}"),
            None => default.map(str::to_string).ok_or_else(|| self.missing(key)),
        }
    }

    pub fn string_list(&self, key: &str) -> Result<Vec<String>> {
        match self.raw(key) {
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| anyhow!("key `{key}`: expected strings, got {v}")))
                .collect(),
            Some(Value::String(s)) => Ok(vec![s.clone()]),
            Some(v) => bail!("key `{key}`: expected a list of strings, got {v}"),
            None => Err(self.missing(key)),
        }
    }
}
