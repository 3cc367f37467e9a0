//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 3
//! profile = "rpi"
//! mode = "threshold"
//! nu_ms = 12.5
//! noiseless = true
//! output_dir = "out/rpi-3"
//!
//! [unit]
//! epochs_per_unit = 1
//! trials_per_unit = 64
//! ```
//!
//! `space` is either `"table1-default"` (the 1024-architecture grid) or a
//! table with the fields of [`SearchSpaceConfig`]. Extra hardware profiles can
//! be declared under `[profiles.<name>]`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cosearch::engine::{
    EliminationRule, OracleSettings, ResourceLedger, ResourceUnit, SearchOptions, ThresholdConfig,
};
use cosearch::simbench::{shipped_profiles, HardwareProfile, NoiseMode};
use cosearch::space::{SearchSpaceConfig, SpaceIndex};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const DEFAULT_SPACE: &str = "table1-default";
/// The default budget is this fraction of the brute-force ledger.
pub const DEFAULT_BUDGET_DIVISOR: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    Named(String),
    Custom(SearchSpaceConfig),
}

impl Default for SpaceSpec {
    fn default() -> Self {
        SpaceSpec::Named(DEFAULT_SPACE.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Pareto,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerSection {
    pub beta: u32,
}

impl Default for SchedulerSection {
    fn default() -> Self {
        Self { beta: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub ms_per_mac: f64,
    pub stage_multipliers: Vec<f64>,
    #[serde(default)]
    pub resolution_penalty_exponent: f64,
    #[serde(default)]
    pub latency_noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub space: SpaceSpec,
    pub profile: String,
    #[serde(default)]
    pub mode: Mode,
    /// Latency threshold in ms; threshold mode only.
    pub nu_ms: Option<f64>,
    /// Search budget in resource units. Defaults to 1/16 of the brute-force
    /// ledger.
    pub budget_units: Option<u64>,
    #[serde(default)]
    pub unit: ResourceUnit,
    #[serde(default)]
    pub scheduler: SchedulerSection,
    #[serde(default)]
    pub oracle: OracleSettings,
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub profiles: BTreeMap<String, ProfileSpec>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// What a benchmark file is a function of.
#[derive(Serialize)]
struct BenchmarkIdentity<'a> {
    seed: u64,
    space: &'a SearchSpaceConfig,
    profile: &'a HardwareProfile,
}

/// Everything that affects a run's results; the output directory does not.
#[derive(Serialize)]
struct RunIdentity<'a> {
    benchmark: BenchmarkIdentity<'a>,
    mode: Mode,
    nu_ms: Option<f64>,
    budget_units: Option<u64>,
    unit: ResourceUnit,
    scheduler: SchedulerSection,
    oracle: OracleSettings,
    noiseless: bool,
}

pub fn sha256_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config values serialize");
    hex::encode(Sha256::digest(&bytes))
}

impl RunConfig {
    pub fn new(seed: u64, profile: &str) -> Self {
        Self {
            seed,
            space: SpaceSpec::default(),
            profile: profile.into(),
            mode: Mode::Pareto,
            nu_ms: None,
            budget_units: None,
            unit: ResourceUnit::default(),
            scheduler: SchedulerSection::default(),
            oracle: OracleSettings::default(),
            noiseless: false,
            output_dir: default_output_dir(),
            profiles: BTreeMap::new(),
        }
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::parse(path, e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.space_config()?.validate()?;
        self.unit.validate()?;
        if self.scheduler.beta == 0 {
            return Err(CliError::config("scheduler.beta must be at least 1"));
        }
        let shipped: Vec<String> = shipped_profiles().into_iter().map(|p| p.name).collect();
        if let Some(name) = self.profiles.keys().find(|n| shipped.contains(n)) {
            return Err(CliError::config(format!("profile '{name}' is built in and cannot be redefined")));
        }
        self.hardware_profile()?;
        match (self.mode, self.nu_ms) {
            (Mode::Threshold, None) => Err(CliError::config("threshold mode needs nu_ms")),
            (Mode::Threshold, Some(nu)) => ThresholdConfig::new(nu).map(|_| ()).map_err(Into::into),
            (Mode::Pareto, Some(_)) => Err(CliError::config("nu_ms is only used in threshold mode")),
            (Mode::Pareto, None) => Ok(()),
        }?;
        if self.budget_units == Some(0) {
            return Err(CliError::config("budget_units must be positive"));
        }
        Ok(())
    }

    pub fn space_config(&self) -> Result<SearchSpaceConfig> {
        match &self.space {
            SpaceSpec::Named(name) if name == DEFAULT_SPACE => Ok(SearchSpaceConfig::default()),
            SpaceSpec::Named(name) => {
                Err(CliError::config(format!("unknown space '{name}'; available: {DEFAULT_SPACE}, or a [space] table")))
            }
            SpaceSpec::Custom(c) => Ok(c.clone()),
        }
    }

    pub fn profile_names(&self) -> Vec<String> {
        shipped_profiles().into_iter().map(|p| p.name).chain(self.profiles.keys().cloned()).collect()
    }

    pub fn hardware_profile(&self) -> Result<HardwareProfile> {
        let num_stages = self.space_config()?.num_stages;
        let profile = match shipped_profiles().into_iter().find(|p| p.name == self.profile) {
            Some(p) => p,
            None => match self.profiles.get(&self.profile) {
                Some(spec) => HardwareProfile {
                    name: self.profile.clone(),
                    ms_per_mac: spec.ms_per_mac,
                    stage_multipliers: spec.stage_multipliers.clone(),
                    resolution_penalty_exponent: spec.resolution_penalty_exponent,
                    latency_noise_sigma: spec.latency_noise_sigma,
                },
                None => {
                    return Err(CliError::config(format!(
                        "unknown hardware profile '{}'; available: {}",
                        self.profile,
                        self.profile_names().join(", ")
                    )))
                }
            },
        };
        profile.validate(num_stages)?;
        Ok(profile)
    }

    pub fn noise(&self) -> NoiseMode {
        if self.noiseless {
            NoiseMode::Noiseless
        } else {
            NoiseMode::Noisy
        }
    }

    pub fn rule(&self) -> Result<EliminationRule> {
        Ok(match self.mode {
            Mode::Pareto => EliminationRule::Pareto,
            Mode::Threshold => {
                let nu = self.nu_ms.ok_or_else(|| CliError::config("threshold mode needs nu_ms"))?;
                EliminationRule::Threshold(ThresholdConfig::new(nu)?)
            }
        })
    }

    /// Hash of the inputs that determine the benchmark tables.
    pub fn benchmark_hash(&self) -> Result<String> {
        let space = self.space_config()?;
        let profile = self.hardware_profile()?;
        Ok(sha256_json(&BenchmarkIdentity { seed: self.seed, space: &space, profile: &profile }))
    }

    /// Hash of every input that affects a run or oracle result.
    pub fn config_hash(&self) -> Result<String> {
        let space = self.space_config()?;
        let profile = self.hardware_profile()?;
        Ok(sha256_json(&RunIdentity {
            benchmark: BenchmarkIdentity { seed: self.seed, space: &space, profile: &profile },
            mode: self.mode,
            nu_ms: self.nu_ms,
            budget_units: self.budget_units,
            unit: self.unit,
            scheduler: self.scheduler,
            oracle: self.oracle,
            noiseless: self.noiseless,
        }))
    }

    /// Ledger a brute-force run over the whole space would spend.
    pub fn oracle_ledger(&self, index: &Arc<SpaceIndex>) -> ResourceLedger {
        ResourceLedger {
            epochs: index.len() as u64 * self.oracle.epochs_full as u64,
            trials: index.keys().len() as u64 * self.oracle.trials_full_per_key,
        }
    }

    pub fn budget(&self, index: &Arc<SpaceIndex>) -> u64 {
        self.budget_units
            .unwrap_or_else(|| (self.oracle_ledger(index).units(&self.unit) / DEFAULT_BUDGET_DIVISOR).max(1))
    }

    pub fn search_options(&self, index: &Arc<SpaceIndex>) -> SearchOptions {
        let mut opts = SearchOptions::new(self.budget(index), self.seed);
        opts.unit = self.unit;
        opts.beta = self.scheduler.beta;
        opts.noise = self.noise();
        opts
    }
}
