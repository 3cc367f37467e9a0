use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A virtual hardware target. Optimal subgraph latency is
///
/// `ms_per_mac * stage_multipliers[stage] * macs * (input_resolution / 224)^resolution_penalty_exponent * exp(latency_noise_sigma * z)`
///
/// with `z` a standard normal keyed by the subgraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareProfile {
    pub name: String,
    pub ms_per_mac: f64,
    pub stage_multipliers: Vec<f64>,
    pub resolution_penalty_exponent: f64,
    pub latency_noise_sigma: f64,
}

pub const REFERENCE_RESOLUTION: f64 = 224.0;

impl HardwareProfile {
    /// Latency exactly proportional to MACs. `ms_per_mac` is a power of two so
    /// per-stage latencies and their sums stay exact.
    pub fn uniform(num_stages: usize) -> Self {
        Self {
            name: "uniform".into(),
            ms_per_mac: 2f64.powi(-24),
            stage_multipliers: vec![1.0; num_stages],
            resolution_penalty_exponent: 0.0,
            latency_noise_sigma: 0.0,
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.stage_multipliers.iter().all(|&m| m == 1.0)
            && self.resolution_penalty_exponent == 0.0
            && self.latency_noise_sigma == 0.0
    }

    pub fn validate(&self, num_stages: usize) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::config("hardware profile needs a name"));
        }
        if self.stage_multipliers.len() != num_stages {
            return Err(Error::config(format!(
                "profile {:?} has {} stage multipliers, the space has {num_stages} stages",
                self.name,
                self.stage_multipliers.len()
            )));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.ms_per_mac) || !self.stage_multipliers.iter().all(|&m| positive(m)) {
            return Err(Error::config(format!("profile {:?}: multipliers must be positive", self.name)));
        }
        if !self.resolution_penalty_exponent.is_finite()
            || !(self.latency_noise_sigma.is_finite() && self.latency_noise_sigma >= 0.0)
        {
            return Err(Error::config(format!("profile {:?}: invalid exponent or noise", self.name)));
        }
        Ok(())
    }
}

/// Built-in targets: an exact-FLOPs reference and three devices whose cost
/// deviates from FLOPs in different directions.
pub fn shipped_profiles() -> Vec<HardwareProfile> {
    vec![
        HardwareProfile::uniform(5),
        // In-order ARM CPU: early high-resolution stages are memory bound.
        HardwareProfile {
            name: "rpi".into(),
            ms_per_mac: 2f64.powi(-22),
            stage_multipliers: vec![1.8, 1.35, 1.1, 0.95, 0.9],
            resolution_penalty_exponent: 0.3,
            latency_noise_sigma: 0.12,
        },
        // Small MIPS camera SoC.
        HardwareProfile {
            name: "camera".into(),
            ms_per_mac: 2f64.powi(-21),
            stage_multipliers: vec![2.2, 1.5, 1.1, 0.9, 0.8],
            resolution_penalty_exponent: 0.45,
            latency_noise_sigma: 0.15,
        },
        // GPU: narrow late stages underutilize the device.
        HardwareProfile {
            name: "m1".into(),
            ms_per_mac: 2f64.powi(-27),
            stage_multipliers: vec![0.7, 0.8, 1.0, 1.3, 1.6],
            resolution_penalty_exponent: -0.5,
            latency_noise_sigma: 0.1,
        },
    ]
}

pub fn shipped_profile(name: &str) -> Option<HardwareProfile> {
    shipped_profiles().into_iter().find(|p| p.name == name)
}
