use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::profile::{HardwareProfile, REFERENCE_RESOLUTION};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::{self, Stream};
use crate::space::{ArchId, KeyId, SearchSpaceConfig, SpaceIndex, SubgraphKey};

/// Asymptotic accuracies lie in `[ACCURACY_FLOOR, ACCURACY_FLOOR + ACCURACY_SPAN]`.
pub const ACCURACY_FLOOR: f64 = 0.80;
pub const ACCURACY_SPAN: f64 = 0.15;
/// Curvature of the size-to-accuracy map.
pub const SATURATION: f64 = 3.0;
/// Per-architecture accuracy scatter, as a fraction of the span.
pub const ACCURACY_SCATTER: f64 = 0.04;
pub const CURVE_RATE_MIN: f64 = 3.0;
pub const CURVE_RATE_MAX: f64 = 15.0;
/// Share of the curve rate set by the accuracy quality term: better models
/// also train faster. The rest is a per-architecture uniform draw.
pub const QUALITY_SHARE: f64 = 0.7;
/// Range of the lognormal shape of the tuning excess. Subgraphs with a larger
/// spread converge in fewer trials; the lower end still reaches 2% of the
/// optimum within 10,000 trials.
pub const SPREAD_MIN: f64 = 0.8;
pub const SPREAD_MAX: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchTruth {
    pub asymptotic_accuracy: f64,
    /// Epochs to reach `1 - 1/e` of the asymptote.
    pub curve_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyTruth {
    /// Best achievable latency of the subgraph, in ms.
    pub optimal_latency: f64,
    pub tuning_spread: f64,
}

/// Simulated ground truth for one (seed, space, hardware) triple.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    seed: u64,
    profile: HardwareProfile,
    index: Arc<SpaceIndex>,
    archs: Vec<ArchTruth>,
    keys: Vec<KeyTruth>,
}

/// Concave, saturating map of `[0, 1]` onto `[0, 1]`.
pub fn saturate(x: f64) -> f64 {
    (1.0 - (-SATURATION * x).exp()) / (1.0 - (-SATURATION).exp())
}

pub(crate) fn key_words(key: &SubgraphKey) -> [u64; 7] {
    [
        key.stage_index as u64,
        key.input_resolution as u64,
        key.in_channels as u64,
        key.out_channels as u64,
        key.expansion_ratio as u64,
        key.depth as u64,
        key.kernel_size as u64,
    ]
}

/// Profile-weighted analytic cost, before the seeded perturbation.
pub fn analytic_latency(profile: &HardwareProfile, key: &SubgraphKey) -> f64 {
    let resolution = (key.input_resolution as f64 / REFERENCE_RESOLUTION)
        .powf(profile.resolution_penalty_exponent);
    profile.ms_per_mac * profile.stage_multipliers[key.stage_index as usize] * key.macs() as f64 * resolution
}

pub fn generate_ground_truth(
    seed: u64,
    config: &SearchSpaceConfig,
    profile: &HardwareProfile,
) -> Result<GroundTruth> {
    let index = Arc::new(SpaceIndex::new(config.clone())?);
    GroundTruth::generate(seed, index, profile, Exec::default())
}

impl GroundTruth {
    /// Accuracy depends only on the seed and the architecture; latency also on
    /// the profile. Every value is a counter-based draw, so the result is
    /// identical under any execution mode.
    pub fn generate(seed: u64, index: Arc<SpaceIndex>, profile: &HardwareProfile, exec: Exec) -> Result<Self> {
        profile.validate(index.config().num_stages)?;
        let log_flops: Vec<f64> = (0..index.len()).map(|i| (index.flops(ArchId(i as u32)) as f64).ln()).collect();
        let lo = log_flops.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = log_flops.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let ids = index.all_ids();
        let archs = exec.map(&ids, |&id| {
            let x = if hi > lo { (log_flops[id.index()] - lo) / (hi - lo) } else { 0.5 };
            let scatter = ACCURACY_SCATTER * rng::normal(seed, Stream::AsymptoticAccuracy, &[id.0 as u64]);
            let quality = (saturate(x) + scatter).clamp(0.0, 1.0);
            let u = rng::uniform(seed, Stream::CurveRate, &[id.0 as u64]);
            let rate = QUALITY_SHARE * (1.0 - quality) + (1.0 - QUALITY_SHARE) * u;
            ArchTruth {
                asymptotic_accuracy: ACCURACY_FLOOR + ACCURACY_SPAN * quality,
                curve_rate: CURVE_RATE_MIN + (CURVE_RATE_MAX - CURVE_RATE_MIN) * rate,
            }
        });
        let keys = exec.map(index.keys(), |key| {
            let words = key_words(key);
            let z = rng::normal(seed, Stream::OptimalLatency, &words);
            let jitter = rng::uniform(seed, Stream::TuningSpread, &words);
            KeyTruth {
                optimal_latency: analytic_latency(profile, key) * (profile.latency_noise_sigma * z).exp(),
                tuning_spread: SPREAD_MIN + (SPREAD_MAX - SPREAD_MIN) * jitter,
            }
        });
        Ok(Self { seed, profile: profile.clone(), index, archs, keys })
    }

    /// Rebuilds a truth from stored tables, checking shape and ranges.
    pub fn from_tables(
        seed: u64,
        index: Arc<SpaceIndex>,
        profile: HardwareProfile,
        archs: Vec<ArchTruth>,
        keys: Vec<KeyTruth>,
    ) -> Result<Self> {
        profile.validate(index.config().num_stages)?;
        if archs.len() != index.len() || keys.len() != index.keys().len() {
            return Err(Error::config(format!(
                "tables hold {} architectures and {} subgraphs, the space has {} and {}",
                archs.len(),
                keys.len(),
                index.len(),
                index.keys().len()
            )));
        }
        if archs.iter().any(|a| !(a.asymptotic_accuracy > 0.0 && a.asymptotic_accuracy < 1.0 && a.curve_rate > 0.0)) {
            return Err(Error::config("architecture truth out of range"));
        }
        if keys.iter().any(|k| !(k.optimal_latency.is_finite() && k.optimal_latency > 0.0 && k.tuning_spread > 0.0)) {
            return Err(Error::config("subgraph truth out of range"));
        }
        Ok(Self { seed, profile, index, archs, keys })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn profile(&self) -> &HardwareProfile {
        &self.profile
    }

    pub fn index(&self) -> &SpaceIndex {
        &self.index
    }

    pub fn shared_index(&self) -> Arc<SpaceIndex> {
        Arc::clone(&self.index)
    }

    pub fn arch_tables(&self) -> &[ArchTruth] {
        &self.archs
    }

    pub fn key_tables(&self) -> &[KeyTruth] {
        &self.keys
    }

    pub fn arch(&self, id: ArchId) -> &ArchTruth {
        &self.archs[id.index()]
    }

    pub fn key(&self, id: KeyId) -> &KeyTruth {
        &self.keys[id.index()]
    }

    pub fn true_accuracy(&self, id: ArchId) -> f64 {
        self.archs[id.index()].asymptotic_accuracy
    }

    /// Fully tuned latency: the sum of the subgraphs' optimal latencies.
    pub fn true_latency(&self, id: ArchId) -> f64 {
        self.index.keys_of(id).iter().map(|k| self.keys[k.index()].optimal_latency).sum()
    }

    pub fn max_curve_rate(&self) -> f64 {
        self.archs.iter().map(|a| a.curve_rate).fold(0.0, f64::max)
    }
}
