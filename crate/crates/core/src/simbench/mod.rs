//! Simulated benchmark: deterministic ground truth plus the two
//! multi-fidelity evaluators standing in for training and auto-tuning.
//!
//! Validation accuracy after `e` epochs follows
//! `a_inf * (1 - exp(-e / curve_rate))` plus zero-mean noise keyed by
//! `(seed, arch, e)`. Trial `t` of a subgraph measures
//! `L* * (1 + X_t)` with `X_t = TUNING_MEDIAN_EXCESS * exp(spread * z_t)`.
//! In noisy mode `z_t` is a standard normal keyed by `(seed, subgraph, t)`;
//! in noiseless mode `z_t = probit(1 / (t + 2))`, a strictly decreasing
//! sequence that tracks the typical best-of-`t` draw, and accuracy noise is
//! off.

mod profile;
mod truth;

pub use profile::{shipped_profile, shipped_profiles, HardwareProfile, REFERENCE_RESOLUTION};
pub use truth::{
    analytic_latency, generate_ground_truth, saturate, ArchTruth, GroundTruth, KeyTruth, ACCURACY_FLOOR,
    ACCURACY_SCATTER, ACCURACY_SPAN, CURVE_RATE_MAX, CURVE_RATE_MIN, QUALITY_SHARE, SATURATION, SPREAD_MAX,
    SPREAD_MIN,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::space::{ArchId, KeyId, SpaceIndex, SubgraphKey};

/// Standard deviation of per-epoch validation noise (0.2 percentage points).
pub const ACCURACY_NOISE_STD: f64 = 0.002;
/// Median relative excess of a random tuning trial over the optimum.
pub const TUNING_MEDIAN_EXCESS: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    #[default]
    Noisy,
    Noiseless,
}

/// Accuracy progress of one architecture.
///
/// The latency half of an architecture's fidelity lives in the shared
/// per-subgraph [`TuningState`]s, since architectures share subgraphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityRecord {
    pub arch_id: ArchId,
    pub epochs_trained: u32,
    /// Best validation accuracy over all epochs seen; 0 before training.
    pub best_val_accuracy: f64,
}

impl FidelityRecord {
    pub fn new(arch_id: ArchId) -> Self {
        Self { arch_id, epochs_trained: 0, best_val_accuracy: 0.0 }
    }
}

/// Best-so-far tuning progress of one subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningState {
    pub trials_spent: u64,
    /// `+inf` until the first trial.
    pub best_latency: f64,
}

impl Default for TuningState {
    fn default() -> Self {
        Self { trials_spent: 0, best_latency: f64::INFINITY }
    }
}

/// Source of tuning measurements, keyed by subgraph and trial counter.
pub trait TrialEvaluator: Sync {
    fn sample(&self, key: KeyId, trial_index: u64) -> f64;
}

/// Both evaluators over one ground truth.
#[derive(Debug, Clone, Copy)]
pub struct Simulator<'a> {
    truth: &'a GroundTruth,
    noise: NoiseMode,
}

impl<'a> Simulator<'a> {
    pub fn new(truth: &'a GroundTruth, noise: NoiseMode) -> Self {
        Self { truth, noise }
    }

    pub fn truth(&self) -> &'a GroundTruth {
        self.truth
    }

    pub fn noise(&self) -> NoiseMode {
        self.noise
    }

    /// Validation accuracy measured at the end of epoch `epoch` (1-based).
    pub fn epoch_accuracy(&self, arch: ArchId, epoch: u32) -> f64 {
        let t = self.truth.arch(arch);
        let clean = t.asymptotic_accuracy * (1.0 - (-(epoch as f64) / t.curve_rate).exp());
        let noise = match self.noise {
            NoiseMode::Noiseless => 0.0,
            NoiseMode::Noisy => {
                ACCURACY_NOISE_STD * rng::normal(self.truth.seed(), Stream::EpochNoise, &[arch.0 as u64, epoch as u64])
            }
        };
        (clean + noise).clamp(0.0, 1.0)
    }

    /// Trains for `epochs` more epochs and keeps the best accuracy seen.
    pub fn train_epochs(&self, record: &FidelityRecord, epochs: u32) -> FidelityRecord {
        let start = record.epochs_trained;
        let best = (start + 1..=start + epochs)
            .map(|e| self.epoch_accuracy(record.arch_id, e))
            .fold(record.best_val_accuracy, f64::max);
        FidelityRecord { arch_id: record.arch_id, epochs_trained: start + epochs, best_val_accuracy: best }
    }

    fn trial_quantile(&self, words: &[u64; 7], trial_index: u64) -> f64 {
        match self.noise {
            NoiseMode::Noiseless => rng::probit(1.0 / (trial_index as f64 + 2.0)),
            NoiseMode::Noisy => {
                let mut w = [0u64; 8];
                w[..7].copy_from_slice(words);
                w[7] = trial_index;
                rng::normal(self.truth.seed(), Stream::Trial, &w)
            }
        }
    }

    pub fn sample_trial_id(&self, key: KeyId, trial_index: u64) -> f64 {
        let truth = self.truth.key(key);
        let words = truth::key_words(self.truth.index().key(key));
        let excess = TUNING_MEDIAN_EXCESS * (truth.tuning_spread * self.trial_quantile(&words, trial_index)).exp();
        truth.optimal_latency * (1.0 + excess)
    }

    /// Latency of tuning trial `trial_index` for `key`, in ms. Never below the
    /// subgraph's optimal latency.
    pub fn sample_trial(&self, key: &SubgraphKey, trial_index: u64) -> Result<f64> {
        let id = self.truth.index().key_id(key).ok_or(Error::UnknownKey(*key))?;
        Ok(self.sample_trial_id(id, trial_index))
    }
}

impl TrialEvaluator for Simulator<'_> {
    fn sample(&self, key: KeyId, trial_index: u64) -> f64 {
        self.sample_trial_id(key, trial_index)
    }
}

/// Sum of the best latencies of the architecture's subgraphs. Fails on the
/// first subgraph without any trial.
pub fn estimated_latency(index: &SpaceIndex, tuning: &[TuningState], arch: ArchId) -> Result<f64> {
    index.keys_of(arch).iter().try_fold(0.0, |acc, &k| {
        let state = &tuning[k.index()];
        if state.trials_spent == 0 {
            Err(Error::NotMeasurable(*index.key(k)))
        } else {
            Ok(acc + state.best_latency)
        }
    })
}
