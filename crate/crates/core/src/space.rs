//! Architecture search space: enumeration, stage decomposition and FLOPs.
//!
//! Architectures are enumerated in lexicographic order over
//! `(resolution, width_multiplier, expansion_ratio, stage_depths[0], ..,
//! stage_depths[n-1])`, with the last stage depth varying fastest and each
//! axis following the order of its list in the config. `arch_id` is the
//! mixed-radix index of that tuple, so it equals the position in
//! [`enumerate_space`].
//!
//! Every stage is an inverted-residual stack. Stage `i` receives
//! `input_resolution` pixels per side, its first block has stride 2, and all of
//! its blocks run at `max(1, input_resolution / 2)` (floor division). Stage 0
//! sees the configured input resolution. Stage channel counts are
//! `round_half_up(base_stage_channels[i] * width_multiplier)`, clamped to at
//! least 1. Stage 0 takes `channels(0)` as its input width.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpaceConfig {
    pub resolutions: Vec<u32>,
    pub width_multipliers: Vec<f64>,
    pub expansion_ratios: Vec<u32>,
    pub stage_depth_choices: Vec<u32>,
    pub num_stages: usize,
    pub base_stage_channels: Vec<u32>,
    pub kernel_size: u32,
}

impl Default for SearchSpaceConfig {
    /// The 4 x 4 x 2 x 2^5 = 1024 model MobileNetV3-like grid.
    fn default() -> Self {
        Self {
            resolutions: vec![128, 160, 192, 224],
            width_multipliers: vec![0.25, 0.50, 0.75, 1.00],
            expansion_ratios: vec![3, 6],
            stage_depth_choices: vec![2, 3],
            num_stages: 5,
            base_stage_channels: vec![16, 24, 40, 80, 160],
            kernel_size: 3,
        }
    }
}

fn distinct<T: PartialEq>(xs: &[T]) -> bool {
    xs.iter().enumerate().all(|(i, x)| !xs[..i].contains(x))
}

impl SearchSpaceConfig {
    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("resolutions", self.resolutions.len()),
            ("width_multipliers", self.width_multipliers.len()),
            ("expansion_ratios", self.expansion_ratios.len()),
            ("stage_depth_choices", self.stage_depth_choices.len()),
        ];
        for (name, len) in lists {
            if len == 0 {
                return Err(Error::config(format!("{name} must not be empty")));
            }
        }
        if self.num_stages == 0 {
            return Err(Error::config("num_stages must be at least 1"));
        }
        if self.base_stage_channels.len() != self.num_stages {
            return Err(Error::config(format!(
                "base_stage_channels has {} entries but num_stages is {}",
                self.base_stage_channels.len(),
                self.num_stages
            )));
        }
        if self.resolutions.contains(&0)
            || self.expansion_ratios.contains(&0)
            || self.stage_depth_choices.contains(&0)
            || self.base_stage_channels.contains(&0)
            || self.kernel_size == 0
        {
            return Err(Error::config("integer parameters must be positive"));
        }
        if self.width_multipliers.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::config("width multipliers must be finite and positive"));
        }
        if !(distinct(&self.resolutions)
            && distinct(&self.width_multipliers)
            && distinct(&self.expansion_ratios)
            && distinct(&self.stage_depth_choices))
        {
            return Err(Error::config("parameter lists must not contain duplicates"));
        }
        if self.size() > u32::MAX as u128 {
            return Err(Error::config("search space too large to index"));
        }
        Ok(())
    }

    /// Number of architectures in the space.
    pub fn size(&self) -> u128 {
        let depth = (self.stage_depth_choices.len() as u128).pow(self.num_stages as u32);
        self.resolutions.len() as u128
            * self.width_multipliers.len() as u128
            * self.expansion_ratios.len() as u128
            * depth
    }

    /// Digits of the mixed-radix index, most significant first.
    fn radices(&self) -> Vec<usize> {
        let mut r = vec![
            self.resolutions.len(),
            self.width_multipliers.len(),
            self.expansion_ratios.len(),
        ];
        r.extend(std::iter::repeat_n(self.stage_depth_choices.len(), self.num_stages));
        r
    }

    pub fn decode(&self, id: ArchId) -> Result<ArchitectureSpec> {
        if id.0 as u128 >= self.size() {
            return Err(Error::usage(format!("{id} is outside a space of {}", self.size())));
        }
        let radices = self.radices();
        let mut digits = vec![0usize; radices.len()];
        let mut rest = id.0 as usize;
        for (d, &r) in digits.iter_mut().zip(&radices).rev() {
            *d = rest % r;
            rest /= r;
        }
        Ok(ArchitectureSpec {
            arch_id: id,
            resolution: self.resolutions[digits[0]],
            width_multiplier: self.width_multipliers[digits[1]],
            expansion_ratio: self.expansion_ratios[digits[2]],
            stage_depths: digits[3..].iter().map(|&d| self.stage_depth_choices[d]).collect(),
        })
    }

    /// Canonical index of an architecture's parameter tuple. Ignores the
    /// `arch_id` already stored on `arch`.
    pub fn encode(&self, arch: &ArchitectureSpec) -> Result<ArchId> {
        fn pos<T: PartialEq + fmt::Debug>(xs: &[T], x: &T, what: &str) -> Result<usize> {
            xs.iter()
                .position(|v| v == x)
                .ok_or_else(|| Error::usage(format!("{what} {x:?} is not in the search space")))
        }
        if arch.stage_depths.len() != self.num_stages {
            return Err(Error::usage(format!(
                "architecture has {} stages, space has {}",
                arch.stage_depths.len(),
                self.num_stages
            )));
        }
        let mut digits = vec![
            pos(&self.resolutions, &arch.resolution, "resolution")?,
            pos(&self.width_multipliers, &arch.width_multiplier, "width multiplier")?,
            pos(&self.expansion_ratios, &arch.expansion_ratio, "expansion ratio")?,
        ];
        for d in &arch.stage_depths {
            digits.push(pos(&self.stage_depth_choices, d, "stage depth")?);
        }
        let id = digits
            .iter()
            .zip(self.radices())
            .fold(0usize, |acc, (&d, r)| acc * r + d);
        Ok(ArchId(id as u32))
    }

    /// Output channels of `stage` at the given width multiplier.
    pub fn stage_channels(&self, stage: usize, width_multiplier: f64) -> u32 {
        let scaled = self.base_stage_channels[stage] as f64 * width_multiplier;
        ((scaled + 0.5).floor() as u32).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArchId(pub u32);

impl ArchId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ArchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arch#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub arch_id: ArchId,
    pub resolution: u32,
    pub width_multiplier: f64,
    pub expansion_ratio: u32,
    pub stage_depths: Vec<u32>,
}

/// Identity of one stage-level subgraph. Architectures that agree on every
/// field share the subgraph, and with it the subgraph's tuning progress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubgraphKey {
    pub stage_index: u32,
    pub input_resolution: u32,
    pub in_channels: u32,
    pub out_channels: u32,
    pub expansion_ratio: u32,
    pub depth: u32,
    pub kernel_size: u32,
}

impl SubgraphKey {
    /// Spatial size every block of the stage runs at.
    pub fn output_resolution(&self) -> u32 {
        (self.input_resolution / 2).max(1)
    }

    /// Multiply-accumulates of the stage: per block a pointwise expansion,
    /// a `k x k` depthwise convolution and a pointwise projection, all at
    /// the output resolution. The first block reads `in_channels`, the
    /// rest read `out_channels`.
    pub fn macs(&self) -> u64 {
        let hw = (self.output_resolution() as u64).pow(2);
        let k2 = (self.kernel_size as u64).pow(2);
        let e = self.expansion_ratio as u64;
        let out = self.out_channels as u64;
        (0..self.depth as u64)
            .map(|b| {
                let cin = if b == 0 { self.in_channels as u64 } else { out };
                let hidden = cin * e;
                hw * (cin * hidden + hidden * k2 + hidden * out)
            })
            .sum()
    }
}

pub fn enumerate_space(config: &SearchSpaceConfig) -> Result<Vec<ArchitectureSpec>> {
    config.validate()?;
    (0..config.size() as u32).map(|i| config.decode(ArchId(i))).collect()
}

/// Splits an architecture into its `num_stages` subgraphs, in stage order.
pub fn decompose(arch: &ArchitectureSpec, config: &SearchSpaceConfig) -> Vec<SubgraphKey> {
    let mut resolution = arch.resolution;
    let mut in_channels = config.stage_channels(0, arch.width_multiplier);
    arch.stage_depths
        .iter()
        .enumerate()
        .map(|(stage, &depth)| {
            let out_channels = config.stage_channels(stage, arch.width_multiplier);
            let key = SubgraphKey {
                stage_index: stage as u32,
                input_resolution: resolution,
                in_channels,
                out_channels,
                expansion_ratio: arch.expansion_ratio,
                depth,
                kernel_size: config.kernel_size,
            };
            resolution = key.output_resolution();
            in_channels = out_channels;
            key
        })
        .collect()
}

/// FLOPs proxy, counted as multiply-accumulates summed over all stages.
pub fn flops(arch: &ArchitectureSpec, config: &SearchSpaceConfig) -> u64 {
    decompose(arch, config).iter().map(SubgraphKey::macs).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyId(pub u32);

impl KeyId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The enumerated space with every architecture decomposed and every
/// distinct subgraph interned once.
#[derive(Debug, Clone)]
pub struct SpaceIndex {
    config: SearchSpaceConfig,
    archs: Vec<ArchitectureSpec>,
    keys: Vec<SubgraphKey>,
    lookup: HashMap<SubgraphKey, KeyId>,
    // num_stages key ids per architecture, row-major.
    arch_keys: Vec<KeyId>,
    flops: Vec<u64>,
}

impl SpaceIndex {
    pub fn new(config: SearchSpaceConfig) -> Result<Self> {
        let archs = enumerate_space(&config)?;
        let mut keys = Vec::new();
        let mut lookup = HashMap::new();
        let mut arch_keys = Vec::with_capacity(archs.len() * config.num_stages);
        let mut flops = Vec::with_capacity(archs.len());
        for arch in &archs {
            let parts = decompose(arch, &config);
            flops.push(parts.iter().map(SubgraphKey::macs).sum());
            for key in parts {
                let id = *lookup.entry(key).or_insert_with(|| {
                    keys.push(key);
                    KeyId(keys.len() as u32 - 1)
                });
                arch_keys.push(id);
            }
        }
        Ok(Self { config, archs, keys, lookup, arch_keys, flops })
    }

    pub fn config(&self) -> &SearchSpaceConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.archs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.archs.is_empty()
    }

    pub fn archs(&self) -> &[ArchitectureSpec] {
        &self.archs
    }

    pub fn arch(&self, id: ArchId) -> &ArchitectureSpec {
        &self.archs[id.index()]
    }

    pub fn all_ids(&self) -> Vec<ArchId> {
        (0..self.archs.len() as u32).map(ArchId).collect()
    }

    pub fn keys(&self) -> &[SubgraphKey] {
        &self.keys
    }

    pub fn key(&self, id: KeyId) -> &SubgraphKey {
        &self.keys[id.index()]
    }

    pub fn key_id(&self, key: &SubgraphKey) -> Option<KeyId> {
        self.lookup.get(key).copied()
    }

    pub fn keys_of(&self, arch: ArchId) -> &[KeyId] {
        let n = self.config.num_stages;
        &self.arch_keys[arch.index() * n..(arch.index() + 1) * n]
    }

    pub fn flops(&self, arch: ArchId) -> u64 {
        self.flops[arch.index()]
    }

    /// Distinct subgraphs of a set of architectures, in ascending id order.
    pub fn unique_keys(&self, archs: &[ArchId]) -> Vec<KeyId> {
        let mut seen = vec![false; self.keys.len()];
        for &a in archs {
            for k in self.keys_of(a) {
                seen[k.index()] = true;
            }
        }
        seen.iter()
            .enumerate()
            .filter(|(_, s)| **s)
            .map(|(i, _)| KeyId(i as u32))
            .collect()
    }
}
