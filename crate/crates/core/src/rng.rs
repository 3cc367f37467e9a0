//! Counter-based randomness.
//!
//! Every random quantity in the simulator is a pure function of a tuple of
//! integers (seed, stream tag, ids, counters). Evaluation order therefore
//! never matters and any single draw can be replayed in isolation.

use statrs::distribution::{ContinuousCDF, Normal};

/// Stream tags keep unrelated draws independent even when their ids coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    AsymptoticAccuracy = 1,
    CurveRate = 2,
    EpochNoise = 3,
    OptimalLatency = 4,
    TuningSpread = 5,
    Trial = 6,
    Scheduler = 7,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes `(seed, stream, words...)` into 64 well-mixed bits.
pub fn hash(seed: u64, stream: Stream, words: &[u64]) -> u64 {
    let mut h = splitmix(seed ^ (stream as u64).wrapping_mul(GOLDEN));
    for &w in words {
        h = splitmix(h ^ w);
    }
    h
}

/// Maps 64 bits to a uniform value strictly inside (0, 1).
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    // 52 bits plus a half step fit the 53-bit mantissa exactly, so neither
    // endpoint is reachable.
    ((bits >> 12) as f64 + 0.5) / (1u64 << 52) as f64
}

pub fn uniform(seed: u64, stream: Stream, words: &[u64]) -> f64 {
    open_unit(hash(seed, stream, words))
}

/// Standard normal quantile.
pub fn probit(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal is valid")
}

/// A standard normal draw keyed by the tuple.
pub fn normal(seed: u64, stream: Stream, words: &[u64]) -> f64 {
    probit(uniform(seed, stream, words))
}
