//! Joint architecture and latency search.
//!
//! Candidate architectures are evaluated at increasing fidelity (training
//! epochs for accuracy, auto-tuning trials for latency) and pruned each round
//! by non-dominated sorting, until a small accuracy/latency front remains. A
//! deterministic simulated benchmark and a brute-force oracle make every
//! result checkable.

pub mod engine;
pub mod error;
pub mod exec;
pub mod metrics;
pub mod pareto;
pub mod rng;
pub mod simbench;
pub mod space;
pub mod tuner;

pub use error::{Error, Result};
pub use exec::Exec;
