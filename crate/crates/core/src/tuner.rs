//! Priority-queue allocation of tuning trials across subgraphs.
//!
//! Each dequeue runs one batch of up to `beta` trials on the subgraph whose
//! last batch improved its best latency the most (absolute ms). Subgraphs
//! never tuned carry an infinite priority, so every one gets a baseline batch
//! before any gets a second. Equal priorities are broken uniformly at random.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simbench::{TrialEvaluator, TuningState};
use crate::space::KeyId;

/// Improvements smaller than this (ms) count as no improvement.
pub const IMPROVEMENT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    /// Trials per batch.
    pub beta: u32,
    pub rng_seed: u64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self { beta: 64, rng_seed: 0 }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta == 0 {
            return Err(Error::config("beta must be at least 1"));
        }
        Ok(())
    }
}

/// One executed batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub key: KeyId,
    pub batch_size: u32,
    /// Best latency before the batch minus best latency after it, in ms. The
    /// first batch of a subgraph measures from its first trial.
    pub improvement: f64,
}

/// Queue entry. `priority` is the last batch's improvement, `+inf` if the
/// subgraph was never tuned.
#[derive(Debug, Clone, Copy)]
pub struct TaskQueueEntry {
    pub key: KeyId,
    pub priority: f64,
    pub trials_spent: u64,
}

impl PartialEq for TaskQueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for TaskQueueEntry {}

impl PartialOrd for TaskQueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TaskQueueEntry {
    // Max-heap on priority; the key only makes the order total; ties are
    // resolved by the scheduler's RNG, never by this comparison.
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority).then(other.key.cmp(&self.key))
    }
}

/// Priority a subgraph enters a round with.
pub fn entry_priority(state: &TuningState, last_improvement: Option<f64>) -> f64 {
    if state.trials_spent == 0 {
        f64::INFINITY
    } else {
        last_improvement.unwrap_or(0.0)
    }
}

/// Scheduler state carried across rounds: the tuning progress of every
/// subgraph and its last batch improvement.
#[derive(Debug, Clone)]
pub struct TuningLedger {
    pub states: Vec<TuningState>,
    last_improvement: Vec<Option<f64>>,
}

impl TuningLedger {
    pub fn new(num_keys: usize) -> Self {
        Self { states: vec![TuningState::default(); num_keys], last_improvement: vec![None; num_keys] }
    }

    pub fn last_improvement(&self, key: KeyId) -> Option<f64> {
        self.last_improvement[key.index()]
    }

    pub fn total_trials(&self) -> u64 {
        self.states.iter().map(|s| s.trials_spent).sum()
    }
}

/// Spends exactly `trial_budget` trials on `keys`, in batches of at most
/// `beta`, and returns the batches in execution order.
pub fn run_tuning_round<E: TrialEvaluator + ?Sized>(
    keys: &[KeyId],
    trial_budget: u64,
    ledger: &mut TuningLedger,
    sched: &SchedulerConfig,
    evaluator: &E,
) -> Result<Vec<BatchRecord>> {
    sched.validate()?;
    if keys.is_empty() {
        return Err(Error::usage("a tuning round needs at least one subgraph"));
    }
    if let Some(k) = keys.iter().find(|k| k.index() >= ledger.states.len()) {
        return Err(Error::usage(format!("subgraph id {} outside the ledger", k.0)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(sched.rng_seed);
    let mut queue: BinaryHeap<TaskQueueEntry> = keys
        .iter()
        .map(|&key| {
            let state = &ledger.states[key.index()];
            TaskQueueEntry {
                key,
                priority: entry_priority(state, ledger.last_improvement[key.index()]),
                trials_spent: state.trials_spent,
            }
        })
        .collect();

    let mut trace = Vec::new();
    let mut remaining = trial_budget;
    let mut tied = Vec::new();
    while remaining > 0 {
        let top = queue.pop().expect("queue holds every key");
        tied.clear();
        tied.push(top);
        while queue.peek().is_some_and(|e| e.priority == top.priority) {
            tied.push(queue.pop().expect("peeked"));
        }
        let pick = tied.swap_remove(rng.gen_range(0..tied.len()));
        queue.extend(tied.iter().copied());

        let batch = remaining.min(sched.beta as u64);
        let state = &mut ledger.states[pick.key.index()];
        let mut before = state.best_latency;
        let mut best = state.best_latency;
        for j in 0..batch {
            let x = evaluator.sample(pick.key, state.trials_spent + j);
            if j == 0 && before.is_infinite() {
                before = x;
            }
            best = best.min(x);
        }
        let mut improvement = before - best;
        if improvement < IMPROVEMENT_EPSILON {
            improvement = 0.0;
        }
        state.best_latency = best;
        state.trials_spent += batch;
        ledger.last_improvement[pick.key.index()] = Some(improvement);
        remaining -= batch;

        trace.push(BatchRecord { key: pick.key, batch_size: batch as u32, improvement });
        queue.push(TaskQueueEntry { key: pick.key, priority: improvement, trials_spent: state.trials_spent });
    }
    Ok(trace)
}
