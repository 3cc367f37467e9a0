//! Multi-objective successive halving over architectures and their shared
//! subgraphs, plus the brute-force oracle it is measured against.
//!
//! Round `k` of a search over `n` candidates gives every survivor
//! `r_k = floor(B / (|S_k| * ceil(log2 n)))` resource units. One unit is
//! `epochs_per_unit` training epochs for the architecture and
//! `trials_per_unit` tuning trials added to a pool shared by the round's
//! distinct subgraphs. Training and tuning are independent jobs and run
//! concurrently under [`Exec::Parallel`]. Survivors are then chosen from
//! best-so-far estimates by the configured elimination rule.
//!
//! Resource consumption is kept in a [`ResourceLedger`]. Training and tuning
//! run on separate devices, so the ledger's unit count is
//! `max(epochs / epochs_per_unit, trials / trials_per_unit)`. For a search
//! that is exactly `sum_k |S_k| * r_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::pareto::{pareto_front, select_pareto_halving, select_threshold, ObjectivePoint};
use crate::rng::{self, Stream};
use crate::simbench::{estimated_latency, FidelityRecord, GroundTruth, NoiseMode, Simulator, TuningState};
use crate::space::{ArchId, KeyId, SpaceIndex};
use crate::tuner::{run_tuning_round, BatchRecord, SchedulerConfig, TuningLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceUnit {
    pub epochs_per_unit: u32,
    pub trials_per_unit: u32,
}

impl Default for ResourceUnit {
    fn default() -> Self {
        Self { epochs_per_unit: 1, trials_per_unit: 64 }
    }
}

impl ResourceUnit {
    pub fn validate(&self) -> Result<()> {
        if self.epochs_per_unit == 0 || self.trials_per_unit == 0 {
            return Err(Error::config("resource unit must grant at least one epoch and one trial"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub epochs: u64,
    pub trials: u64,
}

impl ResourceLedger {
    pub fn units(&self, unit: &ResourceUnit) -> u64 {
        self.epochs
            .div_ceil(unit.epochs_per_unit as u64)
            .max(self.trials.div_ceil(unit.trials_per_unit as u64))
    }

    fn add(&mut self, other: ResourceLedger) {
        self.epochs += other.epochs;
        self.trials += other.trials;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    /// Maximum latency, in ms.
    pub nu: f64,
}

impl ThresholdConfig {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_nan() || nu <= 0.0 {
            return Err(Error::config(format!("latency threshold {nu} must be positive")));
        }
        Ok(Self { nu })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EliminationRule {
    Pareto,
    Threshold(ThresholdConfig),
}

/// `ceil(log2 n)`; zero for a single candidate.
pub fn total_rounds(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Per-architecture resource units for a round with `survivors` candidates.
pub fn resource_per_arch(budget: u64, survivors: usize, rounds: u32) -> u64 {
    budget / (survivors as u64 * rounds as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// `B`, in resource units.
    pub budget: u64,
    pub unit: ResourceUnit,
    pub beta: u32,
    pub seed: u64,
    pub noise: NoiseMode,
    #[serde(skip)]
    pub exec: Exec,
}

impl SearchOptions {
    pub fn new(budget: u64, seed: u64) -> Self {
        Self {
            budget,
            unit: ResourceUnit::default(),
            beta: SchedulerConfig::default().beta,
            seed,
            noise: NoiseMode::Noisy,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundPlan {
    pub round_index: u32,
    pub total_rounds: u32,
    /// `S_k`.
    pub survivors: Vec<ArchId>,
    /// `r_k`, resource units per survivor.
    pub resource_per_arch: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub plan: RoundPlan,
    pub unique_subgraphs: usize,
    /// Best-so-far estimates of every member of `S_k` after the round.
    pub estimates: Vec<ObjectivePoint>,
    pub eliminated: Vec<ArchId>,
    /// `S_{k+1}`.
    pub kept: Vec<ArchId>,
    /// Pareto front of `S_{k+1}` under this round's estimates.
    pub reported_front: Vec<ArchId>,
    pub spent: ResourceLedger,
    /// Ledger units consumed up to and including this round.
    pub ledger_position: u64,
    pub tuning_batches: Vec<BatchRecord>,
    /// Best latency of every subgraph in the space after the round, `None`
    /// where nothing has been measured yet.
    pub subgraph_best: Vec<Option<f64>>,
}

impl RoundRecord {
    /// Latency estimate of `arch` from the tuning state at the end of the
    /// round: the sum of its subgraphs' best latencies.
    pub fn latency_estimate(&self, index: &SpaceIndex, arch: ArchId) -> Option<f64> {
        index.keys_of(arch).iter().map(|k| self.subgraph_best.get(k.index()).copied().flatten()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOutcome {
    pub nu: f64,
    /// Highest estimated accuracy among final survivors estimated at or
    /// under `nu`; `None` when no survivor qualifies.
    pub answer: Option<ObjectivePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub candidates: Vec<ArchId>,
    pub budget: u64,
    pub unit: ResourceUnit,
    pub rule: EliminationRule,
    pub rounds: Vec<RoundRecord>,
    pub final_survivors: Vec<ArchId>,
    /// Pareto front of the final survivors under the last estimates.
    pub final_front: Vec<ArchId>,
    pub final_estimates: Vec<ObjectivePoint>,
    pub ledger: ResourceLedger,
    pub threshold: Option<ThresholdOutcome>,
}

impl SearchTrace {
    pub fn ledger_units(&self) -> u64 {
        self.ledger.units(&self.unit)
    }
}

/// A finished search: its trace and the evaluator state it left behind.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub trace: SearchTrace,
    pub tuning: TuningLedger,
    pub records: Vec<FidelityRecord>,
}

impl SearchOutcome {
    /// Latency estimate of every candidate from the final tuning state, or
    /// `None` where a subgraph was never measured.
    pub fn latency_estimates(&self, index: &SpaceIndex) -> Vec<Option<f64>> {
        self.trace
            .candidates
            .iter()
            .map(|&a| estimated_latency(index, &self.tuning.states, a).ok())
            .collect()
    }
}

fn check_candidates(index: &SpaceIndex, candidates: &[ArchId]) -> Result<Vec<ArchId>> {
    if candidates.is_empty() {
        return Err(Error::config("candidate set is empty"));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != candidates.len() {
        return Err(Error::config("candidate set contains duplicates"));
    }
    if let Some(a) = sorted.iter().find(|a| a.index() >= index.len()) {
        return Err(Error::config(format!("{a} is outside the search space")));
    }
    Ok(sorted)
}

/// Checks the budget preconditions of a search without running it.
pub fn validate_search(index: &SpaceIndex, candidates: &[ArchId], opts: &SearchOptions) -> Result<()> {
    let candidates = check_candidates(index, candidates)?;
    opts.unit.validate()?;
    SchedulerConfig { beta: opts.beta, rng_seed: 0 }.validate()?;
    let n = candidates.len();
    let rounds = total_rounds(n);
    if rounds == 0 {
        return Ok(());
    }
    let needed = n as u64 * rounds as u64;
    if opts.budget < needed {
        return Err(Error::config(format!(
            "budget {} gives no resources in round 0; need at least |S| * ceil(log2 n) = {needed}",
            opts.budget
        )));
    }
    let pool = n as u64 * resource_per_arch(opts.budget, n, rounds) * opts.unit.trials_per_unit as u64;
    let subgraphs = index.unique_keys(&candidates).len() as u64;
    if pool < subgraphs * opts.beta as u64 {
        return Err(Error::config(format!(
            "round-0 tuning pool of {pool} trials cannot give each of {subgraphs} subgraphs a first batch of {}",
            opts.beta
        )));
    }
    Ok(())
}

fn estimates(
    index: &SpaceIndex,
    survivors: &[ArchId],
    records: &[FidelityRecord],
    tuning: &[TuningState],
) -> Result<Vec<ObjectivePoint>> {
    survivors
        .iter()
        .map(|&a| {
            let latency = estimated_latency(index, tuning, a)?;
            ObjectivePoint::new(a, records[a.index()].best_val_accuracy, latency)
        })
        .collect()
}

/// Runs the search with the Pareto rule. See the module docs for the loop.
pub fn run_sonar_pareto(truth: &GroundTruth, candidates: &[ArchId], opts: &SearchOptions) -> Result<SearchOutcome> {
    run_search(truth, candidates, opts, EliminationRule::Pareto)
}

/// Runs the search with the latency-threshold rule and picks the most
/// accurate surviving architecture estimated at or under `nu`.
pub fn run_sonar_threshold(
    truth: &GroundTruth,
    candidates: &[ArchId],
    opts: &SearchOptions,
    threshold: ThresholdConfig,
) -> Result<SearchOutcome> {
    ThresholdConfig::new(threshold.nu)?;
    run_search(truth, candidates, opts, EliminationRule::Threshold(threshold))
}

pub fn run_search(
    truth: &GroundTruth,
    candidates: &[ArchId],
    opts: &SearchOptions,
    rule: EliminationRule,
) -> Result<SearchOutcome> {
    let index = truth.index();
    validate_search(index, candidates, opts)?;
    let candidates = check_candidates(index, candidates)?;
    let sim = Simulator::new(truth, opts.noise);
    let exec = opts.exec;
    let rounds = total_rounds(candidates.len());

    let mut records: Vec<FidelityRecord> = (0..index.len() as u32).map(|i| FidelityRecord::new(ArchId(i))).collect();
    let mut tuning = TuningLedger::new(index.keys().len());
    let mut survivors = candidates.clone();
    let mut round_records = Vec::with_capacity(rounds as usize);
    let mut ledger = ResourceLedger::default();
    let mut last_estimates = Vec::new();

    for k in 0..rounds {
        let r_k = resource_per_arch(opts.budget, survivors.len(), rounds);
        let subgraphs: Vec<KeyId> = index.unique_keys(&survivors);
        let epochs = (r_k * opts.unit.epochs_per_unit as u64) as u32;
        let pool = survivors.len() as u64 * r_k * opts.unit.trials_per_unit as u64;
        let sched = SchedulerConfig { beta: opts.beta, rng_seed: rng::hash(opts.seed, Stream::Scheduler, &[k as u64]) };

        let records_ref = &records;
        let survivors_ref = &survivors;
        let (trained, batches) = exec.join(
            || exec.map(survivors_ref, |&a| sim.train_epochs(&records_ref[a.index()], epochs)),
            || run_tuning_round(&subgraphs, pool, &mut tuning, &sched, &sim),
        );
        let batches = batches?;
        for r in trained {
            records[r.arch_id.index()] = r;
        }

        let spent = ResourceLedger { epochs: survivors.len() as u64 * epochs as u64, trials: pool };
        ledger.add(spent);

        let points = estimates(index, &survivors, &records, &tuning.states)?;
        let kept = match rule {
            EliminationRule::Pareto => select_pareto_halving(&points)?,
            EliminationRule::Threshold(t) => select_threshold(&points, t.nu)?,
        };
        let eliminated: Vec<ArchId> = survivors.iter().copied().filter(|a| kept.binary_search(a).is_err()).collect();
        let kept_points: Vec<ObjectivePoint> =
            points.iter().copied().filter(|p| kept.binary_search(&p.arch_id).is_ok()).collect();
        let reported_front = pareto_front(&kept_points)?;

        round_records.push(RoundRecord {
            plan: RoundPlan { round_index: k, total_rounds: rounds, survivors: survivors.clone(), resource_per_arch: r_k },
            unique_subgraphs: subgraphs.len(),
            estimates: points,
            eliminated,
            kept: kept.clone(),
            reported_front,
            spent,
            ledger_position: ledger.units(&opts.unit),
            tuning_batches: batches,
            subgraph_best: tuning
                .states
                .iter()
                .map(|t| (t.trials_spent > 0).then_some(t.best_latency))
                .collect(),
        });
        last_estimates = kept_points;
        survivors = kept;
    }

    if rounds == 0 {
        // A lone candidate is never evaluated; report it without estimates.
        last_estimates = Vec::new();
    }
    let final_front = if last_estimates.is_empty() { survivors.clone() } else { pareto_front(&last_estimates)? };
    let threshold = match rule {
        EliminationRule::Pareto => None,
        EliminationRule::Threshold(t) => Some(ThresholdOutcome {
            nu: t.nu,
            answer: last_estimates
                .iter()
                .filter(|p| p.latency <= t.nu)
                .copied()
                .max_by(|a, b| {
                    a.accuracy
                        .total_cmp(&b.accuracy)
                        .then(b.latency.total_cmp(&a.latency))
                        .then(b.arch_id.cmp(&a.arch_id))
                }),
        }),
    };

    Ok(SearchOutcome {
        trace: SearchTrace {
            candidates,
            budget: opts.budget,
            unit: opts.unit,
            rule,
            rounds: round_records,
            final_survivors: survivors,
            final_front,
            final_estimates: last_estimates,
            ledger,
            threshold,
        },
        tuning,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub epochs_full: u32,
    pub trials_full_per_key: u64,
}

impl Default for OracleSettings {
    /// 50 curve rates at the slowest rate, and enough trials to land within a
    /// couple of percent of every optimum.
    fn default() -> Self {
        Self { epochs_full: 750, trials_full_per_key: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub arch_id: ArchId,
    pub flops: u64,
    /// Fully trained / fully tuned estimates.
    pub accuracy: f64,
    pub latency: f64,
    pub true_accuracy: f64,
    pub true_latency: f64,
}

impl OracleRow {
    pub fn true_point(&self) -> ObjectivePoint {
        ObjectivePoint { arch_id: self.arch_id, accuracy: self.true_accuracy, latency: self.true_latency }
    }

    pub fn estimated_point(&self) -> ObjectivePoint {
        ObjectivePoint { arch_id: self.arch_id, accuracy: self.accuracy, latency: self.latency }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTable {
    pub settings: OracleSettings,
    pub rows: Vec<OracleRow>,
    /// Front of the true objectives.
    pub true_front: Vec<ArchId>,
    /// Front of the fully evaluated estimates.
    pub estimated_front: Vec<ArchId>,
    pub ledger: ResourceLedger,
}

impl OracleTable {
    pub fn row(&self, id: ArchId) -> Option<&OracleRow> {
        self.rows.binary_search_by_key(&id, |r| r.arch_id).ok().map(|i| &self.rows[i])
    }

    pub fn ledger_units(&self, unit: &ResourceUnit) -> u64 {
        self.ledger.units(unit)
    }
}

/// Fully trains every candidate and fully tunes every distinct subgraph.
pub fn run_brute_force(
    truth: &GroundTruth,
    candidates: &[ArchId],
    settings: OracleSettings,
    noise: NoiseMode,
    exec: Exec,
) -> Result<OracleTable> {
    let index = truth.index();
    let candidates = check_candidates(index, candidates)?;
    if settings.epochs_full == 0 || settings.trials_full_per_key == 0 {
        return Err(Error::config("oracle needs at least one epoch and one trial"));
    }
    let sim = Simulator::new(truth, noise);
    let subgraphs = index.unique_keys(&candidates);

    let (trained, tuned) = exec.join(
        || exec.map(&candidates, |&a| sim.train_epochs(&FidelityRecord::new(a), settings.epochs_full)),
        || {
            exec.map(&subgraphs, |&k| {
                let best = (0..settings.trials_full_per_key)
                    .map(|t| sim.sample_trial_id(k, t))
                    .fold(f64::INFINITY, f64::min);
                (k, TuningState { trials_spent: settings.trials_full_per_key, best_latency: best })
            })
        },
    );
    let mut tuning = vec![TuningState::default(); index.keys().len()];
    for (k, state) in tuned {
        tuning[k.index()] = state;
    }

    let rows = trained
        .iter()
        .map(|r| {
            Ok(OracleRow {
                arch_id: r.arch_id,
                flops: index.flops(r.arch_id),
                accuracy: r.best_val_accuracy,
                latency: estimated_latency(index, &tuning, r.arch_id)?,
                true_accuracy: truth.true_accuracy(r.arch_id),
                true_latency: truth.true_latency(r.arch_id),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let true_points: Vec<_> = rows.iter().map(OracleRow::true_point).collect();
    let est_points: Vec<_> = rows.iter().map(OracleRow::estimated_point).collect();
    Ok(OracleTable {
        settings,
        true_front: pareto_front(&true_points)?,
        estimated_front: pareto_front(&est_points)?,
        ledger: ResourceLedger {
            epochs: candidates.len() as u64 * settings.epochs_full as u64,
            trials: subgraphs.len() as u64 * settings.trials_full_per_key,
        },
        rows,
    })
}

/// Front of (true accuracy, FLOPs): the architectures a FLOPs-guided
/// sequential search would go on to tune.
pub fn proxy_front(truth: &GroundTruth, candidates: &[ArchId]) -> Result<Vec<ArchId>> {
    let index = truth.index();
    let candidates = check_candidates(index, candidates)?;
    let points: Vec<_> = candidates
        .iter()
        .map(|&a| ObjectivePoint { arch_id: a, accuracy: truth.true_accuracy(a), latency: index.flops(a) as f64 })
        .collect();
    pareto_front(&points)
}

/// Front of the true objectives.
pub fn true_front(truth: &GroundTruth, candidates: &[ArchId]) -> Result<Vec<ArchId>> {
    let candidates = check_candidates(truth.index(), candidates)?;
    let points: Vec<_> = candidates
        .iter()
        .map(|&a| ObjectivePoint { arch_id: a, accuracy: truth.true_accuracy(a), latency: truth.true_latency(a) })
        .collect();
    pareto_front(&points)
}
