//! Search behaviour against the brute-force oracle on the 64-architecture
//! uniform-depth subspace, shipped seeds, noiseless mode.

use cosearch::engine::{
    proxy_front, run_brute_force, run_sonar_pareto, run_sonar_threshold, OracleSettings, OracleTable, ResourceUnit,
    SearchOptions, ThresholdConfig,
};
use cosearch::metrics::{default_reference, gap_curve, hypervolume_2d, kendall_tau};
use cosearch::pareto::{dominates, ObjectivePoint};
use cosearch::simbench::{generate_ground_truth, shipped_profile, shipped_profiles, GroundTruth, NoiseMode};
use cosearch::space::{ArchId, SearchSpaceConfig};
use cosearch::Exec;

fn truth(seed: u64, profile: &str) -> GroundTruth {
    generate_ground_truth(seed, &SearchSpaceConfig::default(), &shipped_profile(profile).unwrap()).unwrap()
}

fn subspace(truth: &GroundTruth) -> Vec<ArchId> {
    let index = truth.index();
    index
        .all_ids()
        .into_iter()
        .filter(|&a| {
            let d = &index.arch(a).stage_depths;
            d.iter().all(|&x| x == d[0])
        })
        .collect()
}

fn oracle(truth: &GroundTruth, ids: &[ArchId]) -> OracleTable {
    run_brute_force(truth, ids, OracleSettings::default(), NoiseMode::Noiseless, Exec::Parallel).unwrap()
}

fn options(oracle: &OracleTable, divisor: u64, seed: u64) -> SearchOptions {
    let mut opts = SearchOptions::new(oracle.ledger_units(&ResourceUnit::default()) / divisor, seed);
    opts.noise = NoiseMode::Noiseless;
    opts
}

fn true_points(truth: &GroundTruth, ids: &[ArchId]) -> Vec<ObjectivePoint> {
    ids.iter()
        .map(|&a| ObjectivePoint { arch_id: a, accuracy: truth.true_accuracy(a), latency: truth.true_latency(a) })
        .collect()
}

#[test]
fn subspace_has_64_architectures() {
    assert_eq!(subspace(&truth(0, "rpi")).len(), 64);
}

#[test]
fn survivors_recover_the_oracle_hypervolume_at_one_sixteenth() {
    for seed in 0..10 {
        let truth = truth(seed, "rpi");
        let ids = subspace(&truth);
        let oracle = oracle(&truth, &ids);
        let trace = run_sonar_pareto(&truth, &ids, &options(&oracle, 16, seed)).unwrap().trace;
        let reference = default_reference(&true_points(&truth, &ids));
        let found = hypervolume_2d(&true_points(&truth, &trace.final_survivors), &reference).unwrap();
        let best = hypervolume_2d(&true_points(&truth, &oracle.true_front), &reference).unwrap();
        assert!(found >= 0.95 * best, "seed {seed}: {found} vs {best}");

        let gap = gap_curve(&trace, &oracle).unwrap();
        assert!(gap.last().unwrap().mean_gap <= 0.5, "seed {seed}: {:?}", gap.last());
        assert!(gap.windows(2).all(|w| w[1].mean_gap <= w[0].mean_gap));
    }
}

#[test]
fn no_survivor_beats_the_true_front() {
    for seed in 0..3 {
        let truth = truth(seed, "camera");
        let ids = subspace(&truth);
        let oracle = oracle(&truth, &ids);
        let trace = run_sonar_pareto(&truth, &ids, &options(&oracle, 16, seed)).unwrap().trace;
        let front = true_points(&truth, &oracle.true_front);
        for s in true_points(&truth, &trace.final_survivors) {
            assert!(front.iter().all(|f| !dominates(&s, f)));
        }
    }
}

#[test]
fn threshold_at_the_median_latency_finds_a_near_best_feasible_model() {
    for seed in 0..10 {
        let truth = truth(seed, "rpi");
        let ids = subspace(&truth);
        let oracle = oracle(&truth, &ids);
        let mut lats: Vec<f64> = ids.iter().map(|&a| truth.true_latency(a)).collect();
        lats.sort_by(f64::total_cmp);
        let nu = 0.5 * (lats[31] + lats[32]);
        let trace =
            run_sonar_threshold(&truth, &ids, &options(&oracle, 16, seed), ThresholdConfig::new(nu).unwrap())
                .unwrap()
                .trace;
        let answer = trace.threshold.unwrap().answer.expect("feasible");
        let best = ids
            .iter()
            .filter(|&&a| truth.true_latency(a) <= nu)
            .map(|&a| truth.true_accuracy(a))
            .fold(0.0, f64::max);
        assert!(answer.latency <= nu);
        assert!(truth.true_latency(answer.arch_id) <= nu, "seed {seed}");
        assert!(100.0 * (best - truth.true_accuracy(answer.arch_id)) <= 0.5, "seed {seed}");
    }
}

#[test]
fn rounds_shrink_and_estimates_only_improve() {
    let truth = truth(5, "m1");
    let ids = subspace(&truth);
    let oracle = oracle(&truth, &ids);
    let outcome = run_sonar_pareto(&truth, &ids, &options(&oracle, 16, 5)).unwrap();
    let trace = &outcome.trace;
    let index = truth.index();
    assert!(trace.ledger_units() <= trace.budget);
    for pair in trace.rounds.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        assert!(b.plan.survivors.iter().all(|s| a.plan.survivors.contains(s)));
        assert_eq!(a.kept, b.plan.survivors);
        for &arch in &b.plan.survivors {
            let before = a.estimates.iter().find(|p| p.arch_id == arch).unwrap();
            let after = b.estimates.iter().find(|p| p.arch_id == arch).unwrap();
            assert!(after.accuracy >= before.accuracy);
            assert!(after.latency <= before.latency);
            assert!(b.latency_estimate(index, arch).unwrap() <= a.latency_estimate(index, arch).unwrap());
        }
    }
    // The last round's subgraph table gives the run's final estimates.
    let last = trace.rounds.last().unwrap();
    let from_trace: Vec<Option<f64>> = trace.candidates.iter().map(|&a| last.latency_estimate(index, a)).collect();
    assert_eq!(from_trace, outcome.latency_estimates(index));
}

#[test]
fn parallel_and_sequential_runs_agree() {
    let truth = truth(2, "rpi");
    let ids = subspace(&truth);
    let oracle = oracle(&truth, &ids);
    let mut opts = options(&oracle, 16, 2);
    opts.noise = NoiseMode::Noisy;
    let par = run_sonar_pareto(&truth, &ids, &opts).unwrap().trace;
    opts.exec = Exec::Sequential;
    let seq = run_sonar_pareto(&truth, &ids, &opts).unwrap().trace;
    assert_eq!(par, seq);
    let seq_oracle =
        run_brute_force(&truth, &ids, OracleSettings::default(), NoiseMode::Noiseless, Exec::Sequential).unwrap();
    assert_eq!(seq_oracle, oracle);
}

#[test]
fn full_space_oracle_costs_sixteen_to_thirty_two_searches() {
    let truth = truth(0, "rpi");
    let ids = truth.index().all_ids();
    let oracle = oracle(&truth, &ids);
    let opts = options(&oracle, 16, 0);
    let trace = run_sonar_pareto(&truth, &ids, &opts).unwrap().trace;
    let ratio = oracle.ledger_units(&opts.unit) as f64 / trace.ledger_units() as f64;
    assert!((16.0..=32.0).contains(&ratio), "{ratio}");
}

#[test]
fn flops_proxy_front_misses_true_front_members_on_devices() {
    for profile in shipped_profiles() {
        for seed in 0..10 {
            let truth = truth(seed, &profile.name);
            let ids = truth.index().all_ids();
            let proxy = proxy_front(&truth, &ids).unwrap();
            let exact = cosearch::engine::true_front(&truth, &ids).unwrap();
            if profile.is_uniform() {
                assert_eq!(proxy, exact);
            } else {
                assert!(exact.iter().any(|a| !proxy.contains(a)), "{} seed {seed}", profile.name);
            }
        }
    }
}

#[test]
fn flops_rank_exactly_on_uniform_hardware() {
    let truth = truth(0, "uniform");
    let ids = truth.index().all_ids();
    let flops: Vec<f64> = ids.iter().map(|&a| truth.index().flops(a) as f64).collect();
    let lat: Vec<f64> = ids.iter().map(|&a| truth.true_latency(a)).collect();
    assert_eq!(kendall_tau(&flops, &lat).unwrap(), 1.0);
}
