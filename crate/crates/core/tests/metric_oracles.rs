use cosearch::metrics::{hypervolume_2d, kendall_tau};
use cosearch::pareto::ObjectivePoint;
use cosearch::space::ArchId;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pt(id: u32, accuracy: f64, latency: f64) -> ObjectivePoint {
    ObjectivePoint { arch_id: ArchId(id), accuracy, latency }
}

/// Fraction of uniform samples in the reference box dominated by some point.
fn monte_carlo(points: &[ObjectivePoint], reference: &ObjectivePoint, samples: u32, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let acc_hi = points.iter().map(|p| p.accuracy).fold(reference.accuracy, f64::max);
    let lat_lo = points.iter().map(|p| p.latency).fold(reference.latency, f64::min);
    let hits = (0..samples)
        .filter(|_| {
            let (a, l) = (rng.gen_range(reference.accuracy..acc_hi), rng.gen_range(lat_lo..reference.latency));
            points.iter().any(|p| p.accuracy >= a && p.latency <= l)
        })
        .count();
    (acc_hi - reference.accuracy) * (reference.latency - lat_lo) * hits as f64 / samples as f64
}

#[test]
fn hypervolume_matches_monte_carlo_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for case in 0..8 {
        // Raw 30-point sets, dominated points included.
        let points: Vec<ObjectivePoint> =
            (0..30).map(|i| pt(i, rng.gen_range(0.6..0.95), rng.gen_range(2.0..80.0))).collect();
        let reference = pt(u32::MAX, 0.5, 90.0);
        let exact = hypervolume_2d(&points, &reference).unwrap();
        let estimate = monte_carlo(&points, &reference, 1_000_000, case);
        assert!((exact - estimate).abs() / exact < 0.005, "case {case}: {exact} vs {estimate}");
    }
}

#[test]
fn hypervolume_by_hand() {
    let reference = pt(99, 0.0, 20.0);
    assert_eq!(hypervolume_2d(&[pt(0, 0.5, 10.0)], &reference).unwrap(), 5.0);
    let with_dominated = [pt(0, 0.5, 10.0), pt(1, 0.4, 12.0)];
    assert_eq!(hypervolume_2d(&with_dominated, &reference).unwrap(), 5.0);
    assert!(hypervolume_2d(&with_dominated, &pt(99, 0.0, f64::INFINITY)).is_err());
}

fn pair_count_tau(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let (da, db) = (a[i] - a[j], b[i] - b[j]);
            if da == 0.0 {
                ties_a += 1;
            }
            if db == 0.0 {
                ties_b += 1;
            }
            if da * db > 0.0 {
                concordant += 1;
            } else if da * db < 0.0 {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let denom = ((pairs - ties_a) as f64 * (pairs - ties_b) as f64).sqrt();
    (denom > 0.0).then(|| (concordant - discordant) as f64 / denom)
}

proptest! {
    #[test]
    fn tau_b_matches_pair_counting(v in prop::collection::vec((0u32..12, 0u32..12), 2..200)) {
        let a: Vec<f64> = v.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = v.iter().map(|p| p.1 as f64).collect();
        match pair_count_tau(&a, &b) {
            Some(expected) => prop_assert_eq!(kendall_tau(&a, &b).unwrap(), expected),
            None => prop_assert!(kendall_tau(&a, &b).is_err()),
        }
    }
}
