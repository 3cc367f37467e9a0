//! Front quality and ranking metrics.

use serde::{Deserialize, Serialize};

use crate::engine::{OracleTable, SearchTrace};
use crate::error::{Error, Result};
use crate::pareto::{pareto_front, ObjectivePoint};
use crate::space::ArchId;

/// Area between the reference point and the attainment curve of `points`,
/// in accuracy x ms. Points not weakly dominating the reference add nothing.
pub fn hypervolume_2d(points: &[ObjectivePoint], reference: &ObjectivePoint) -> Result<f64> {
    if !reference.accuracy.is_finite() || !reference.latency.is_finite() {
        return Err(Error::usage("hypervolume reference must be finite"));
    }
    let mut inside: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.accuracy >= reference.accuracy && p.latency <= reference.latency)
        .map(|p| (p.latency, p.accuracy))
        .collect();
    inside.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut area = 0.0;
    let mut best = reference.accuracy;
    for (i, &(latency, accuracy)) in inside.iter().enumerate() {
        best = best.max(accuracy);
        let next = inside.get(i + 1).map_or(reference.latency, |p| p.0);
        area += (next - latency) * (best - reference.accuracy);
    }
    Ok(area)
}

/// Accuracy 0 and 1.1 x the largest latency among `points`.
pub fn default_reference(points: &[ObjectivePoint]) -> ObjectivePoint {
    let max_latency = points.iter().map(|p| p.latency).fold(0.0, f64::max);
    ObjectivePoint { arch_id: ArchId(u32::MAX), accuracy: 0.0, latency: 1.1 * max_latency }
}

fn pairs_choose_2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Sum of `t choose 2` over runs of equal adjacent elements.
fn tied_pairs<T, F: Fn(&T, &T) -> bool>(sorted: &[T], eq: F) -> u64 {
    let mut total = 0;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += pairs_choose_2(run);
            run = 1;
        }
    }
    total + pairs_choose_2(run)
}

/// Merge sort on the second coordinate, counting inversions.
fn count_swaps(v: &mut [(f64, f64)], buf: &mut Vec<(f64, f64)>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = count_swaps(&mut v[..mid], buf) + count_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j].1 < v[i].1 {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b between two paired score lists, in O(n log n).
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::usage(format!("rankings have different lengths ({} vs {})", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::usage("need at least two paired items"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::usage("scores must not be NaN"));
    }
    let n = a.len() as u64;
    let mut pairs: Vec<(f64, f64)> = a.iter().copied().zip(b.iter().copied()).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));

    let n0 = pairs_choose_2(n);
    let ties_a = tied_pairs(&pairs, |p, q| p.0 == q.0);
    let ties_both = tied_pairs(&pairs, |p, q| p.0 == q.0 && p.1 == q.1);
    let mut buf = Vec::with_capacity(pairs.len());
    let swaps = count_swaps(&mut pairs, &mut buf);
    let ties_b = tied_pairs(&pairs, |p, q| p.1 == q.1);

    let untied_a = n0 - ties_a;
    let untied_b = n0 - ties_b;
    if untied_a == 0 || untied_b == 0 {
        return Err(Error::usage("a ranking with every item tied has no correlation"));
    }
    // concordant - discordant
    let score = n0 as i64 - ties_a as i64 - ties_b as i64 + ties_both as i64 - 2 * swaps as i64;
    Ok(score as f64 / (untied_a as f64 * untied_b as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCurvePoint {
    /// Resource units consumed when the round ended.
    pub ledger_position: u64,
    /// Mean accuracy gap in percentage points.
    pub mean_gap: f64,
}

/// Mean accuracy gap to the true front after each round.
///
/// An architecture counts as found once it appears on a round's reported
/// front. For every true-front architecture `P`, the gap is
/// `acc(P) - max{acc(A) : A found, lat(A) <= lat(P)}`, floored at zero, with
/// true objectives on both sides. When nothing found is fast enough the gap is
/// `acc(P)` itself.
pub fn gap_curve(trace: &SearchTrace, oracle: &OracleTable) -> Result<Vec<GapCurvePoint>> {
    if trace.rounds.is_empty() {
        return Err(Error::usage("trace has no rounds"));
    }
    let true_point = |a: ArchId| {
        oracle
            .row(a)
            .map(|r| r.true_point())
            .ok_or_else(|| Error::usage(format!("oracle table has no row for {a}")))
    };
    let candidates = trace.candidates.iter().map(|&a| true_point(a)).collect::<Result<Vec<_>>>()?;
    let front: Vec<ObjectivePoint> =
        pareto_front(&candidates)?.into_iter().map(true_point).collect::<Result<_>>()?;

    let mut found: Vec<ObjectivePoint> = Vec::new();
    let mut curve = Vec::with_capacity(trace.rounds.len());
    for round in &trace.rounds {
        for &a in &round.reported_front {
            if !found.iter().any(|p| p.arch_id == a) {
                found.push(true_point(a)?);
            }
        }
        curve.push(GapCurvePoint { ledger_position: round.ledger_position, mean_gap: mean_gap(&front, &found) });
    }
    Ok(curve)
}

/// Mean over `front` of `acc(P) - max{acc(A) : A in found, lat(A) <= lat(P)}`,
/// floored at zero, in percentage points.
pub fn mean_gap(front: &[ObjectivePoint], found: &[ObjectivePoint]) -> f64 {
    if front.is_empty() {
        return 0.0;
    }
    let total: f64 = front
        .iter()
        .map(|p| {
            let best = found.iter().filter(|f| f.latency <= p.latency).map(|f| f.accuracy).fold(0.0, f64::max);
            (p.accuracy - best).max(0.0)
        })
        .sum();
    100.0 * total / front.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub estimator: String,
    /// Kendall tau-b against true latency.
    pub tau: f64,
}

/// Correlation of each latency estimator's ranking with the true latency
/// ranking. All lists are paired by position.
pub fn rank_table(true_latency: &[f64], estimators: &[(&str, &[f64])]) -> Result<Vec<RankRow>> {
    estimators
        .iter()
        .map(|(name, values)| {
            Ok(RankRow { estimator: name.to_string(), tau: kendall_tau(values, true_latency)? })
        })
        .collect()
}
