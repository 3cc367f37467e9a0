//! Non-dominated sorting and the two elimination rules.
//!
//! Accuracy is maximized, latency minimized. Every returned id list is sorted
//! ascending so results never depend on input order.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::ArchId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub arch_id: ArchId,
    pub accuracy: f64,
    /// Milliseconds.
    pub latency: f64,
}

impl ObjectivePoint {
    pub fn new(arch_id: ArchId, accuracy: f64, latency: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::usage(format!("{arch_id}: accuracy {accuracy} outside [0, 1]")));
        }
        if !(latency.is_finite() && latency > 0.0) {
            return Err(Error::usage(format!("{arch_id}: latency {latency} must be finite and positive")));
        }
        Ok(Self { arch_id, accuracy, latency })
    }
}

/// `p` is at least as good on both axes and strictly better on one.
pub fn dominates(p: &ObjectivePoint, q: &ObjectivePoint) -> bool {
    p.accuracy >= q.accuracy
        && p.latency <= q.latency
        && (p.accuracy > q.accuracy || p.latency < q.latency)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NdsRanking {
    /// `fronts[0]` is the Pareto front, `fronts[1]` the front of the rest, ...
    pub fronts: Vec<Vec<ArchId>>,
}

impl NdsRanking {
    /// 0-based rank of every member.
    pub fn rank_of(&self, id: ArchId) -> Option<usize> {
        self.fronts.iter().position(|f| f.binary_search(&id).is_ok())
    }
}

fn non_empty(points: &[ObjectivePoint]) -> Result<()> {
    if points.is_empty() {
        Err(Error::usage("point set must not be empty"))
    } else {
        Ok(())
    }
}

fn sorted_ids(points: impl IntoIterator<Item = ArchId>) -> Vec<ArchId> {
    let mut ids: Vec<_> = points.into_iter().collect();
    ids.sort_unstable();
    ids
}

pub fn pareto_front(points: &[ObjectivePoint]) -> Result<Vec<ArchId>> {
    non_empty(points)?;
    Ok(sorted_ids(
        points
            .iter()
            .filter(|q| !points.iter().any(|p| dominates(p, q)))
            .map(|p| p.arch_id),
    ))
}

/// Fast non-dominated sort, O(n^2) comparisons.
pub fn nds(points: &[ObjectivePoint]) -> Result<NdsRanking> {
    non_empty(points)?;
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        fronts.push(sorted_ids(current.iter().map(|&i| points[i].arch_id)));
        current = next;
    }
    Ok(NdsRanking { fronts })
}

/// Adds whole NDS fronts, best first, while the selection holds at most half
/// of the input. The front that crosses the halfway mark is kept whole.
pub fn select_pareto_halving(points: &[ObjectivePoint]) -> Result<Vec<ArchId>> {
    let ranking = nds(points)?;
    let n = points.len();
    let mut selected = Vec::new();
    for front in ranking.fronts {
        // |S_{k+1}| <= |S_k| / 2, compared without rounding.
        if 2 * selected.len() > n {
            break;
        }
        selected.extend(front);
    }
    Ok(sorted_ids(selected))
}

/// Orders by accuracy descending, then latency ascending, then id ascending.
fn accuracy_order(a: &ObjectivePoint, b: &ObjectivePoint) -> Ordering {
    b.accuracy
        .total_cmp(&a.accuracy)
        .then(a.latency.total_cmp(&b.latency))
        .then(a.arch_id.cmp(&b.arch_id))
}

/// Latency-threshold elimination. Points at or under `nu` compete on accuracy
/// alone and the better half (rounded up) survives. Points over `nu` go
/// through [`select_pareto_halving`].
pub fn select_threshold(points: &[ObjectivePoint], nu: f64) -> Result<Vec<ArchId>> {
    non_empty(points)?;
    if nu.is_nan() || nu <= 0.0 {
        return Err(Error::usage(format!("latency threshold {nu} must be positive")));
    }
    let (mut under, over): (Vec<_>, Vec<_>) = points.iter().partition(|p| p.latency <= nu);
    under.sort_by(accuracy_order);
    let keep = under.len().div_ceil(2);
    let mut selected: Vec<ArchId> = under[..keep].iter().map(|p| p.arch_id).collect();
    if !over.is_empty() {
        selected.extend(select_pareto_halving(&over)?);
    }
    Ok(sorted_ids(selected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(id: u32, acc: f64, lat: f64) -> ObjectivePoint {
        ObjectivePoint { arch_id: ArchId(id), accuracy: acc, latency: lat }
    }

    fn ids(xs: &[u32]) -> Vec<ArchId> {
        xs.iter().copied().map(ArchId).collect()
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&pt(0, 0.9, 10.0), &pt(1, 0.8, 20.0)));
        assert!(!dominates(&pt(0, 0.9, 10.0), &pt(1, 0.9, 10.0)));
        let (a, b) = (pt(0, 0.9, 20.0), pt(1, 0.8, 10.0));
        assert!(!dominates(&a, &b) && !dominates(&b, &a));
    }

    #[test]
    fn point_validation() {
        assert!(ObjectivePoint::new(ArchId(0), 1.2, 3.0).is_err());
        assert!(ObjectivePoint::new(ArchId(0), 0.5, 0.0).is_err());
        assert!(ObjectivePoint::new(ArchId(0), 0.5, f64::INFINITY).is_err());
        assert!(ObjectivePoint::new(ArchId(0), 0.5, 3.0).is_ok());
    }

    #[test]
    fn front_examples() {
        assert_eq!(pareto_front(&[pt(4, 0.1, 1.0)]).unwrap(), ids(&[4]));
        let pts = [pt(0, 0.9, 10.0), pt(1, 0.8, 5.0), pt(2, 0.7, 20.0)];
        assert_eq!(pareto_front(&pts).unwrap(), ids(&[0, 1]));
        assert!(pareto_front(&[]).is_err());
        assert!(nds(&[]).is_err());
        assert!(select_pareto_halving(&[]).is_err());
        assert!(select_threshold(&[], 1.0).is_err());
    }

    #[test]
    fn nds_chain_and_antichain() {
        let chain = [pt(0, 0.9, 1.0), pt(1, 0.8, 2.0), pt(2, 0.7, 3.0)];
        assert_eq!(nds(&chain).unwrap().fronts, vec![ids(&[0]), ids(&[1]), ids(&[2])]);
        let anti = [pt(0, 0.9, 3.0), pt(1, 0.8, 2.0), pt(2, 0.7, 1.0)];
        assert_eq!(nds(&anti).unwrap().fronts, vec![ids(&[0, 1, 2])]);
    }

    #[test]
    fn duplicates_share_a_front() {
        let pts = [pt(0, 0.9, 1.0), pt(1, 0.9, 1.0), pt(2, 0.5, 5.0)];
        assert_eq!(nds(&pts).unwrap().fronts, vec![ids(&[0, 1]), ids(&[2])]);
    }

    #[test]
    fn halving_hand_traces() {
        // F1 = {0,1,2}: 0 <= 2 adds F1, then 3 > 2 stops.
        let pts = [pt(0, 0.9, 3.0), pt(1, 0.8, 2.0), pt(2, 0.7, 1.0), pt(3, 0.6, 4.0)];
        assert_eq!(select_pareto_halving(&pts).unwrap(), ids(&[0, 1, 2]));

        let chain: Vec<_> = (0..8).map(|i| pt(i, 0.9 - i as f64 * 0.01, 1.0 + i as f64)).collect();
        assert_eq!(select_pareto_halving(&chain).unwrap(), ids(&[0, 1, 2, 3, 4]));

        // Two incomparable points: the crossing front keeps both.
        let pair = [pt(0, 0.9, 2.0), pt(1, 0.8, 1.0)];
        assert_eq!(select_pareto_halving(&pair).unwrap(), ids(&[0, 1]));
    }

    #[test]
    fn threshold_examples() {
        let pts = [pt(0, 0.7, 1.0), pt(1, 0.9, 2.0), pt(2, 0.8, 3.0), pt(3, 0.6, 0.5)];
        // All under nu: top half by accuracy.
        assert_eq!(select_threshold(&pts, 10.0).unwrap(), ids(&[1, 2]));
        // All over nu: same as Pareto halving.
        assert_eq!(select_threshold(&pts, 0.1).unwrap(), select_pareto_halving(&pts).unwrap());
        // Odd |L| rounds up; accuracy ties fall to lower latency.
        let tied = [pt(0, 0.8, 2.0), pt(1, 0.8, 1.0), pt(2, 0.5, 1.0)];
        assert_eq!(select_threshold(&tied, 5.0).unwrap(), ids(&[0, 1]));
        let tied = [pt(5, 0.8, 1.0), pt(3, 0.8, 1.0), pt(4, 0.1, 1.0), pt(9, 0.1, 1.0)];
        assert_eq!(select_threshold(&tied, 5.0).unwrap(), ids(&[3, 5]));
        assert!(select_threshold(&pts, 0.0).is_err());
    }

    fn arb_points(max: usize) -> impl Strategy<Value = Vec<ObjectivePoint>> {
        // Coarse grids force plenty of ties.
        prop::collection::vec((0u32..20, 1u32..20), 1..max).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (a, l))| pt(i as u32, a as f64 / 20.0, l as f64))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn dominance_is_a_strict_partial_order(
            a in (0u32..5, 1u32..5), b in (0u32..5, 1u32..5), c in (0u32..5, 1u32..5)
        ) {
            let (p, q, r) = (pt(0, a.0 as f64, a.1 as f64), pt(1, b.0 as f64, b.1 as f64), pt(2, c.0 as f64, c.1 as f64));
            prop_assert!(!dominates(&p, &p));
            prop_assert!(!(dominates(&p, &q) && dominates(&q, &p)));
            if dominates(&p, &q) && dominates(&q, &r) {
                prop_assert!(dominates(&p, &r));
            }
        }

        #[test]
        fn fronts_partition_and_respect_dominance(points in arb_points(60)) {
            let ranking = nds(&points).unwrap();
            let mut all: Vec<_> = ranking.fronts.concat();
            all.sort();
            prop_assert_eq!(all, sorted_ids(points.iter().map(|p| p.arch_id)));
            let rank = |id: ArchId| ranking.rank_of(id).unwrap();
            for p in &points {
                for q in &points {
                    if dominates(p, q) {
                        prop_assert!(rank(p.arch_id) < rank(q.arch_id));
                    }
                }
                let r = rank(p.arch_id);
                if r > 0 {
                    prop_assert!(points.iter().any(|q| rank(q.arch_id) == r - 1 && dominates(q, p)));
                }
            }
            // Removing F1 promotes F2.
            if ranking.fronts.len() > 1 {
                let rest: Vec<_> = points.iter().filter(|p| rank(p.arch_id) > 0).copied().collect();
                prop_assert_eq!(&nds(&rest).unwrap().fronts[..], &ranking.fronts[1..]);
            }
        }

        #[test]
        fn halving_keeps_the_front_and_a_front_prefix(points in arb_points(60)) {
            let kept = select_pareto_halving(&points).unwrap();
            let front = pareto_front(&points).unwrap();
            prop_assert!(front.iter().all(|id| kept.contains(id)));
            let ranking = nds(&points).unwrap();
            let mut prefix = Vec::new();
            for f in &ranking.fronts {
                prefix.extend(f.iter().copied());
                prefix.sort();
                if prefix == kept { break; }
            }
            prop_assert_eq!(&prefix, &kept);
            if ranking.fronts.len() > 1 {
                prop_assert!(2 * kept.len() > points.len());
            }
        }

        #[test]
        fn selections_are_scale_invariant(points in arb_points(40), factor in 0.01f64..100.0) {
            let scaled: Vec<_> = points.iter().map(|p| pt(p.arch_id.0, p.accuracy, p.latency * factor)).collect();
            prop_assert_eq!(pareto_front(&points).unwrap(), pareto_front(&scaled).unwrap());
            prop_assert_eq!(select_pareto_halving(&points).unwrap(), select_pareto_halving(&scaled).unwrap());
            prop_assert_eq!(select_threshold(&points, 7.0).unwrap(), select_threshold(&scaled, 7.0 * factor).unwrap());
        }

        #[test]
        fn threshold_degenerates_at_the_extremes(points in arb_points(40)) {
            let by_accuracy = {
                let mut v = points.clone();
                v.sort_by(accuracy_order);
                sorted_ids(v[..v.len().div_ceil(2)].iter().map(|p| p.arch_id))
            };
            prop_assert_eq!(select_threshold(&points, f64::INFINITY).unwrap(), by_accuracy);
            prop_assert_eq!(select_threshold(&points, f64::MIN_POSITIVE).unwrap(), select_pareto_halving(&points).unwrap());
        }
    }
}
