//! Aggregation scheduling: iterated nearest-neighbor rounds that drain the
//! point set into a single sink, producing an in-arborescence whose slots
//! respect the bottom-up ordering requirement.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::geom::{cmp_links, nearest_neighbor_forest, Link, PointSet};
use crate::schedule::{assign_powers, schedule_one_slot, Slot};
use crate::sinr::{gamma, is_feasible, SinrParams};

/// Slots forming a spanning in-arborescence: every link fires after all
/// links below it in the tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregationSchedule {
    pub slots: Vec<Slot>,
    pub sink: usize,
    pub tree: Vec<Link>,
}

impl AggregationSchedule {
    /// Number of slots, i.e. the latency of the schedule.
    pub fn latency(&self) -> usize {
        self.slots.len()
    }
}

/// Per-check outcome of aggregation verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregationReport {
    pub slots_feasible: bool,
    pub spanning_in_arborescence: bool,
    pub ordering_respected: bool,
    /// |P_{i+1}| / |P_i| for every round, for shrinkage inspection.
    pub shrink_ratios: Vec<f64>,
    pub pass: bool,
}

/// Keeps a node-disjoint subset of `links`: shorter links win, ties by id.
fn enforce_matching(links: &[Link]) -> Vec<Link> {
    let mut sorted: Vec<Link> = links.to_vec();
    sorted.sort_by(cmp_links);
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut kept = Vec::new();
    for l in sorted {
        if used.contains(&l.sender) || used.contains(&l.receiver) {
            continue;
        }
        used.insert(l.sender);
        used.insert(l.receiver);
        kept.push(l);
    }
    kept
}

/// Builds an aggregation schedule: each round forms the nearest-neighbor
/// forest of the surviving points, selects a feasible subset of it,
/// restricts to a matching, and retires the senders. The last surviving
/// point is the sink.
pub fn mlas(points: &PointSet, params: &SinrParams) -> Result<AggregationSchedule> {
    if points.is_empty() {
        return Err(Error::Precondition("aggregation needs at least one point".into()));
    }
    let admission = gamma(params);
    let mut alive: BTreeSet<usize> = points.ids().collect();
    let mut slots = Vec::new();
    let mut tree = Vec::new();
    while alive.len() > 1 {
        let current = points.restrict(&alive);
        let forest = nearest_neighbor_forest(&current)?;
        let (slot, _) = schedule_one_slot(&forest, params, admission)?;
        let kept = enforce_matching(&slot.links);
        if kept.is_empty() {
            return Err(Error::Precondition(format!(
                "aggregation round selected no links from {} points",
                alive.len()
            )));
        }
        let powers = assign_powers(&kept, params)?;
        let report = is_feasible(&kept, &powers, params)?;
        if !report.feasible {
            return Err(Error::VerificationFailed(format!(
                "aggregation slot {} is not SINR-feasible",
                slots.len()
            )));
        }
        for l in &kept {
            alive.remove(&l.sender);
            tree.push(*l);
        }
        slots.push(Slot { links: kept, powers });
    }
    let sink = *alive.iter().next().expect("one point survives");
    Ok(AggregationSchedule { slots, sink, tree })
}

/// Independent checks of an aggregation schedule: per-slot feasibility,
/// spanning in-arborescence shape, the ordering requirement, and per-round
/// shrinkage ratios.
pub fn verify_aggregation(
    points: &PointSet,
    schedule: &AggregationSchedule,
    params: &SinrParams,
) -> AggregationReport {
    let mut slots_feasible = true;
    for slot in &schedule.slots {
        match is_feasible(&slot.links, &slot.powers, params) {
            Ok(report) if report.feasible => {}
            _ => slots_feasible = false,
        }
    }

    // spanning in-arborescence: every non-sink point sends exactly once and
    // following parents always reaches the sink
    let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
    let mut shape_ok = true;
    for slot in &schedule.slots {
        for l in &slot.links {
            if parent.insert(l.sender, l.receiver).is_some() {
                shape_ok = false;
            }
        }
    }
    if parent.contains_key(&schedule.sink) {
        shape_ok = false;
    }
    for p in points.ids() {
        if p != schedule.sink && !parent.contains_key(&p) {
            shape_ok = false;
        }
    }
    if shape_ok {
        for start in points.ids() {
            let mut node = start;
            let mut hops = 0;
            while node != schedule.sink {
                match parent.get(&node) {
                    Some(&next) => node = next,
                    None => {
                        shape_ok = false;
                        break;
                    }
                }
                hops += 1;
                if hops > points.len() {
                    shape_ok = false; // cycle
                    break;
                }
            }
            if !shape_ok {
                break;
            }
        }
    }

    // ordering: a link must fire strictly before the link its receiver sends
    let slot_of_sender: BTreeMap<usize, usize> = schedule
        .slots
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.links.iter().map(move |l| (l.sender, i)))
        .collect();
    let mut ordering_ok = true;
    for (i, slot) in schedule.slots.iter().enumerate() {
        for l in &slot.links {
            if let Some(&j) = slot_of_sender.get(&l.receiver) {
                if j <= i {
                    ordering_ok = false;
                }
            }
        }
    }

    // shrinkage per round, replaying the sender removals
    let mut alive: BTreeSet<usize> = points.ids().collect();
    let mut shrink_ratios = Vec::new();
    for slot in &schedule.slots {
        let before = alive.len();
        for l in &slot.links {
            alive.remove(&l.sender);
        }
        if before > 0 {
            shrink_ratios.push(alive.len() as f64 / before as f64);
        }
    }

    let pass = slots_feasible && shape_ok && ordering_ok;
    AggregationReport {
        slots_feasible,
        spanning_in_arborescence: shape_ok,
        ordering_respected: ordering_ok,
        shrink_ratios,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sinr::PowerAssignment;

    fn params3() -> SinrParams {
        SinrParams::new(3.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn two_points_single_slot() {
        let pts = PointSet::from_coords(&[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        let sched = mlas(&pts, &params3()).unwrap();
        assert_eq!(sched.latency(), 1);
        assert_eq!(sched.slots[0].links.len(), 1);
        assert!(verify_aggregation(&pts, &sched, &params3()).pass);
    }

    #[test]
    fn single_point_empty_schedule() {
        let pts = PointSet::from_coords(&[(4.0, 2.0)]).unwrap();
        let sched = mlas(&pts, &params3()).unwrap();
        assert_eq!(sched.latency(), 0);
        assert_eq!(sched.sink, 0);
        assert!(verify_aggregation(&pts, &sched, &params3()).pass);
    }

    #[test]
    fn no_points_rejected() {
        let pts = PointSet::new(vec![]).unwrap();
        assert!(mlas(&pts, &params3()).is_err());
    }

    #[test]
    fn senders_retire_once_and_tree_spans() {
        let pts = PointSet::from_coords(&[
            (0.0, 0.0),
            (1.0, 0.3),
            (4.0, 1.0),
            (5.5, 0.0),
            (9.0, 4.0),
            (11.0, 3.0),
            (2.0, 8.0),
        ])
        .unwrap();
        let sched = mlas(&pts, &params3()).unwrap();
        let mut senders = BTreeSet::new();
        for slot in &sched.slots {
            for l in &slot.links {
                assert!(senders.insert(l.sender), "point {} sent twice", l.sender);
            }
        }
        assert_eq!(senders.len(), pts.len() - 1);
        assert_eq!(sched.tree.len(), pts.len() - 1);
        let report = verify_aggregation(&pts, &sched, &params3());
        assert!(report.pass, "{report:?}");
        // a matching at most halves the survivors
        assert!(sched.latency() >= (pts.len() as f64).log2().ceil() as usize);
    }

    #[test]
    fn ordering_violation_detected() {
        // child fires after its parent: (0->1) in slot 1 while 1 already sent in slot 0
        let pts = PointSet::on_line(&[0.0, 1.0, 2.0]).unwrap();
        let l01 = Link::in_set(&pts, 0, 1).unwrap();
        let l12 = Link::in_set(&pts, 1, 2).unwrap();
        let mut p0 = PowerAssignment::new();
        p0.set(&l12, 1.0).unwrap();
        let mut p1 = PowerAssignment::new();
        p1.set(&l01, 1.0).unwrap();
        let sched = AggregationSchedule {
            slots: vec![Slot { links: vec![l12], powers: p0 }, Slot { links: vec![l01], powers: p1 }],
            sink: 2,
            tree: vec![l12, l01],
        };
        let report = verify_aggregation(&pts, &sched, &params3());
        assert!(!report.ordering_respected);
        assert!(!report.pass);
        assert!(report.slots_feasible && report.spanning_in_arborescence);
    }

    #[test]
    fn two_root_forest_detected() {
        // 0 and 1 both send to each other's side, 3 never sends: not an
        // in-arborescence rooted at the declared sink
        let pts = PointSet::on_line(&[0.0, 1.0, 5.0, 6.0]).unwrap();
        let l01 = Link::in_set(&pts, 0, 1).unwrap();
        let l23 = Link::in_set(&pts, 2, 3).unwrap();
        let mut p0 = PowerAssignment::new();
        p0.set(&l01, 1.0).unwrap();
        p0.set(&l23, 1.0).unwrap();
        let sched = AggregationSchedule {
            slots: vec![Slot { links: vec![l01, l23], powers: p0 }],
            sink: 1,
            tree: vec![l01, l23],
        };
        let report = verify_aggregation(&pts, &sched, &params3());
        assert!(!report.spanning_in_arborescence);
        assert!(!report.pass);
    }
}
