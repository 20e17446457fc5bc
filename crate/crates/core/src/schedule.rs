//! Greedy one-slot selection, the backward power recurrence, the repeated
//! connectivity scheduler, first-fit sparsification and a brute-force
//! minimum-slot oracle for desk-scale cross-checks.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geom::{cmp_links, euclidean_mst, link_distance, orient, Direction, Link, PointSet};
use crate::oblivious::PowerFunction;
use crate::sinr::{f_value, gamma, is_feasible, pow_alpha, PowerAssignment, SinrParams};

/// A set of concurrently transmitting links with their powers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Slot {
    pub links: Vec<Link>,
    pub powers: PowerAssignment,
}

/// An ordered list of slots partitioning an input link set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schedule {
    pub slots: Vec<Slot>,
    pub source: String,
}

impl Schedule {
    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn all_links(&self) -> Vec<Link> {
        self.slots.iter().flat_map(|s| s.links.iter().copied()).collect()
    }
}

/// Greedy pass over `links` in increasing length order: link i is admitted
/// iff the f-sum from all earlier links of the sorted order is at most
/// `admission`. The admitted set satisfies the one-slot condition at the
/// same threshold.
pub fn schedule_select(links: &[Link], admission: f64, alpha: f64) -> Result<Vec<Link>> {
    if !(admission > 0.0) {
        return Err(Error::Precondition(format!("admission threshold must be positive, got {admission}")));
    }
    if let Some(l) = links.iter().find(|l| l.length() == 0.0) {
        return Err(Error::Precondition(format!(
            "zero-length link ({}->{}) cannot be scheduled",
            l.sender, l.receiver
        )));
    }
    let mut sorted: Vec<Link> = links.to_vec();
    sorted.sort_by(cmp_links);
    let mut selected = Vec::new();
    for i in 0..sorted.len() {
        let mut sum = 0.0;
        for j in 0..i {
            sum += f_value(&sorted[j], &sorted[i], alpha);
            if sum > admission {
                break;
            }
        }
        if sum <= admission {
            selected.push(sorted[i]);
        }
    }
    Ok(selected)
}

/// Backward power recurrence over `slot` sorted by increasing length: the
/// longest link gets power 1 and each earlier link gets 4*beta times the
/// interference power it would receive from all later links. A final global
/// scaling leaves every link a noise-only SINR of at least 2*beta.
pub fn assign_powers(slot: &[Link], params: &SinrParams) -> Result<PowerAssignment> {
    let mut sorted: Vec<Link> = slot.to_vec();
    sorted.sort_by(cmp_links);
    let n = sorted.len();
    let alpha = params.alpha();
    let mut powers = vec![0.0; n];
    let mut assignment = PowerAssignment::new();
    if n == 0 {
        return Ok(assignment);
    }
    if let Some(l) = sorted.iter().find(|l| l.length() == 0.0) {
        return Err(Error::Precondition(format!(
            "zero-length link ({}->{}) cannot be powered",
            l.sender, l.receiver
        )));
    }
    powers[n - 1] = 1.0;
    for i in (0..n.saturating_sub(1)).rev() {
        let mut sum = 0.0;
        for j in (i + 1)..n {
            let d = link_distance(&sorted[j], &sorted[i]);
            if d == 0.0 {
                return Err(Error::SharedNode(
                    sorted[j].sender,
                    sorted[j].receiver,
                    sorted[i].sender,
                    sorted[i].receiver,
                ));
            }
            sum += powers[j] * pow_alpha(sorted[i].length(), alpha) / pow_alpha(d, alpha);
        }
        powers[i] = if sum == 0.0 { 1.0 } else { 4.0 * params.beta() * sum };
    }
    // noise scaling: noise may consume at most half the SINR budget
    if params.noise() > 0.0 {
        let mut factor: f64 = 1.0;
        for (l, &p) in sorted.iter().zip(&powers) {
            factor = factor.max(2.0 * params.beta() * params.noise() * pow_alpha(l.length(), alpha) / p);
        }
        for p in &mut powers {
            *p *= factor;
        }
    }
    for (l, &p) in sorted.iter().zip(&powers) {
        assignment.set(l, p)?;
    }
    Ok(assignment)
}

/// One round of selection plus power assignment. Returns the emitted slot
/// and the links left over.
pub fn schedule_one_slot(links: &[Link], params: &SinrParams, admission: f64) -> Result<(Slot, Vec<Link>)> {
    let selected = schedule_select(links, admission, params.alpha())?;
    let powers = assign_powers(&selected, params)?;
    let chosen: BTreeSet<(usize, usize)> = selected.iter().map(Link::key).collect();
    let remainder: Vec<Link> = links.iter().filter(|l| !chosen.contains(&l.key())).copied().collect();
    Ok((Slot { links: selected, powers }, remainder))
}

/// Repeats one-slot scheduling until the link set is exhausted, using the
/// theoretical admission threshold for `params`. Every emitted slot is
/// verified for SINR feasibility before being accepted.
pub fn connect(links: &[Link], params: &SinrParams) -> Result<Schedule> {
    connect_with_admission(links, params, gamma(params))
}

/// As `connect` but with an explicit admission threshold for experiments.
pub fn connect_with_admission(links: &[Link], params: &SinrParams, admission: f64) -> Result<Schedule> {
    let mut remaining: Vec<Link> = links.to_vec();
    let mut slots = Vec::new();
    while !remaining.is_empty() {
        let (slot, rest) = schedule_one_slot(&remaining, params, admission)?;
        if slot.links.is_empty() {
            return Err(Error::Precondition(format!(
                "no progress: selection returned no links from a remainder of {}",
                remaining.len()
            )));
        }
        let report = is_feasible(&slot.links, &slot.powers, params)?;
        if !report.feasible {
            return Err(Error::VerificationFailed(format!(
                "emitted slot {} is not SINR-feasible (worst link {:?})",
                slots.len(),
                report.worst
            )));
        }
        slots.push(slot);
        remaining = rest;
    }
    Ok(Schedule { slots, source: format!("connect over {} links", links.len()) })
}

/// Schedules the MST of `points` in both orientations relative to the
/// smallest point id: one in-arborescence and one out-arborescence.
/// Their union strongly connects the point set.
pub fn strong_connect(points: &PointSet, params: &SinrParams) -> Result<(Schedule, Schedule)> {
    if points.len() < 2 {
        return Err(Error::Precondition("strong connectivity needs at least two points".into()));
    }
    let root = points.ids().next().expect("nonempty");
    let tree = euclidean_mst(points)?;
    let toward = orient(&tree, points, root, Direction::TowardRoot)?;
    let away = orient(&tree, points, root, Direction::AwayFromRoot)?;
    let mut sched_toward = connect(&toward, params)?;
    let mut sched_away = connect(&away, params)?;
    sched_toward.source = format!("mst toward root {root}");
    sched_away.source = format!("mst away from root {root}");
    Ok((sched_toward, sched_away))
}

/// First-fit split of `links` (by increasing length) into bins that each
/// satisfy the one-slot condition at threshold `admission`. Because f from
/// a longer link onto a shorter one is zero, only the incoming link's own
/// score needs checking.
pub fn sparsify(links: &[Link], admission: f64, alpha: f64) -> Vec<Vec<Link>> {
    let mut sorted: Vec<Link> = links.to_vec();
    sorted.sort_by(cmp_links);
    let mut bins: Vec<Vec<Link>> = Vec::new();
    for l in sorted {
        let mut placed = false;
        for bin in &mut bins {
            let score: f64 = bin.iter().map(|b| f_value(b, &l, alpha)).sum();
            if score <= admission {
                bin.push(l);
                placed = true;
                break;
            }
        }
        if !placed {
            bins.push(vec![l]);
        }
    }
    bins
}

/// Power rule used by the brute-force oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerMode {
    /// Powers from the backward recurrence over the block.
    Recurrence,
    /// Oblivious powers p(length) for the given power function.
    Oblivious(PowerFunction),
}

/// Exhaustive minimum number of slots needed for `links`: a block is
/// admissible when its mode-specific powers make it SINR-feasible (shared
/// nodes make a block inadmissible). Limited to 10 links.
pub fn min_slots_bruteforce(links: &[Link], params: &SinrParams, mode: PowerMode) -> Result<usize> {
    let n = links.len();
    if n > 10 {
        return Err(Error::TooLarge(format!("brute-force oracle handles at most 10 links, got {n}")));
    }
    if n == 0 {
        return Ok(0);
    }
    let admissible = |mask: u32| -> bool {
        let block: Vec<Link> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| links[i]).collect();
        let powers = match mode {
            PowerMode::Recurrence => match assign_powers(&block, params) {
                Ok(p) => p,
                Err(_) => return false,
            },
            PowerMode::Oblivious(pf) => {
                let mut p = PowerAssignment::new();
                for l in &block {
                    let val = pf.eval(l.length(), params.alpha());
                    if p.set(l, val).is_err() {
                        return false;
                    }
                }
                p
            }
        };
        match is_feasible(&block, &powers, params) {
            Ok(report) => report.feasible,
            Err(_) => false,
        }
    };
    min_partition_blocks(n, admissible)
        .ok_or_else(|| Error::Precondition("some link cannot be scheduled even alone".into()))
}

/// Minimum number of admissible blocks partitioning n items, by dynamic
/// programming over subsets. Returns None if some singleton is inadmissible.
pub(crate) fn min_partition_blocks<F: Fn(u32) -> bool>(n: usize, admissible: F) -> Option<usize> {
    let full: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let mut ok = vec![false; (full as usize) + 1];
    for mask in 1..=full {
        ok[mask as usize] = admissible(mask);
    }
    let mut dp = vec![usize::MAX; (full as usize) + 1];
    dp[0] = 0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        // enumerate submasks of mask containing the lowest set bit
        let rest = mask ^ low;
        let mut sub = rest;
        loop {
            let block = sub | low;
            if ok[block as usize] && dp[(mask ^ block) as usize] != usize::MAX {
                let cand = dp[(mask ^ block) as usize] + 1;
                if cand < dp[mask as usize] {
                    dp[mask as usize] = cand;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    if dp[full as usize] == usize::MAX {
        None
    } else {
        Some(dp[full as usize])
    }
}
