//! Half-duplex pair scheduling: feasibility with per-direction powers,
//! pair-level selection, and the symmetric-power line instance on which
//! every two pairs conflict.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geom::{euclidean_mst, link_distance, Link, Point, PointSet};
use crate::sinr::{f_value, gamma, pow_alpha, FeasibilityReport, LinkReport, PowerAssignment, SinrParams, SINR_TOLERANCE};

/// An unordered node pair inducing two antiparallel links that are
/// scheduled together but powered independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub n1: usize,
    pub n2: usize,
    forward: Link,
    backward: Link,
}

impl Pair {
    pub fn new(a: &Point, b: &Point) -> Result<Self> {
        let (p, q) = if a.id <= b.id { (a, b) } else { (b, a) };
        Ok(Pair {
            n1: p.id,
            n2: q.id,
            forward: Link::between(p, q)?,
            backward: Link::between(q, p)?,
        })
    }

    pub fn in_set(points: &PointSet, a: usize, b: usize) -> Result<Self> {
        let pa = points.get(a).ok_or_else(|| Error::Precondition(format!("point {a} not in set")))?;
        let pb = points.get(b).ok_or_else(|| Error::Precondition(format!("point {b} not in set")))?;
        Pair::new(pa, pb)
    }

    pub fn length(&self) -> f64 {
        self.forward.length()
    }

    /// The two directed links (n1->n2, n2->n1).
    pub fn links(&self) -> (Link, Link) {
        (self.forward, self.backward)
    }

    pub fn key(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn shares_node_with(&self, other: &Pair) -> bool {
        self.n1 == other.n1 || self.n1 == other.n2 || self.n2 == other.n1 || self.n2 == other.n2
    }
}

/// Pair ordering mirroring the link order: by length, ties by node ids.
pub fn cmp_pairs(a: &Pair, b: &Pair) -> Ordering {
    a.length()
        .partial_cmp(&b.length())
        .expect("pair lengths are finite")
        .then(a.n1.cmp(&b.n1))
        .then(a.n2.cmp(&b.n2))
}

/// A slot of concurrently active pairs with per-direction powers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSlot {
    pub pairs: Vec<Pair>,
    pub powers: PowerAssignment,
}

/// Ordered pair slots partitioning a pair set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSchedule {
    pub slots: Vec<PairSlot>,
    pub source: String,
}

impl PairSchedule {
    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }
}

fn check_pair_disjoint(pairs: &[Pair]) -> Result<()> {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for p in pairs {
        for node in [p.n1, p.n2] {
            if !seen.insert(node) {
                return Err(Error::SharedNode(p.n1, p.n2, p.n1, p.n2));
            }
        }
    }
    Ok(())
}

/// SINR check for a slot of pairs: each direction of each pair must meet
/// the threshold against the interference from both directions of every
/// other pair plus noise. The two directions of one pair do not affect
/// each other.
pub fn bidi_feasible(pairs: &[Pair], powers: &PowerAssignment, params: &SinrParams) -> Result<FeasibilityReport> {
    check_pair_disjoint(pairs)?;
    let alpha = params.alpha();
    let mut per_link = Vec::new();
    let mut feasible = true;
    let mut worst: Option<((usize, usize), f64)> = None;
    for p in pairs {
        if p.length() == 0.0 {
            return Err(Error::Precondition(format!("zero-length pair ({},{})", p.n1, p.n2)));
        }
        let (f, b) = p.links();
        for dir in [f, b] {
            let signal = powers.get(&dir)? / pow_alpha(dir.length(), alpha);
            let mut interference = 0.0;
            let mut capped_sum = 0.0;
            for q in pairs {
                if q.key() == p.key() {
                    continue;
                }
                let (qf, qb) = q.links();
                for o in [qf, qb] {
                    let d = link_distance(&o, &dir);
                    let term = if d == 0.0 {
                        f64::INFINITY
                    } else {
                        powers.get(&o)? / pow_alpha(d, alpha)
                    };
                    interference += term;
                    capped_sum += (params.beta() * term / signal).min(1.0);
                }
            }
            let sinr = if interference + params.noise() == 0.0 {
                f64::INFINITY
            } else {
                signal / (interference + params.noise())
            };
            if sinr < params.beta() * (1.0 - SINR_TOLERANCE) {
                feasible = false;
            }
            if worst.is_none() || sinr < worst.unwrap().1 {
                worst = Some((dir.key(), sinr));
            }
            per_link.push(LinkReport {
                sender: dir.sender,
                receiver: dir.receiver,
                sinr,
                affectance_sum: capped_sum,
            });
        }
    }
    Ok(FeasibilityReport {
        per_link,
        feasible,
        worst: worst.map(|(k, _)| k),
        affectance_verdict: None,
    })
}

/// The 2x2 f-sum from `probe` onto every at-least-as-long pair of `pairs`,
/// with same-pair terms zeroed.
pub fn bidi_f_sum(pairs: &[Pair], probe: &Pair, alpha: f64) -> f64 {
    let (p1, p2) = probe.links();
    pairs
        .iter()
        .filter(|q| q.key() != probe.key() && cmp_pairs(probe, q) != Ordering::Greater)
        .map(|q| {
            let (q1, q2) = q.links();
            f_value(&p1, &q1, alpha)
                + f_value(&p1, &q2, alpha)
                + f_value(&p2, &q1, alpha)
                + f_value(&p2, &q2, alpha)
        })
        .sum()
}

/// Pair-level backward power recurrence: the flattened directed links are
/// walked in decreasing length order and each link is powered against all
/// longer links of other pairs; same-pair interference is excluded.
fn assign_pair_powers(pairs: &[Pair], params: &SinrParams) -> Result<PowerAssignment> {
    let mut links: Vec<(Link, usize)> = Vec::with_capacity(pairs.len() * 2);
    for (idx, p) in pairs.iter().enumerate() {
        let (f, b) = p.links();
        links.push((f, idx));
        links.push((b, idx));
    }
    links.sort_by(|a, b| crate::geom::cmp_links(&a.0, &b.0));
    let n = links.len();
    let alpha = params.alpha();
    let mut powers = vec![0.0; n];
    if n == 0 {
        return Ok(PowerAssignment::new());
    }
    powers[n - 1] = 1.0;
    for i in (0..n - 1).rev() {
        let mut sum = 0.0;
        for j in (i + 1)..n {
            if links[j].1 == links[i].1 {
                continue;
            }
            let d = link_distance(&links[j].0, &links[i].0);
            if d == 0.0 {
                return Err(Error::SharedNode(
                    links[j].0.sender,
                    links[j].0.receiver,
                    links[i].0.sender,
                    links[i].0.receiver,
                ));
            }
            sum += powers[j] * pow_alpha(links[i].0.length(), alpha) / pow_alpha(d, alpha);
        }
        powers[i] = if sum == 0.0 { 1.0 } else { 4.0 * params.beta() * sum };
    }
    if params.noise() > 0.0 {
        let mut factor: f64 = 1.0;
        for ((l, _), &p) in links.iter().zip(&powers) {
            factor = factor.max(2.0 * params.beta() * params.noise() * pow_alpha(l.length(), alpha) / p);
        }
        for p in &mut powers {
            *p *= factor;
        }
    }
    let mut assignment = PowerAssignment::new();
    for ((l, _), &p) in links.iter().zip(&powers) {
        assignment.set(l, p)?;
    }
    Ok(assignment)
}

/// Default pair-level admission threshold: a quarter of the unidirectional
/// one, leaving room for the 2x2 sums.
pub fn gamma_bidi(params: &SinrParams) -> f64 {
    gamma(params) / 4.0
}

/// Schedules the MST edges of `points` as bidirectional pairs: greedy
/// pair selection against the 2x2 f-sums, then the pair-level power
/// recurrence, one slot per round. Every slot is verified.
pub fn bidi_connect(points: &PointSet, params: &SinrParams) -> Result<PairSchedule> {
    bidi_connect_with_admission(points, params, gamma_bidi(params))
}

/// As `bidi_connect` with an explicit admission threshold.
pub fn bidi_connect_with_admission(
    points: &PointSet,
    params: &SinrParams,
    admission: f64,
) -> Result<PairSchedule> {
    if points.len() < 2 {
        return Err(Error::Precondition("bidirectional connectivity needs at least two points".into()));
    }
    if !(admission > 0.0) {
        return Err(Error::Precondition(format!("admission threshold must be positive, got {admission}")));
    }
    let tree = euclidean_mst(points)?;
    let mut remaining: Vec<Pair> = tree
        .edges()
        .iter()
        .map(|&(a, b)| Pair::in_set(points, a, b))
        .collect::<Result<_>>()?;
    remaining.sort_by(cmp_pairs);
    let mut slots = Vec::new();
    while !remaining.is_empty() {
        let mut selected: Vec<Pair> = Vec::new();
        let mut rest: Vec<Pair> = Vec::new();
        for (i, p) in remaining.iter().enumerate() {
            if p.length() == 0.0 {
                return Err(Error::Precondition(format!("zero-length pair ({},{})", p.n1, p.n2)));
            }
            let sum: f64 = remaining[..i].iter().map(|q| {
                let (q1, q2) = q.links();
                let (p1, p2) = p.links();
                f_value(&q1, &p1, params.alpha())
                    + f_value(&q1, &p2, params.alpha())
                    + f_value(&q2, &p1, params.alpha())
                    + f_value(&q2, &p2, params.alpha())
            }).sum();
            if sum <= admission {
                selected.push(*p);
            } else {
                rest.push(*p);
            }
        }
        if selected.is_empty() {
            return Err(Error::Precondition(format!(
                "no progress: pair selection returned nothing from {} pairs",
                remaining.len()
            )));
        }
        let powers = assign_pair_powers(&selected, params)?;
        let report = bidi_feasible(&selected, &powers, params)?;
        if !report.feasible {
            return Err(Error::VerificationFailed(format!(
                "bidirectional slot {} is not feasible (worst {:?})",
                slots.len(),
                report.worst
            )));
        }
        slots.push(PairSlot { pairs: selected, powers });
        remaining = rest;
    }
    Ok(PairSchedule { slots, source: format!("bidi mst over {} points", points.len()) })
}

/// The doubly-exponential line instance x_0 = 0, x_1 = 1, x_i = 2*x_{i-1}^2.
/// Coordinates grow past the double range beyond n = 8.
pub fn symmetric_lb_instance(n: usize) -> Result<PointSet> {
    if n < 2 {
        return Err(Error::Precondition("instance needs at least two points".into()));
    }
    if n > 8 {
        return Err(Error::TooLarge(format!(
            "coordinates overflow doubles beyond n = 8 (asked for {n})"
        )));
    }
    let mut xs = vec![0.0, 1.0];
    for i in 2..n {
        let prev: f64 = xs[i - 1];
        xs.push(2.0 * prev * prev);
    }
    PointSet::on_line(&xs)
}

/// Power-free certificate that two pairs cannot both be active under any
/// symmetric power assignment: the maximum over direction choices of the
/// affectance product with the powers cancelled,
/// (len_d * len'_b / (d_{l'_c l_d} * d_{l_a l'_b}))^alpha. A value above 1
/// certifies the conflict.
pub fn symmetric_conflict_certificate(a: &Pair, b: &Pair, params: &SinrParams) -> Result<f64> {
    if a.key() == b.key() {
        return Err(Error::Precondition("certificate needs two distinct pairs".into()));
    }
    let (a1, a2) = a.links();
    let (b1, b2) = b.links();
    let a_dirs = [a1, a2];
    let b_dirs = [b1, b2];
    let mut best = 0.0f64;
    for la in &a_dirs {
        for lb in &b_dirs {
            for lc in &b_dirs {
                for ld in &a_dirs {
                    let d1 = link_distance(la, lb);
                    let d2 = link_distance(lc, ld);
                    let value = if d1 == 0.0 || d2 == 0.0 {
                        f64::INFINITY
                    } else {
                        pow_alpha(ld.length() * lb.length() / (d1 * d2), params.alpha())
                    };
                    best = best.max(value);
                }
            }
        }
    }
    Ok(best)
}
