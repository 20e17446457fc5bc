//! SINR parameters, affectance, the feasibility predicate and the
//! length-ordered interference proxy `f` with its amenability and
//! per-link condition scores.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geom::{cmp_links, link_distance, symmetric_link_distance, Link};

/// Path-loss exponent, SINR threshold and ambient noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrParams {
    alpha: f64,
    beta: f64,
    noise: f64,
}

impl SinrParams {
    /// Requires alpha > 2, beta >= 1 and noise >= 0.
    pub fn new(alpha: f64, beta: f64, noise: f64) -> Result<Self> {
        if !(alpha > 2.0) || !alpha.is_finite() {
            return Err(Error::InvalidParams(format!("alpha must be > 2, got {alpha}")));
        }
        if !(beta >= 1.0) || !beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta must be >= 1, got {beta}")));
        }
        if !(noise >= 0.0) || !noise.is_finite() {
            return Err(Error::InvalidParams(format!("noise must be >= 0, got {noise}")));
        }
        Ok(SinrParams { alpha, beta, noise })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }
}

/// x^alpha with fast paths for the common integer exponents.
#[inline]
pub(crate) fn pow_alpha(x: f64, alpha: f64) -> f64 {
    if alpha == 3.0 {
        x * x * x
    } else if alpha == 4.0 {
        let s = x * x;
        s * s
    } else {
        x.powf(alpha)
    }
}

/// Transmission powers keyed by directed link.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerAssignment {
    map: BTreeMap<(usize, usize), f64>,
}

impl PowerAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every power must be strictly positive and finite.
    pub fn set(&mut self, link: &Link, power: f64) -> Result<()> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::InvalidParams(format!(
                "power for link ({}->{}) must be positive and finite, got {power}",
                link.sender, link.receiver
            )));
        }
        self.map.insert(link.key(), power);
        Ok(())
    }

    pub fn get(&self, link: &Link) -> Result<f64> {
        self.map
            .get(&link.key())
            .copied()
            .ok_or(Error::MissingPower(link.sender, link.receiver))
    }

    pub fn scale_all(&mut self, factor: f64) {
        for v in self.map.values_mut() {
            *v *= factor;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &f64)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl FromIterator<((usize, usize), f64)> for PowerAssignment {
    fn from_iter<I: IntoIterator<Item = ((usize, usize), f64)>>(iter: I) -> Self {
        PowerAssignment { map: iter.into_iter().collect() }
    }
}

fn coefficient(lp: &Link, powers: &PowerAssignment, params: &SinrParams) -> Result<f64> {
    let p = powers.get(lp)?;
    let needed = params.beta() * params.noise() * pow_alpha(lp.length(), params.alpha());
    if p <= needed {
        return Err(Error::SignalInsufficient { sender: lp.sender, receiver: lp.receiver, power: p });
    }
    Ok(params.beta() / (1.0 - needed / p))
}

/// Scaled interference of `l` on `lp`, capped at 1. The receiver-side
/// coefficient requires `lp` to overcome noise on its own.
pub fn affectance(l: &Link, lp: &Link, powers: &PowerAssignment, params: &SinrParams) -> Result<f64> {
    if l.key() == lp.key() {
        return Err(Error::Precondition("affectance of a link on itself is undefined".into()));
    }
    if lp.length() == 0.0 {
        return Err(Error::Precondition("affectance onto a zero-length link is undefined".into()));
    }
    let c = coefficient(lp, powers, params)?;
    let d = link_distance(l, lp);
    if d == 0.0 {
        return Ok(1.0);
    }
    let pl = powers.get(l)?;
    let plp = powers.get(lp)?;
    let ratio = c * (pl / pow_alpha(d, params.alpha())) / (plp / pow_alpha(lp.length(), params.alpha()));
    Ok(ratio.min(1.0))
}

/// Per-link outcome of a feasibility check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkReport {
    pub sender: usize,
    pub receiver: usize,
    /// Signal over interference plus noise.
    pub sinr: f64,
    /// Sum of (capped) affectances from the other links of the slot.
    pub affectance_sum: f64,
}

/// Outcome of checking one slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub per_link: Vec<LinkReport>,
    pub feasible: bool,
    /// Link with the smallest SINR, if any links were checked.
    pub worst: Option<(usize, usize)>,
    /// Verdict of the affectance-sum form, available when noise is zero.
    /// Uses uncapped sums: the capped form is not equivalent to the SINR
    /// form when a single interferer exceeds the cap.
    pub affectance_verdict: Option<bool>,
}

/// Relative slack granted on the SINR threshold so exactly-tight
/// constructions do not fail on floating-point rounding.
pub const SINR_TOLERANCE: f64 = 1e-9;

/// Checks the SINR condition for every link of a slot. Links must be
/// node-disjoint and every link needs a power entry; zero-length links are
/// rejected.
pub fn is_feasible(slot: &[Link], powers: &PowerAssignment, params: &SinrParams) -> Result<FeasibilityReport> {
    let mut seen: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for l in slot {
        for node in [l.sender, l.receiver] {
            if let Some(&other) = seen.get(&node) {
                return Err(Error::SharedNode(other.0, other.1, l.sender, l.receiver));
            }
            seen.insert(node, l.key());
        }
        if l.length() == 0.0 {
            return Err(Error::Precondition(format!(
                "zero-length link ({}->{}) in slot",
                l.sender, l.receiver
            )));
        }
    }

    let alpha = params.alpha();
    let mut per_link = Vec::with_capacity(slot.len());
    let mut feasible = true;
    let mut worst: Option<((usize, usize), f64)> = None;
    let mut verdict2 = Some(true);

    for l in slot {
        let signal = powers.get(l)? / pow_alpha(l.length(), alpha);
        let mut interference = 0.0;
        let mut capped_sum = 0.0;
        let mut uncapped_sum = 0.0;
        for o in slot {
            if o.key() == l.key() {
                continue;
            }
            let d = link_distance(o, l);
            let term = if d == 0.0 {
                f64::INFINITY
            } else {
                powers.get(o)? / pow_alpha(d, alpha)
            };
            interference += term;
            let scaled = params.beta() * term / signal;
            uncapped_sum += scaled;
            capped_sum += scaled.min(1.0);
        }
        let sinr = if interference + params.noise() == 0.0 {
            f64::INFINITY
        } else {
            signal / (interference + params.noise())
        };
        if sinr < params.beta() * (1.0 - SINR_TOLERANCE) {
            feasible = false;
        }
        if params.noise() == 0.0 {
            if uncapped_sum > 1.0 + SINR_TOLERANCE {
                verdict2 = Some(false);
            }
        } else {
            verdict2 = None;
        }
        if worst.is_none() || sinr < worst.unwrap().1 {
            worst = Some((l.key(), sinr));
        }
        per_link.push(LinkReport {
            sender: l.sender,
            receiver: l.receiver,
            sinr,
            affectance_sum: capped_sum,
        });
    }

    Ok(FeasibilityReport {
        per_link,
        feasible,
        worst: worst.map(|(k, _)| k),
        affectance_verdict: if slot.is_empty() { Some(true) } else { verdict2 },
    })
}

/// Interference proxy from `l` onto `lp`: zero unless `l` precedes `lp` in
/// the global length order, else min(1, (len(l)/d(l,lp))^alpha) using the
/// symmetric link distance.
pub fn f_value(l: &Link, lp: &Link, alpha: f64) -> f64 {
    if cmp_links(l, lp) != Ordering::Less {
        return 0.0;
    }
    let d = symmetric_link_distance(l, lp);
    if d == 0.0 {
        return 1.0;
    }
    pow_alpha(l.length() / d, alpha).min(1.0)
}

/// Sum of f from `probe` onto every at-least-as-long link of `links`.
/// A set is amenable at threshold rho when this stays <= rho for every
/// probe of interest.
pub fn amenability_score(links: &[Link], probe: &Link, alpha: f64) -> f64 {
    links.iter().map(|lp| f_value(probe, lp, alpha)).sum()
}

/// For each link of `links`, the sum of f from all no-longer links of the
/// set onto it. The one-slot condition holds at threshold gamma iff every
/// score is <= gamma.
pub fn kesselheim_scores(links: &[Link], alpha: f64) -> BTreeMap<(usize, usize), f64> {
    links
        .iter()
        .map(|lp| {
            let score: f64 = links.iter().map(|l| f_value(l, lp, alpha)).sum();
            (lp.key(), score)
        })
        .collect()
}

/// The one-slot admission threshold 1 / (4 * 3^alpha * (4*beta + 2)).
pub fn gamma(params: &SinrParams) -> f64 {
    1.0 / (4.0 * pow_alpha(3.0, params.alpha()) * (4.0 * params.beta() + 2.0))
}

/// Default amenability threshold: twice the maximum score observed over a
/// frozen corpus of 50 seeded uniform MST instances (n = 100, side 1000,
/// seeds 0..50, alpha = 3); the measured maximum was 4.93.
pub const DEFAULT_RHO: f64 = 9.87;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::PointSet;
    use approx::assert_relative_eq;

    fn params(alpha: f64, beta: f64, noise: f64) -> SinrParams {
        SinrParams::new(alpha, beta, noise).unwrap()
    }

    fn two_links() -> (Link, Link) {
        // both length 1, receiver-to-sender gap chosen so d(l, lp) = 2
        let pts = PointSet::from_coords(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0), (4.0, 0.0)]).unwrap();
        (Link::in_set(&pts, 0, 1).unwrap(), Link::in_set(&pts, 2, 3).unwrap())
    }

    #[test]
    fn params_validation() {
        assert!(SinrParams::new(2.0, 1.0, 0.0).is_err());
        assert!(SinrParams::new(3.0, 0.5, 0.0).is_err());
        assert!(SinrParams::new(3.0, 1.0, -1.0).is_err());
        assert!(SinrParams::new(3.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn affectance_hand_example() {
        // alpha=3, beta=1, N=0, unit lengths and powers, d = 2 -> 1/8
        let (l, lp) = two_links();
        let mut powers = PowerAssignment::new();
        powers.set(&l, 1.0).unwrap();
        powers.set(&lp, 1.0).unwrap();
        let prm = params(3.0, 1.0, 0.0);
        let a = affectance(&l, &lp, &powers, &prm).unwrap();
        assert_relative_eq!(a, 0.125);
    }

    #[test]
    fn affectance_caps_at_shared_position() {
        let (l, _) = two_links();
        let rev = l.reversed();
        let mut powers = PowerAssignment::new();
        powers.set(&l, 1.0).unwrap();
        powers.set(&rev, 1.0).unwrap();
        let prm = params(3.0, 1.0, 0.0);
        assert_eq!(affectance(&l, &rev, &powers, &prm).unwrap(), 1.0);
    }

    #[test]
    fn affectance_vanishes_with_sender_power() {
        let (l, lp) = two_links();
        let prm = params(3.0, 1.0, 0.0);
        let mut prev = f64::INFINITY;
        for p in [1.0, 1e-3, 1e-6, 1e-9] {
            let mut powers = PowerAssignment::new();
            powers.set(&l, p).unwrap();
            powers.set(&lp, 1.0).unwrap();
            let a = affectance(&l, &lp, &powers, &prm).unwrap();
            assert!(a <= prev);
            prev = a;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn affectance_rejects_insufficient_signal() {
        let (l, lp) = two_links();
        let mut powers = PowerAssignment::new();
        powers.set(&l, 1.0).unwrap();
        powers.set(&lp, 0.5).unwrap();
        // beta*N*len^alpha = 1.0 > 0.5
        let prm = params(3.0, 1.0, 1.0);
        assert!(matches!(
            affectance(&l, &lp, &powers, &prm),
            Err(Error::SignalInsufficient { .. })
        ));
    }

    #[test]
    fn single_link_always_feasible_without_noise() {
        let (l, _) = two_links();
        let mut powers = PowerAssignment::new();
        powers.set(&l, 1e-12).unwrap();
        let prm = params(3.0, 1.0, 0.0);
        let report = is_feasible(&[l], &powers, &prm).unwrap();
        assert!(report.feasible);
        assert_eq!(report.worst, Some(l.key()));
    }

    #[test]
    fn shared_node_slot_rejected() {
        let (l, _) = two_links();
        let rev = l.reversed();
        let mut powers = PowerAssignment::new();
        powers.set(&l, 1.0).unwrap();
        powers.set(&rev, 1.0).unwrap();
        let prm = params(3.0, 1.0, 0.0);
        assert!(matches!(is_feasible(&[l, rev], &powers, &prm), Err(Error::SharedNode(..))));
    }

    #[test]
    fn missing_power_rejected() {
        let (l, lp) = two_links();
        let mut powers = PowerAssignment::new();
        powers.set(&l, 1.0).unwrap();
        let prm = params(3.0, 1.0, 0.0);
        assert!(matches!(is_feasible(&[l, lp], &powers, &prm), Err(Error::MissingPower(..))));
    }

    #[test]
    fn f_value_examples() {
        let pts = PointSet::from_coords(&[
            (0.0, 0.0),
            (1.0, 0.0), // unit link 0->1
            (3.0, 0.0),
            (5.0, 0.0), // length-2 link 2->3, d(l,lp) = 2
        ])
        .unwrap();
        let l = Link::in_set(&pts, 0, 1).unwrap();
        let lp = Link::in_set(&pts, 2, 3).unwrap();
        assert_eq!(f_value(&l, &l, 3.0), 0.0);
        assert_relative_eq!(f_value(&l, &lp, 3.0), 0.125);
        // longer onto shorter is zero
        assert_eq!(f_value(&lp, &l, 3.0), 0.0);
    }

    #[test]
    fn f_value_scale_invariance() {
        let pts = PointSet::from_coords(&[(0.2, 0.7), (1.9, 0.3), (4.0, 2.0), (6.5, 3.0)]).unwrap();
        let scaled = PointSet::from_coords(&[
            (0.2e3, 0.7e3),
            (1.9e3, 0.3e3),
            (4.0e3, 2.0e3),
            (6.5e3, 3.0e3),
        ])
        .unwrap();
        let l = Link::in_set(&pts, 0, 1).unwrap();
        let lp = Link::in_set(&pts, 2, 3).unwrap();
        let ls = Link::in_set(&scaled, 0, 1).unwrap();
        let lps = Link::in_set(&scaled, 2, 3).unwrap();
        for alpha in [2.5, 3.0, 4.0] {
            let a = f_value(&l, &lp, alpha);
            let b = f_value(&ls, &lps, alpha);
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn amenability_trivial_cases() {
        let (l, lp) = two_links();
        assert_eq!(amenability_score(&[], &l, 3.0), 0.0);
        // probe longer than everything in L
        assert_eq!(amenability_score(&[l], &lp, 3.0), 0.0);
    }

    #[test]
    fn kesselheim_scores_singleton_and_far() {
        let (l, _) = two_links();
        let scores = kesselheim_scores(&[l], 3.0);
        assert_eq!(scores[&l.key()], 0.0);

        let pts = PointSet::from_coords(&[(0.0, 0.0), (1.0, 0.0), (1e6, 0.0), (1e6 + 1.0, 0.0)]).unwrap();
        let a = Link::in_set(&pts, 0, 1).unwrap();
        let b = Link::in_set(&pts, 2, 3).unwrap();
        let scores = kesselheim_scores(&[a, b], 3.0);
        assert!(scores.values().all(|&s| s < 1e-15));
    }

    #[test]
    fn gamma_values() {
        let g3 = gamma(&params(3.0, 1.0, 0.0));
        assert_relative_eq!(g3, 1.0 / 648.0);
        let g4 = gamma(&params(4.0, 1.0, 0.0));
        assert_relative_eq!(g4, 1.0 / 1944.0);
        // decreasing in alpha and beta
        assert!(gamma(&params(3.5, 1.0, 0.0)) < g3);
        assert!(gamma(&params(3.0, 2.0, 0.0)) < g3);
    }
}
