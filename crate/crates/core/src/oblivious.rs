//! Oblivious power assignments: smoothness, the slot lower-bound chain,
//! pairwise conflict tests, length classes and the per-class uniform or
//! linear power scheduler.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geom::{cmp_links, link_distance, Link, PointSet};
use crate::sinr::{is_feasible, pow_alpha, PowerAssignment, SinrParams};
use crate::schedule::{Schedule, Slot};

/// A transmission power that depends only on the link length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PowerFunction {
    /// p(x) = 1
    Uniform,
    /// p(x) = x^alpha
    Linear,
    /// p(x) = x^(alpha/2)
    Mean,
    /// p(x) = x^tau
    Exponent(f64),
}

impl PowerFunction {
    pub fn eval(&self, x: f64, alpha: f64) -> f64 {
        match self {
            PowerFunction::Uniform => 1.0,
            PowerFunction::Linear => pow_alpha(x, alpha),
            PowerFunction::Mean => x.powf(alpha / 2.0),
            PowerFunction::Exponent(tau) => x.powf(*tau),
        }
    }

    /// Effective length exponent, used for closed forms.
    fn exponent(&self, alpha: f64) -> f64 {
        match self {
            PowerFunction::Uniform => 0.0,
            PowerFunction::Linear => alpha,
            PowerFunction::Mean => alpha / 2.0,
            PowerFunction::Exponent(tau) => *tau,
        }
    }
}

/// g(x) = min(p(x), x^alpha / p(x)) / 2, the two-sided margin of a power
/// function against uniform and linear behavior.
pub fn smooth_g(p: &PowerFunction, x: f64, alpha: f64) -> f64 {
    let v = p.eval(x, alpha);
    0.5 * v.min(pow_alpha(x, alpha) / v)
}

/// Checks smoothness on a log-spaced grid over [1, 2^40]: p(x) >= x,
/// p monotone, p(x) <= x^alpha, and g monotone increasing and unbounded.
pub fn is_smooth(p: &PowerFunction, alpha: f64) -> bool {
    let mut last_p = f64::NEG_INFINITY;
    let mut last_g = f64::NEG_INFINITY;
    let mut first_g = None;
    let samples = 81;
    let mut ok = true;
    let mut final_g = 0.0;
    for i in 0..samples {
        let x = 2f64.powf(40.0 * i as f64 / (samples - 1) as f64);
        let v = p.eval(x, alpha);
        if v < x * (1.0 - 1e-12) || v > pow_alpha(x, alpha) * (1.0 + 1e-12) || v < last_p {
            ok = false;
            break;
        }
        let g = smooth_g(p, x, alpha);
        if g < last_g {
            ok = false;
            break;
        }
        if first_g.is_none() {
            first_g = Some(g);
        }
        last_p = v;
        last_g = g;
        final_g = g;
    }
    // unbounded on the grid: g must grow well past its initial value
    ok && final_g > first_g.unwrap_or(0.0) * 16.0
}

/// Inverse of g for a smooth power function. Exponent powers use the closed
/// form; others are bracketed and bisected to the given relative tolerance
/// (default 1e-12 when `tol` is None).
pub fn g_inverse(p: &PowerFunction, y: f64, alpha: f64, tol: Option<f64>) -> Result<f64> {
    if !is_smooth(p, alpha) {
        return Err(Error::Precondition(format!("power function {p:?} is not smooth")));
    }
    let tol = tol.unwrap_or(1e-12);
    if y < smooth_g(p, 1.0, alpha) {
        return Err(Error::Precondition(format!("{y} is below the range of g")));
    }
    if let PowerFunction::Exponent(tau) = p {
        let m = tau.min(alpha - tau);
        return Ok((2.0 * y).powf(1.0 / m));
    }
    let mut lo = 1.0f64;
    let mut hi = 2.0f64;
    while smooth_g(p, hi, alpha) < y {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::TooLarge(format!("g never reaches {y}")));
        }
    }
    while (hi - lo) > tol * hi {
        let mid = 0.5 * (lo + hi);
        if smooth_g(p, mid, alpha) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The line instance x_1 = 0, x_2 = 2, x_i = x_{i-1} + g^{-1}(2 x_{i-1}^alpha)
/// on which no two links can share a slot under the power function `p`.
pub fn oblivious_lb_instance(n: usize, p: &PowerFunction, params: &SinrParams) -> Result<PointSet> {
    if n < 2 {
        return Err(Error::Precondition("instance needs at least two points".into()));
    }
    if !is_smooth(p, params.alpha()) {
        return Err(Error::Precondition(format!("power function {p:?} is not smooth")));
    }
    let mut xs = vec![0.0f64, 2.0];
    for i in 2..n {
        let prev = xs[i - 1];
        let step = g_inverse(p, 2.0 * pow_alpha(prev, params.alpha()), params.alpha(), None)?;
        let next = prev + step;
        if !next.is_finite() || next > 1e300 {
            return Err(Error::TooLarge(format!("coordinate {i} overflows doubles")));
        }
        xs.push(next);
    }
    PointSet::on_line(&xs)
}

/// True when the two links cannot be simultaneously feasible under powers
/// p(length): some direction's uncapped affectance exceeds 1, or the links
/// share a node (a point cannot take part in two transmissions).
pub fn pairwise_oblivious_conflict(a: &Link, b: &Link, p: &PowerFunction, params: &SinrParams) -> bool {
    if a.key() == b.key() || a.shares_node_with(b) {
        return true;
    }
    let alpha = params.alpha();
    let pa = p.eval(a.length(), alpha);
    let pb = p.eval(b.length(), alpha);
    let mut conflict = false;
    for (l, lp, pl, plp) in [(a, b, pa, pb), (b, a, pb, pa)] {
        let needed = params.beta() * params.noise() * pow_alpha(lp.length(), alpha);
        if plp <= needed {
            return true; // the interfered link cannot even run alone
        }
        let c = params.beta() / (1.0 - needed / plp);
        let d = link_distance(l, lp);
        if d == 0.0 {
            return true;
        }
        let ratio = c * (pl / pow_alpha(d, alpha)) / (plp / pow_alpha(lp.length(), alpha));
        if ratio > 1.0 {
            conflict = true;
        }
    }
    conflict
}

/// Links grouped by ceil(log2(length / min length)).
#[derive(Debug, Clone)]
pub struct LengthClasses {
    classes: BTreeMap<i64, Vec<Link>>,
}

impl LengthClasses {
    pub fn classes(&self) -> &BTreeMap<i64, Vec<Link>> {
        &self.classes
    }

    /// Length diversity: the number of occupied classes.
    pub fn diversity(&self) -> usize {
        self.classes.len()
    }
}

/// Partitions `links` into length classes after rescaling so the shortest
/// length becomes 1. Within one class, lengths differ by a factor below 2.
pub fn length_classes(links: &[Link]) -> Result<LengthClasses> {
    if links.is_empty() {
        return Ok(LengthClasses { classes: BTreeMap::new() });
    }
    let min_len = links.iter().map(|l| l.length()).fold(f64::INFINITY, f64::min);
    if !(min_len > 0.0) {
        return Err(Error::Precondition("length classes need strictly positive lengths".into()));
    }
    let mut classes: BTreeMap<i64, Vec<Link>> = BTreeMap::new();
    for l in links {
        let m = (l.length() / min_len).log2().ceil() as i64;
        classes.entry(m).or_default().push(*l);
    }
    for c in classes.values_mut() {
        c.sort_by(cmp_links);
    }
    Ok(LengthClasses { classes })
}

/// Riemann zeta via truncated series with an Euler-Maclaurin tail, accurate
/// to well below 1e-10 for s > 1.
pub fn zeta(s: f64) -> f64 {
    let n = 1000u64;
    let mut sum = 0.0;
    for k in 1..n {
        sum += (k as f64).powf(-s);
    }
    let nf = n as f64;
    sum + nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s) + s * nf.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * nf.powf(-s - 3.0) / 720.0
}

/// Sender separation factor for same-slot links within one length class:
/// t = 4 * (alpha * 16 * zeta(alpha - 1))^(1/alpha).
pub fn separation_factor(params: &SinrParams) -> f64 {
    let a = params.alpha();
    4.0 * (a * 16.0 * zeta(a - 1.0)).powf(1.0 / a)
}

/// Bound on colors per length class: 8 * (4t)^2. Exceeding it would
/// contradict the disc packing bound and is reported as an error.
pub fn color_bound(params: &SinrParams) -> usize {
    let t = separation_factor(params);
    (8.0 * (4.0 * t).powi(2)).ceil() as usize
}

fn class_schedule(
    links: &[Link],
    params: &SinrParams,
    slot_power: impl Fn(&[Link], &Link) -> f64,
    label: &str,
) -> Result<Schedule> {
    let classes = length_classes(links)?;
    let t = separation_factor(params);
    let max_colors = color_bound(params);
    let mut slots = Vec::new();
    for (_, members) in classes.classes() {
        let d = members.iter().map(|l| l.length()).fold(f64::INFINITY, f64::min);
        // greedy first-fit coloring, longest first, senders >= t*d apart
        let mut order: Vec<&Link> = members.iter().collect();
        order.sort_by(|a, b| cmp_links(b, a));
        let mut colors: Vec<Vec<Link>> = Vec::new();
        'links: for l in order {
            for color in &mut colors {
                let fits = color.iter().all(|o| {
                    let (sx, sy) = l.sender_pos();
                    let (ox, oy) = o.sender_pos();
                    let sep = ((sx - ox).powi(2) + (sy - oy).powi(2)).sqrt();
                    sep >= t * d && !l.shares_node_with(o)
                });
                if fits {
                    color.push(*l);
                    continue 'links;
                }
            }
            colors.push(vec![*l]);
        }
        if colors.len() > max_colors {
            return Err(Error::VerificationFailed(format!(
                "class coloring used {} colors, above the packing bound {max_colors}",
                colors.len()
            )));
        }
        for color in colors {
            let mut slot_links = color;
            slot_links.sort_by(cmp_links);
            let mut powers = PowerAssignment::new();
            for l in &slot_links {
                powers.set(l, slot_power(&slot_links, l))?;
            }
            let report = is_feasible(&slot_links, &powers, params)?;
            if !report.feasible {
                return Err(Error::VerificationFailed(format!(
                    "{label}-power slot failed feasibility (worst {:?})",
                    report.worst
                )));
            }
            slots.push(Slot { links: slot_links, powers });
        }
    }
    Ok(Schedule { slots, source: format!("{label} power over {} links", links.len()) })
}

/// Schedules `links` (an oriented MST) with one common power per slot:
/// length classes are colored so same-slot senders are at least t*d apart.
/// Slot power is 1 without noise, else 2*beta*N*(2*d_max)^alpha.
pub fn uniform_power_schedule(links: &[Link], params: &SinrParams) -> Result<Schedule> {
    class_schedule(
        links,
        params,
        |slot, _| {
            if params.noise() == 0.0 {
                1.0
            } else {
                let d_max = slot.iter().map(|l| l.length()).fold(0.0, f64::max);
                2.0 * params.beta() * params.noise() * pow_alpha(2.0 * d_max, params.alpha())
            }
        },
        "uniform",
    )
}

/// Same structure as the uniform scheduler but with per-link powers
/// length^alpha, globally scaled when noise demands it.
pub fn linear_power_schedule(links: &[Link], params: &SinrParams) -> Result<Schedule> {
    let noise_scale = if params.noise() == 0.0 {
        1.0
    } else {
        (2.0 * params.beta() * params.noise()).max(1.0)
    };
    class_schedule(
        links,
        params,
        |_, l| pow_alpha(l.length(), params.alpha()) * noise_scale,
        "linear",
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(alpha: f64) -> SinrParams {
        SinrParams::new(alpha, 1.0, 0.0).unwrap()
    }

    #[test]
    fn mean_power_g_is_half_square() {
        let p = PowerFunction::Mean;
        for x in [1.0, 2.0, 8.0, 100.0] {
            assert_relative_eq!(smooth_g(&p, x, 4.0), x * x / 2.0);
        }
    }

    #[test]
    fn uniform_and_linear_are_not_smooth() {
        assert!(!is_smooth(&PowerFunction::Uniform, 3.0));
        assert!(!is_smooth(&PowerFunction::Linear, 3.0));
        assert_eq!(smooth_g(&PowerFunction::Uniform, 7.0, 3.0), 0.5);
        assert_eq!(smooth_g(&PowerFunction::Linear, 7.0, 3.0), 0.5);
    }

    #[test]
    fn mean_and_intermediate_exponents_are_smooth() {
        assert!(is_smooth(&PowerFunction::Mean, 3.0));
        assert!(is_smooth(&PowerFunction::Mean, 4.0));
        assert!(is_smooth(&PowerFunction::Exponent(3.0), 4.0));
        assert!(!is_smooth(&PowerFunction::Exponent(0.5), 4.0));
    }

    #[test]
    fn g_inverse_examples() {
        let x = g_inverse(&PowerFunction::Mean, 32.0, 4.0, None).unwrap();
        assert_relative_eq!(x, 8.0, max_relative = 1e-10);
        // closed form for exponent powers
        let x = g_inverse(&PowerFunction::Exponent(3.0), 32.0, 4.0, None).unwrap();
        assert_relative_eq!(x, 64.0, max_relative = 1e-12);
        assert!(g_inverse(&PowerFunction::Mean, 0.1, 4.0, None).is_err());
        assert!(g_inverse(&PowerFunction::Uniform, 10.0, 4.0, None).is_err());
    }

    #[test]
    fn g_inverse_round_trips() {
        let p = PowerFunction::Mean;
        for i in 0..40 {
            let y = 0.5 * 10f64.powf(i as f64 * 0.25);
            let x = g_inverse(&p, y, 4.0, None).unwrap();
            assert_relative_eq!(smooth_g(&p, x, 4.0), y, max_relative = 1e-10);
        }
    }

    #[test]
    fn lb_instance_mean_alpha4() {
        let pts = oblivious_lb_instance(4, &PowerFunction::Mean, &params(4.0)).unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        assert_relative_eq!(xs[0], 0.0);
        assert_relative_eq!(xs[1], 2.0);
        assert_relative_eq!(xs[2], 10.0, max_relative = 1e-9);
        assert_relative_eq!(xs[3], 210.0, max_relative = 1e-9);
        let two = oblivious_lb_instance(2, &PowerFunction::Mean, &params(4.0)).unwrap();
        assert_eq!(two.len(), 2);
    }

    #[test]
    fn lb_instance_satisfies_growth_hypothesis() {
        // g(y_t - y_{t-1}) >= (y_{t-1} - y_1)^alpha, with factor-2 slack
        let p = PowerFunction::Mean;
        let prm = params(4.0);
        let pts = oblivious_lb_instance(6, &p, &prm).unwrap();
        let xs: Vec<f64> = pts.iter().map(|q| q.x).collect();
        for t in 2..xs.len() {
            let lhs = smooth_g(&p, xs[t] - xs[t - 1], 4.0);
            let rhs = (xs[t - 1] - xs[0]).powi(4);
            assert!(lhs >= rhs * (1.0 - 1e-9), "t={t}: {lhs} < {rhs}");
        }
    }

    #[test]
    fn lb_instance_overflow_guard() {
        assert!(matches!(
            oblivious_lb_instance(8, &PowerFunction::Exponent(3.0), &params(4.0)),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn chain_links_conflict_pairwise() {
        let p = PowerFunction::Mean;
        let prm = params(4.0);
        let pts = oblivious_lb_instance(6, &p, &prm).unwrap();
        let links: Vec<Link> = (0..5).map(|i| Link::in_set(&pts, i, i + 1).unwrap()).collect();
        for i in 0..links.len() {
            for j in (i + 1)..links.len() {
                assert!(pairwise_oblivious_conflict(&links[i], &links[j], &p, &prm));
            }
        }
    }

    #[test]
    fn far_unit_links_do_not_conflict() {
        let pts = PointSet::from_coords(&[(0.0, 0.0), (1.0, 0.0), (1e4, 0.0), (1e4 + 1.0, 0.0)]).unwrap();
        let a = Link::in_set(&pts, 0, 1).unwrap();
        let b = Link::in_set(&pts, 2, 3).unwrap();
        assert!(!pairwise_oblivious_conflict(&a, &b, &PowerFunction::Mean, &params(4.0)));
    }

    #[test]
    fn length_class_indices() {
        let pts = PointSet::from_coords(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (10.0, 0.0),
            (11.5, 0.0),
            (30.0, 0.0),
            (33.0, 0.0),
            (50.0, 0.0),
            (60.0, 0.0),
        ])
        .unwrap();
        let links: Vec<Link> = (0..4).map(|i| Link::in_set(&pts, 2 * i, 2 * i + 1).unwrap()).collect();
        let lc = length_classes(&links).unwrap();
        let keys: Vec<i64> = lc.classes().keys().copied().collect();
        assert_eq!(keys, vec![0, 1, 2, 4]);
        assert_eq!(lc.diversity(), 4);
    }

    #[test]
    fn equal_lengths_single_class() {
        let pts = PointSet::from_coords(&[(0.0, 0.0), (1.0, 0.0), (5.0, 0.0), (6.0, 0.0)]).unwrap();
        let links = vec![Link::in_set(&pts, 0, 1).unwrap(), Link::in_set(&pts, 2, 3).unwrap()];
        assert_eq!(length_classes(&links).unwrap().diversity(), 1);
    }

    #[test]
    fn diversity_bounded_by_length_ratio() {
        let pts = PointSet::on_line(&[0.0, 1.0, 4.0, 11.0, 30.0, 77.0]).unwrap();
        let links: Vec<Link> = (0..5).map(|i| Link::in_set(&pts, i, i + 1).unwrap()).collect();
        let lc = length_classes(&links).unwrap();
        let max = links.iter().map(|l| l.length()).fold(0.0, f64::max);
        let min = links.iter().map(|l| l.length()).fold(f64::INFINITY, f64::min);
        let delta = max / min;
        assert!(lc.diversity() as f64 <= delta.log2().ceil() + 1.0);
    }

    #[test]
    fn diversity_scale_invariant() {
        let pts = PointSet::on_line(&[0.0, 1.0, 4.0, 11.0, 30.0]).unwrap();
        let scaled = PointSet::on_line(&[0.0, 1e3, 4e3, 11e3, 30e3]).unwrap();
        let links: Vec<Link> = (0..4).map(|i| Link::in_set(&pts, i, i + 1).unwrap()).collect();
        let links_s: Vec<Link> = (0..4).map(|i| Link::in_set(&scaled, i, i + 1).unwrap()).collect();
        assert_eq!(
            length_classes(&links).unwrap().diversity(),
            length_classes(&links_s).unwrap().diversity()
        );
    }

    #[test]
    fn zeta_reference_values() {
        assert_relative_eq!(zeta(2.0), std::f64::consts::PI.powi(2) / 6.0, max_relative = 1e-12);
        assert_relative_eq!(zeta(3.0), 1.2020569031595943, max_relative = 1e-12);
    }

    #[test]
    fn separation_factor_alpha4() {
        let t = separation_factor(&params(4.0));
        assert_relative_eq!(t, 11.8468, max_relative = 1e-4);
    }

    #[test]
    fn uniform_schedule_well_separated_equal_links() {
        let pts = PointSet::from_coords(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (500.0, 0.0),
            (501.0, 0.0),
            (0.0, 500.0),
            (1.0, 500.0),
        ])
        .unwrap();
        let links: Vec<Link> = (0..3).map(|i| Link::in_set(&pts, 2 * i, 2 * i + 1).unwrap()).collect();
        let sched = uniform_power_schedule(&links, &params(4.0)).unwrap();
        assert_eq!(sched.num_slots(), 1);
    }

    #[test]
    fn doubling_chain_gets_one_class_per_link() {
        let mut xs = vec![0.0];
        for i in 0..7 {
            let last = *xs.last().unwrap();
            xs.push(last + 2f64.powi(i));
        }
        let pts = PointSet::on_line(&xs).unwrap();
        let links: Vec<Link> = (0..7).map(|i| Link::in_set(&pts, i, i + 1).unwrap()).collect();
        let lc = length_classes(&links).unwrap();
        assert_eq!(lc.diversity(), 7);
        let sched = uniform_power_schedule(&links, &params(3.0)).unwrap();
        assert!(sched.num_slots() >= 7);
        for slot in &sched.slots {
            assert!(is_feasible(&slot.links, &slot.powers, &params(3.0)).unwrap().feasible);
        }
    }

    #[test]
    fn linear_schedule_mirrors_uniform_structure() {
        let pts = PointSet::from_coords(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (500.0, 0.0),
            (501.0, 0.0),
            (0.0, 500.0),
            (2.5, 500.0),
        ])
        .unwrap();
        let links: Vec<Link> = (0..3).map(|i| Link::in_set(&pts, 2 * i, 2 * i + 1).unwrap()).collect();
        let prm = params(4.0);
        let sched = linear_power_schedule(&links, &prm).unwrap();
        for slot in &sched.slots {
            let report = is_feasible(&slot.links, &slot.powers, &prm).unwrap();
            assert!(report.feasible);
            for l in &slot.links {
                let expected = pow_alpha(l.length(), 4.0);
                assert_relative_eq!(slot.powers.get(l).unwrap(), expected);
            }
        }
    }

    #[test]
    fn noisy_uniform_slots_still_verify() {
        let pts = PointSet::from_coords(&[(0.0, 0.0), (3.0, 0.0), (900.0, 0.0), (903.5, 0.0)]).unwrap();
        let links = vec![Link::in_set(&pts, 0, 1).unwrap(), Link::in_set(&pts, 2, 3).unwrap()];
        let prm = SinrParams::new(3.0, 1.0, 0.25).unwrap();
        let sched = uniform_power_schedule(&links, &prm).unwrap();
        for slot in &sched.slots {
            assert!(is_feasible(&slot.links, &slot.powers, &prm).unwrap().feasible);
        }
    }
}
