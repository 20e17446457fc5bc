//! Collinear adversarial gadgets built by joining scaled copies, and the
//! exhaustive partition-number oracle. Construction runs on exact rationals
//! so the doubly-geometric scaling never silently overflows; coordinates
//! are converted to doubles only on export.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{FromPrimitive, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::geom::{Link, PointSet};
use crate::schedule::min_partition_blocks;
use crate::sinr::f_value;

/// Points on a line in strictly increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gadget {
    coords: Vec<BigRational>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Gadget {
    pub fn new(coords: Vec<BigRational>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Precondition("a gadget needs at least one point".into()));
        }
        for w in coords.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Precondition("gadget coordinates must be strictly increasing".into()));
            }
        }
        Ok(Gadget { coords })
    }

    pub fn from_integers(xs: &[i64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| rat(x)).collect())
    }

    /// The base gadget {-28, 0, 2, 6, 14}.
    pub fn g1() -> Self {
        Self::from_integers(&[-28, 0, 2, 6, 14]).expect("static coordinates are increasing")
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a gadget always has at least one point
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn leftmost(&self) -> &BigRational {
        &self.coords[0]
    }

    pub fn rightmost(&self) -> &BigRational {
        self.coords.last().expect("nonempty")
    }

    pub fn diameter(&self) -> BigRational {
        self.rightmost() - self.leftmost()
    }

    /// Shortest consecutive gap, i.e. the minimum MST edge length.
    pub fn min_gap(&self) -> Option<BigRational> {
        self.coords.windows(2).map(|w| &w[1] - &w[0]).min()
    }

    /// Joins `other` onto the right end: its leftmost point lands on this
    /// gadget's rightmost point, sharing it, for |F| + |G| - 1 points.
    pub fn join(&self, other: &Gadget) -> Gadget {
        let shift = self.rightmost() - other.leftmost();
        let mut coords = self.coords.clone();
        coords.extend(other.coords.iter().skip(1).map(|x| x + &shift));
        Gadget { coords }
    }

    /// A copy scaled by `b` about the origin.
    pub fn scale(&self, b: &BigRational) -> Result<Gadget> {
        if !b.is_positive() {
            return Err(Error::Precondition("scale factor must be positive".into()));
        }
        Gadget::new(self.coords.iter().map(|x| x * b).collect())
    }

    /// Exports to a point set on the x axis, ids in left-to-right order.
    pub fn to_point_set(&self) -> Result<PointSet> {
        let mut xs = Vec::with_capacity(self.coords.len());
        for c in &self.coords {
            let x = c.to_f64().unwrap_or(f64::INFINITY);
            if !x.is_finite() {
                return Err(Error::TooLarge("gadget coordinate exceeds the double range".into()));
            }
            xs.push(x);
        }
        PointSet::on_line(&xs)
    }

    /// The MST links of a collinear gadget: consecutive gaps, oriented left
    /// to right.
    pub fn mst_links(&self) -> Result<Vec<Link>> {
        let points = self.to_point_set()?;
        (0..points.len() - 1).map(|i| Link::in_set(&points, i, i + 1)).collect()
    }
}

/// Minimum over the MST links of (length / distance-to-leftmost)^alpha,
/// where the distance is taken from the link's far endpoint. Computed on
/// the exact ratio, so it is scale invariant.
pub fn rho(gadget: &Gadget, alpha: f64) -> f64 {
    let x0 = gadget.leftmost();
    gadget
        .coords()
        .windows(2)
        .map(|w| {
            let len = &w[1] - &w[0];
            let reach = &w[1] - x0; // the farther endpoint from the leftmost
            let ratio = (len / reach).to_f64().expect("ratio is in (0, 1]");
            ratio.powf(alpha)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Construction knobs for the recursive gadget family.
#[derive(Debug, Clone, Copy)]
pub struct GadgetConfig {
    pub alpha: f64,
    /// Admission threshold the partitions are judged against.
    pub gamma: f64,
    /// Copies of the previous level per stage; None picks the smallest
    /// count that still forces a fresh partition class on the lead link.
    pub copies: Option<usize>,
}

impl GadgetConfig {
    pub fn new(alpha: f64, gamma: f64) -> Self {
        GadgetConfig { alpha, gamma, copies: None }
    }
}

const MAX_COPIES: usize = 512;

/// Copies needed so that the lead link's admission budget cannot touch all
/// of them: more than gamma * 2^(alpha+1) / rho, and at least 2.
fn default_copies(gamma: f64, alpha: f64, rho_prev: f64) -> usize {
    let bound = gamma * 2f64.powf(alpha + 1.0) / rho_prev;
    (bound.floor() as usize + 1).max(2)
}

/// The recursive family: level 1 is the base gadget; level t joins scaled
/// copies of level t-1 (each copy's shortest link twice the diameter of
/// everything before it) and prepends a lead point four diameters out.
pub fn gadget_gt(t: usize, config: &GadgetConfig) -> Result<Gadget> {
    if t < 1 {
        return Err(Error::Precondition("gadget level must be >= 1".into()));
    }
    if t > 3 {
        return Err(Error::TooLarge("gadget levels beyond 3 overflow any fixed-width export".into()));
    }
    if t == 1 {
        return Ok(Gadget::g1());
    }
    let prev = gadget_gt(t - 1, config)?;
    let rho_prev = rho(&prev, config.alpha);
    let copies = config.copies.unwrap_or_else(|| default_copies(config.gamma, config.alpha, rho_prev));
    if copies > MAX_COPIES {
        return Err(Error::TooLarge(format!(
            "level {t} would need {copies} copies; override the copy count to stay tractable"
        )));
    }
    let min_gap = prev.min_gap().expect("base gadget has gaps");
    let mut joined = prev.clone();
    for _ in 1..copies {
        // scale so the copy's shortest link is twice the current diameter
        let h = rat(2) * joined.diameter() / &min_gap;
        joined = joined.join(&prev.scale(&h)?);
    }
    // translate to start at 0, then prepend the lead point at -4 * diameter
    let shift = -joined.leftmost().clone();
    let translated: Vec<BigRational> = joined.coords().iter().map(|x| x + &shift).collect();
    let lead = -(rat(4) * (translated.last().expect("nonempty")));
    let mut coords = vec![lead];
    coords.extend(translated);
    Gadget::new(coords)
}

/// Minimum number of parts so that within every part, each link's f-sum
/// from the no-longer links of the part stays at or below `admission`.
/// Exhaustive over set partitions; limited to 12 links.
pub fn partition_number_links(links: &[Link], admission: f64, alpha: f64) -> Result<usize> {
    let n = links.len();
    if n > 12 {
        return Err(Error::TooLarge(format!("partition oracle handles at most 12 links, got {n}")));
    }
    if n == 0 {
        return Ok(0);
    }
    let mut f = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                f[i][j] = f_value(&links[i], &links[j], alpha);
            }
        }
    }
    let admissible = |mask: u32| -> bool {
        for j in 0..n {
            if mask & (1 << j) == 0 {
                continue;
            }
            let mut sum = 0.0;
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    sum += f[i][j];
                }
            }
            if sum > admission {
                return false;
            }
        }
        true
    };
    min_partition_blocks(n, admissible)
        .ok_or_else(|| Error::Precondition("some singleton link violates the condition".into()))
}

/// Partition number of a gadget's MST in left-to-right orientation.
pub fn partition_number(gadget: &Gadget, admission: f64, alpha: f64) -> Result<usize> {
    partition_number_links(&gadget.mst_links()?, admission, alpha)
}
