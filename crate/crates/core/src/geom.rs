//! Planar points, directed links, Euclidean minimum spanning trees, tree
//! orientation and the constructive annulus covering.
//!
//! All operations are pure functions of their inputs. Distance comparisons
//! use plain `f64` arithmetic; determinism comes from fixed computation
//! order (points sorted by id, edges sorted by weight with an id tie-break).

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// A planar point with a stable integer identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(id: usize, x: f64, y: f64) -> Self {
        Point { id, x, y }
    }
}

/// Euclidean distance between two points.
pub fn distance(p: &Point, q: &Point) -> f64 {
    ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt()
}

/// A set of points with unique ids, kept sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    /// Builds a point set; ids must be unique and coordinates finite.
    pub fn new(mut points: Vec<Point>) -> Result<Self> {
        points.sort_by_key(|p| p.id);
        for w in points.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::InvalidParams(format!("duplicate point id {}", w[0].id)));
            }
        }
        for p in &points {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::InvalidParams(format!("non-finite coordinate on point {}", p.id)));
            }
        }
        Ok(PointSet { points })
    }

    /// Convenience constructor: ids 0..n assigned in order.
    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            coords
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| Point::new(i, x, y))
                .collect(),
        )
    }

    /// Collinear set placed on the x axis, ids in coordinate order.
    pub fn on_line(xs: &[f64]) -> Result<Self> {
        Self::from_coords(&xs.iter().map(|&x| (x, 0.0)).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Point> {
        self.points
            .binary_search_by_key(&id, |p| p.id)
            .ok()
            .map(|i| &self.points[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Point> {
        self.points.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.points.iter().map(|p| p.id)
    }

    /// Subset restricted to the given ids.
    pub fn restrict(&self, keep: &BTreeSet<usize>) -> PointSet {
        PointSet {
            points: self.points.iter().filter(|p| keep.contains(&p.id)).copied().collect(),
        }
    }
}

/// A directed sender-to-receiver link. Endpoint coordinates are embedded so
/// that interference computations do not need the originating point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub sender: usize,
    pub receiver: usize,
    sx: f64,
    sy: f64,
    rx: f64,
    ry: f64,
    length: f64,
}

impl Link {
    /// Link from `sender` to `receiver`. Duplicate coordinates are allowed
    /// (zero-length link) but the endpoints must be distinct points.
    pub fn between(sender: &Point, receiver: &Point) -> Result<Self> {
        if sender.id == receiver.id {
            return Err(Error::InvalidParams(format!(
                "link endpoints must be distinct points (got id {} twice)",
                sender.id
            )));
        }
        Ok(Link {
            sender: sender.id,
            receiver: receiver.id,
            sx: sender.x,
            sy: sender.y,
            rx: receiver.x,
            ry: receiver.y,
            length: distance(sender, receiver),
        })
    }

    /// Looks both endpoints up in `points`.
    pub fn in_set(points: &PointSet, sender: usize, receiver: usize) -> Result<Self> {
        let s = points
            .get(sender)
            .ok_or_else(|| Error::Precondition(format!("point {sender} not in set")))?;
        let r = points
            .get(receiver)
            .ok_or_else(|| Error::Precondition(format!("point {receiver} not in set")))?;
        Link::between(s, r)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn sender_pos(&self) -> (f64, f64) {
        (self.sx, self.sy)
    }

    pub fn receiver_pos(&self) -> (f64, f64) {
        (self.rx, self.ry)
    }

    /// The antiparallel twin of this link.
    pub fn reversed(&self) -> Link {
        Link {
            sender: self.receiver,
            receiver: self.sender,
            sx: self.rx,
            sy: self.ry,
            rx: self.sx,
            ry: self.sy,
            length: self.length,
        }
    }

    /// Identity key: a link is named by its directed endpoint pair.
    pub fn key(&self) -> (usize, usize) {
        (self.sender, self.receiver)
    }

    pub fn shares_node_with(&self, other: &Link) -> bool {
        self.sender == other.sender
            || self.sender == other.receiver
            || self.receiver == other.sender
            || self.receiver == other.receiver
    }
}

fn dist2(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
}

/// Asymmetric link distance: from the sender of `l` to the receiver of `lp`.
pub fn link_distance(l: &Link, lp: &Link) -> f64 {
    dist2(l.sx, l.sy, lp.rx, lp.ry)
}

/// Symmetric link distance, the minimum of the two asymmetric distances.
pub fn symmetric_link_distance(l: &Link, lp: &Link) -> f64 {
    link_distance(l, lp).min(link_distance(lp, l))
}

/// Global ordering of links: by length, ties broken by (sender, receiver).
/// Every length-ordered traversal in the crate uses this single order.
pub fn cmp_links(a: &Link, b: &Link) -> Ordering {
    a.length
        .partial_cmp(&b.length)
        .expect("link lengths are finite")
        .then(a.sender.cmp(&b.sender))
        .then(a.receiver.cmp(&b.receiver))
}

/// An undirected spanning tree, stored as normalized (min, max) id pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    edges: Vec<(usize, usize)>,
}

impl Tree {
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn total_length(&self, points: &PointSet) -> f64 {
        self.edges
            .iter()
            .map(|&(a, b)| distance(points.get(a).unwrap(), points.get(b).unwrap()))
            .sum()
    }

    /// Ids that appear in exactly one edge.
    pub fn degree_one_nodes(&self) -> Vec<usize> {
        let mut deg: BTreeMap<usize, usize> = BTreeMap::new();
        for &(a, b) in &self.edges {
            *deg.entry(a).or_insert(0) += 1;
            *deg.entry(b).or_insert(0) += 1;
        }
        deg.into_iter().filter(|&(_, d)| d == 1).map(|(id, _)| id).collect()
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        let e = (a.min(b), a.max(b));
        self.edges.contains(&e)
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Kruskal over the complete graph with `forbidden` edges removed.
/// Weight ties prefer the lexicographically smaller (min id, max id) pair,
/// which makes the result deterministic.
pub(crate) fn mst_avoiding(points: &PointSet, forbidden: &BTreeSet<(usize, usize)>) -> Result<Tree> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Precondition("minimum spanning tree needs at least one point".into()));
    }
    let pts: Vec<&Point> = points.iter().collect();
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (pts[i].id, pts[j].id);
            if forbidden.contains(&(a.min(b), a.max(b))) {
                continue;
            }
            edges.push((distance(pts[i], pts[j]), a.min(b), a.max(b)));
        }
    }
    edges.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .expect("finite distances")
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });

    let index: BTreeMap<usize, usize> = points.ids().enumerate().map(|(i, id)| (id, i)).collect();
    let mut dsu = DisjointSet::new(n);
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    for (_, a, b) in edges {
        if dsu.union(index[&a], index[&b]) {
            tree.push((a, b));
            if tree.len() == n - 1 {
                break;
            }
        }
    }
    if tree.len() + 1 != n {
        return Err(Error::Precondition(
            "point set cannot be spanned with the allowed edges".into(),
        ));
    }
    tree.sort_unstable();
    Ok(Tree { edges: tree })
}

/// Euclidean minimum spanning tree of the point set (O(n^2) Kruskal).
pub fn euclidean_mst(points: &PointSet) -> Result<Tree> {
    mst_avoiding(points, &BTreeSet::new())
}

/// Orientation of a rooted tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Every edge points toward the root (in-arborescence).
    TowardRoot,
    /// Every edge points away from the root (out-arborescence).
    AwayFromRoot,
}

/// Directs every tree edge relative to `root`.
pub fn orient(tree: &Tree, points: &PointSet, root: usize, direction: Direction) -> Result<Vec<Link>> {
    if points.get(root).is_none() {
        return Err(Error::Precondition(format!("root {root} not in point set")));
    }
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in tree.edges() {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut links = Vec::with_capacity(tree.edges().len());
    let mut visited = BTreeSet::new();
    visited.insert(root);
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        if let Some(nbrs) = adj.get(&u) {
            for &v in nbrs {
                if visited.insert(v) {
                    let link = match direction {
                        Direction::TowardRoot => Link::in_set(points, v, u)?,
                        Direction::AwayFromRoot => Link::in_set(points, u, v)?,
                    };
                    links.push(link);
                    queue.push_back(v);
                }
            }
        }
    }
    if links.len() != tree.edges().len() {
        return Err(Error::Precondition("tree is not connected over the point set".into()));
    }
    links.sort_by(cmp_links);
    Ok(links)
}

/// One outgoing link per point to its nearest other point; mutual pairs are
/// deduplicated keeping the link whose sender has the smaller id. Nearest
/// ties also go to the smaller id.
pub fn nearest_neighbor_forest(points: &PointSet) -> Result<Vec<Link>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Precondition("nearest-neighbor forest needs at least two points".into()));
    }
    let pts: Vec<&Point> = points.iter().collect();
    let mut nearest: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, p) in pts.iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        for (j, q) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = distance(p, q);
            let better = match best {
                None => true,
                Some((bd, bid)) => d < bd || (d == bd && q.id < bid),
            };
            if better {
                best = Some((d, q.id));
            }
        }
        nearest.insert(p.id, best.unwrap().1);
    }
    let mut links = Vec::new();
    for (&p, &q) in &nearest {
        if nearest.get(&q) == Some(&p) && q < p {
            continue; // mutual pair: the smaller sender keeps its link
        }
        links.push(Link::in_set(points, p, q)?);
    }
    links.sort_by(cmp_links);
    Ok(links)
}

/// Centers of the unit discs placed on the mid-circle of the annulus between
/// radii `t` and `t+1`: ceil(4*pi*(t+0.5)) equidistant points at radius t+0.5.
/// Consecutive centers are at most 0.5 apart, and every annulus point is
/// within 1 of some center.
pub fn annulus_unit_centers(t: u32) -> Vec<(f64, f64)> {
    let tm = t as f64 + 0.5;
    let m = (4.0 * std::f64::consts::PI * tm).ceil() as usize;
    (0..m)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64) / (m as f64);
            (tm * theta.cos(), tm * theta.sin())
        })
        .collect()
}

/// Covers the disc of radius `r` at `center` with discs of radius at most
/// `c1` by repeated halving: a radius-r disc is covered by seven radius-r/2
/// discs (its center plus six petals at distance sqrt(3)/2 * r).
pub fn cover_disc(center: (f64, f64), r: f64, c1: f64) -> Vec<(f64, f64)> {
    if r <= c1 {
        return vec![center];
    }
    let half = r / 2.0;
    let petal = 3f64.sqrt() / 2.0 * r;
    let mut out = cover_disc(center, half, c1);
    for k in 0..6 {
        let theta = std::f64::consts::PI / 3.0 * k as f64;
        let sub = (center.0 + petal * theta.cos(), center.1 + petal * theta.sin());
        out.extend(cover_disc(sub, half, c1));
    }
    out
}

/// Constructive cover of the annulus between radii `t` and `t+1` around the
/// origin by discs of radius `c1`: unit discs on the mid-circle, each
/// subdivided by halving. The center count is O(t) for fixed `c1`.
pub fn annulus_cover(t: u32, c1: f64) -> Result<Vec<(f64, f64)>> {
    if t < 1 {
        return Err(Error::Precondition("annulus index t must be >= 1".into()));
    }
    if !(c1 > 0.0) {
        return Err(Error::Precondition("covering radius c1 must be positive".into()));
    }
    let mut centers = Vec::new();
    for c in annulus_unit_centers(t) {
        centers.extend(cover_disc(c, 1.0, c1));
    }
    Ok(centers)
}
