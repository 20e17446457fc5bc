//! Structures beyond plain strong connectivity: biconnected and k-edge
//! strongly connected link sets, with graph-theoretic verifiers that are
//! independent of the schedulers.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::geom::{euclidean_mst, mst_avoiding, orient, Direction, Link, PointSet, Tree};
use crate::schedule::{connect, Schedule};
use crate::sinr::SinrParams;

/// MST plus an MST over its degree-1 nodes, both orientations of each,
/// scheduled together. The union survives any single vertex deletion.
pub fn biconnect_structure(points: &PointSet, params: &SinrParams) -> Result<Schedule> {
    if points.len() < 3 {
        return Err(Error::Precondition("biconnectivity needs at least three points".into()));
    }
    let tree = euclidean_mst(points)?;
    let leaves: BTreeSet<usize> = tree.degree_one_nodes().into_iter().collect();
    let leaf_points = points.restrict(&leaves);
    let leaf_tree = euclidean_mst(&leaf_points)?;

    let root = points.ids().next().expect("nonempty");
    let leaf_root = leaf_points.ids().next().expect("a tree has leaves");
    let mut links = Vec::new();
    links.extend(orient(&tree, points, root, Direction::TowardRoot)?);
    links.extend(orient(&tree, points, root, Direction::AwayFromRoot)?);
    links.extend(orient(&leaf_tree, &leaf_points, leaf_root, Direction::TowardRoot)?);
    links.extend(orient(&leaf_tree, &leaf_points, leaf_root, Direction::AwayFromRoot)?);

    let mut sched = connect(&links, params)?;
    sched.source = format!("biconnect over {} points", points.len());
    Ok(sched)
}

/// Edge-disjoint trees T_0..T_k: T_0 is the MST and T_i is a minimum
/// spanning tree avoiding all earlier edges.
pub fn edge_disjoint_trees(points: &PointSet, k: usize) -> Result<Vec<Tree>> {
    if k + 1 >= points.len() {
        return Err(Error::Precondition(format!(
            "cannot build {} edge-disjoint trees on {} points",
            k + 1,
            points.len()
        )));
    }
    let mut forbidden: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut trees = Vec::with_capacity(k + 1);
    for _ in 0..=k {
        let tree = mst_avoiding(points, &forbidden)?;
        for &(a, b) in tree.edges() {
            forbidden.insert((a, b));
        }
        trees.push(tree);
    }
    Ok(trees)
}

/// Schedules T_0..T_k in both orientations, tree by tree. The union stays
/// strongly connected after the removal of any k-1 edges.
pub fn k_edge_structure(points: &PointSet, params: &SinrParams, k: usize) -> Result<Schedule> {
    if k < 1 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let trees = edge_disjoint_trees(points, k)?;
    let root = points.ids().next().expect("nonempty");
    let mut slots = Vec::new();
    for tree in &trees {
        for dir in [Direction::TowardRoot, Direction::AwayFromRoot] {
            let links = orient(tree, points, root, dir)?;
            let sched = connect(&links, params)?;
            slots.extend(sched.slots);
        }
    }
    Ok(Schedule { slots, source: format!("{}-edge structure over {} points", k, points.len()) })
}

fn adjacency(links: &[Link]) -> BTreeMap<usize, Vec<usize>> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for l in links {
        adj.entry(l.sender).or_default().push(l.receiver);
    }
    adj
}

fn reachable(from: usize, adj: &BTreeMap<usize, Vec<usize>>, skip: Option<usize>) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    if Some(from) == skip {
        return seen;
    }
    seen.insert(from);
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if let Some(nbrs) = adj.get(&u) {
            for &v in nbrs {
                if Some(v) != skip && seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
    }
    seen
}

/// Reachability in both directions from the smallest point id.
pub fn verify_strong_connectivity(points: &PointSet, links: &[Link]) -> bool {
    if points.len() <= 1 {
        return true;
    }
    let start = points.ids().next().expect("nonempty");
    let fwd = adjacency(links);
    let rev = adjacency(&links.iter().map(Link::reversed).collect::<Vec<_>>());
    let down = reachable(start, &fwd, None);
    let up = reachable(start, &rev, None);
    points.ids().all(|v| down.contains(&v) && up.contains(&v))
}

/// Strong connectivity after deleting any single vertex.
pub fn verify_bi_connectivity(points: &PointSet, links: &[Link]) -> bool {
    if points.len() <= 2 {
        return true;
    }
    let fwd = adjacency(links);
    let rev = adjacency(&links.iter().map(Link::reversed).collect::<Vec<_>>());
    for removed in points.ids() {
        let start = points.ids().find(|&v| v != removed).expect("n > 1");
        let down = reachable(start, &fwd, Some(removed));
        let up = reachable(start, &rev, Some(removed));
        if !points
            .ids()
            .filter(|&v| v != removed)
            .all(|v| down.contains(&v) && up.contains(&v))
        {
            return false;
        }
    }
    true
}

/// Unit-capacity max flow (BFS augmentation), stopping once `target` is
/// reached. Parallel links add capacity.
fn flow_at_least(links: &[Link], source: usize, sink: usize, target: usize) -> bool {
    if source == sink {
        return true;
    }
    let mut cap: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for l in links {
        *cap.entry((l.sender, l.receiver)).or_insert(0) += 1;
        cap.entry((l.receiver, l.sender)).or_insert(0);
        adj.entry(l.sender).or_default().insert(l.receiver);
        adj.entry(l.receiver).or_default().insert(l.sender);
    }
    let mut flow = 0usize;
    while flow < target {
        // BFS for an augmenting path
        let mut pred: BTreeMap<usize, usize> = BTreeMap::new();
        let mut queue = VecDeque::from([source]);
        let mut found = false;
        'bfs: while let Some(u) = queue.pop_front() {
            if let Some(nbrs) = adj.get(&u) {
                for &v in nbrs {
                    if v != source && !pred.contains_key(&v) && cap[&(u, v)] > 0 {
                        pred.insert(v, u);
                        if v == sink {
                            found = true;
                            break 'bfs;
                        }
                        queue.push_back(v);
                    }
                }
            }
        }
        if !found {
            return false;
        }
        let mut v = sink;
        while v != source {
            let u = pred[&v];
            *cap.get_mut(&(u, v)).unwrap() -= 1;
            *cap.get_mut(&(v, u)).unwrap() += 1;
            v = u;
        }
        flow += 1;
    }
    true
}

/// True iff every directed min edge cut between the smallest id and every
/// other point, in both directions, is at least k.
pub fn verify_k_edge_strong(points: &PointSet, links: &[Link], k: usize) -> bool {
    if points.len() <= 1 {
        return true;
    }
    let start = points.ids().next().expect("nonempty");
    points
        .ids()
        .filter(|&v| v != start)
        .all(|v| flow_at_least(links, start, v, k) && flow_at_least(links, v, start, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params3() -> SinrParams {
        SinrParams::new(3.0, 1.0, 0.0).unwrap()
    }

    fn both_orientations(points: &PointSet, tree: &Tree, root: usize) -> Vec<Link> {
        let mut links = orient(tree, points, root, Direction::TowardRoot).unwrap();
        links.extend(orient(tree, points, root, Direction::AwayFromRoot).unwrap());
        links
    }

    #[test]
    fn strong_connectivity_basics() {
        let pts = PointSet::on_line(&[0.0, 1.0, 3.0]).unwrap();
        let tree = euclidean_mst(&pts).unwrap();
        let toward = orient(&tree, &pts, 0, Direction::TowardRoot).unwrap();
        assert!(!verify_strong_connectivity(&pts, &toward));
        assert!(verify_strong_connectivity(&pts, &both_orientations(&pts, &tree, 0)));
        let single = PointSet::from_coords(&[(0.0, 0.0)]).unwrap();
        assert!(verify_strong_connectivity(&single, &[]));
    }

    #[test]
    fn biconnectivity_verifier_on_cycles_and_paths() {
        // doubly-oriented triangle is biconnected, a doubly-oriented path is not
        let tri = PointSet::from_coords(&[(0.0, 0.0), (1.0, 0.0), (0.5, 1.0)]).unwrap();
        let mut links = Vec::new();
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            links.push(Link::in_set(&tri, a, b).unwrap());
            links.push(Link::in_set(&tri, b, a).unwrap());
        }
        assert!(verify_bi_connectivity(&tri, &links));

        let path = PointSet::on_line(&[0.0, 1.0, 2.0]).unwrap();
        let tree = euclidean_mst(&path).unwrap();
        assert!(!verify_bi_connectivity(&path, &both_orientations(&path, &tree, 0)));
    }

    #[test]
    fn three_collinear_points_biconnect_to_triangle() {
        let pts = PointSet::on_line(&[0.0, 1.0, 2.0]).unwrap();
        let sched = biconnect_structure(&pts, &params3()).unwrap();
        let links = sched.all_links();
        // path edges plus the long chord, both directions each
        assert_eq!(links.len(), 6);
        let keys: BTreeSet<(usize, usize)> = links.iter().map(Link::key).collect();
        assert!(keys.contains(&(0, 2)) && keys.contains(&(2, 0)));
        assert!(verify_bi_connectivity(&pts, &links));
    }

    #[test]
    fn k_edge_verifier_on_cycle() {
        let pts = PointSet::from_coords(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap();
        let mut links = Vec::new();
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            links.push(Link::in_set(&pts, a, b).unwrap());
            links.push(Link::in_set(&pts, b, a).unwrap());
        }
        assert!(verify_k_edge_strong(&pts, &links, 1));
        assert!(!verify_k_edge_strong(&pts, &links, 2));
    }

    #[test]
    fn single_arborescence_is_not_one_edge_strong() {
        let pts = PointSet::on_line(&[0.0, 1.0, 2.5]).unwrap();
        let tree = euclidean_mst(&pts).unwrap();
        let toward = orient(&tree, &pts, 0, Direction::TowardRoot).unwrap();
        assert!(!verify_k_edge_strong(&pts, &toward, 1));
    }

    #[test]
    fn trees_are_edge_disjoint() {
        let pts = PointSet::from_coords(&[
            (0.0, 0.0),
            (3.0, 1.0),
            (1.0, 4.0),
            (6.0, 2.0),
            (4.0, 6.0),
            (8.0, 5.0),
            (2.0, 7.5),
        ])
        .unwrap();
        let trees = edge_disjoint_trees(&pts, 2).unwrap();
        assert_eq!(trees.len(), 3);
        let mut all: Vec<(usize, usize)> = Vec::new();
        for t in &trees {
            all.extend_from_slice(t.edges());
        }
        let unique: BTreeSet<_> = all.iter().copied().collect();
        assert_eq!(unique.len(), all.len());
        assert_eq!(all.len(), 3 * (pts.len() - 1));
    }

    #[test]
    fn k_edge_structure_too_many_trees_rejected() {
        let pts = PointSet::on_line(&[0.0, 1.0, 3.0]).unwrap();
        assert!(k_edge_structure(&pts, &params3(), 2).is_err());
    }
}
