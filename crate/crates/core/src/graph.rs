//! Reachability DAG for a perimeter-constrained vehicle and longest paths through it.
//!
//! Vertex 0 is always the vehicle (the source, at radius ρ); vertex `i + 1` is
//! `items[i]`. An edge `j → k` exists when `r_k > r_j` and
//! `r_k − r_j ≥ v·ρ·Δ(θ_j, θ_k)`: the vehicle, having met `j` on the perimeter,
//! can slide along the perimeter in time to meet `k` there too.
//!
//! Among paths visiting the most targets, the one whose `(radius, id)` sequence
//! is lexicographically smallest wins. Every routine here uses that rule, so the
//! DP, the windowed DP and the brute-force oracle agree exactly.

use std::cmp::Ordering;
use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::angular_distance;

pub const BRUTEFORCE_MAX_VERTICES: usize = 15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("exhaustive search supports at most {max} vertices, got {got}")]
    TooLarge { got: usize, max: usize },
}

/// Input item: a target's (virtual) radius and angle. Unarrived targets use
/// `D + v·(t_arrival − now)`, which may exceed `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DagItem {
    pub id: usize,
    pub radius: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    /// `None` for the source.
    pub id: Option<usize>,
    pub radius: f64,
    pub theta: f64,
}

impl Vertex {
    fn key_cmp(&self, other: &Vertex) -> Ordering {
        self.radius
            .total_cmp(&other.radius)
            .then(self.id.cmp(&other.id))
    }
}

fn has_edge(from: &Vertex, to: &Vertex, v: f64, rho: f64) -> bool {
    to.radius > from.radius && to.radius - from.radius >= v * rho * angular_distance(from.theta, to.theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityDag {
    vertices: Vec<Vertex>,
    /// Successor lists, each sorted by `(radius, id)`.
    succ: Vec<Vec<usize>>,
}

impl ReachabilityDag {
    pub fn source() -> usize {
        0
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn successors(&self, vertex: usize) -> &[usize] {
        &self.succ[vertex]
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].contains(&to)
    }

    /// Item ids along a vertex path, dropping the source.
    pub fn path_ids(&self, path: &[usize]) -> Vec<usize> {
        path.iter().filter_map(|&i| self.vertices[i].id).collect()
    }

    fn sorted_items(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (1..self.vertices.len()).collect();
        order.sort_by(|&a, &b| self.vertices[a].key_cmp(&self.vertices[b]));
        order
    }
}

/// Builds the graph over `items` with the vehicle at `(ρ, φ)`.
pub fn build_reachability_graph(vehicle_angle: f64, items: &[DagItem], v: f64, rho: f64) -> ReachabilityDag {
    let mut vertices = Vec::with_capacity(items.len() + 1);
    vertices.push(Vertex {
        id: None,
        radius: rho,
        theta: vehicle_angle,
    });
    vertices.extend(items.iter().map(|it| Vertex {
        id: Some(it.id),
        radius: it.radius,
        theta: it.theta,
    }));

    let mut order: Vec<usize> = (1..vertices.len()).collect();
    order.sort_by(|&a, &b| vertices[a].key_cmp(&vertices[b]));

    let mut succ = vec![Vec::new(); vertices.len()];
    for j in 0..vertices.len() {
        succ[j] = order
            .iter()
            .copied()
            .filter(|&k| has_edge(&vertices[j], &vertices[k], v, rho))
            .collect();
    }
    ReachabilityDag { vertices, succ }
}

/// Longest path from the source by DP over the reverse topological order.
/// `O(V + E)` after sorting.
pub fn longest_path(dag: &ReachabilityDag) -> Vec<usize> {
    let n = dag.vertices.len();
    let mut best = vec![0usize; n];
    let mut next: Vec<Option<usize>> = vec![None; n];

    let pick = |list: &[usize], best: &[usize]| -> (usize, Option<usize>) {
        // successor lists are key-sorted, so the first maximum is the smallest key
        let mut out = (0, None);
        for &k in list {
            if best[k] > out.0 {
                out = (best[k], Some(k));
            }
        }
        out
    };

    for &i in dag.sorted_items().iter().rev() {
        let (b, nx) = pick(&dag.succ[i], &best);
        best[i] = b + 1;
        next[i] = nx;
    }
    let (_, first) = pick(&dag.succ[0], &best);

    let mut path = vec![0];
    let mut cur = first;
    while let Some(i) = cur {
        path.push(i);
        cur = next[i];
    }
    path
}

/// Exhaustive enumeration of all paths from the source. Test oracle.
pub fn longest_path_bruteforce(dag: &ReachabilityDag) -> Result<Vec<usize>, GraphError> {
    if dag.vertices.len() > BRUTEFORCE_MAX_VERTICES {
        return Err(GraphError::TooLarge {
            got: dag.vertices.len(),
            max: BRUTEFORCE_MAX_VERTICES,
        });
    }

    fn better(dag: &ReachabilityDag, a: &[usize], b: &[usize]) -> bool {
        if a.len() != b.len() {
            return a.len() > b.len();
        }
        for (&x, &y) in a.iter().zip(b) {
            match dag.vertices[x].key_cmp(&dag.vertices[y]) {
                Ordering::Less => return true,
                Ordering::Greater => return false,
                Ordering::Equal => {}
            }
        }
        false
    }

    fn dfs(dag: &ReachabilityDag, path: &mut Vec<usize>, best: &mut Vec<usize>) {
        if better(dag, path, best) {
            best.clone_from(path);
        }
        let last = *path.last().expect("path starts at the source");
        for &k in &dag.succ[last] {
            path.push(k);
            dfs(dag, path, best);
            path.pop();
        }
    }

    let mut best = vec![0];
    dfs(dag, &mut vec![0], &mut best);
    Ok(best)
}

/// Same result as `longest_path(&build_reachability_graph(..))` without
/// materializing the edges.
///
/// Any pair whose radii differ by at least `v·ρ·π` is always connected, so only
/// a window of nearby radii needs the angular test; everything beyond the
/// window is covered by a suffix maximum. Cost is `O(n·w)` with `w` the
/// window population, which keeps whole-horizon traces tractable.
pub fn longest_reachable_chain(vehicle_angle: f64, items: &[DagItem], v: f64, rho: f64) -> Vec<usize> {
    let n = items.len();
    let vertex = |i: usize| Vertex {
        id: Some(items[i].id),
        radius: items[i].radius,
        theta: items[i].theta,
    };
    let source = Vertex {
        id: None,
        radius: rho,
        theta: vehicle_angle,
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vertex(a).key_cmp(&vertex(b)));
    let sorted: Vec<Vertex> = order.iter().map(|&i| vertex(i)).collect();
    let window = v * rho * PI;

    // first sorted position q >= from with r_q > r and r_q − r >= window
    let always_connected_from = |r: f64, from: usize| -> usize {
        from + sorted[from..].partition_point(|w| !(w.radius > r && w.radius - r >= window))
    };

    let mut best = vec![0usize; n];
    let mut next: Vec<Option<usize>> = vec![None; n];
    // suffix_max[p] = (best, smallest position attaining it) over positions >= p
    let mut suffix_max: Vec<(usize, Option<usize>)> = vec![(0, None); n + 1];

    let choose = |from: &Vertex, start: usize, best: &[usize], suffix_max: &[(usize, Option<usize>)]| {
        let far = always_connected_from(from.radius, start);
        let mut out: (usize, Option<usize>) = (0, None);
        for (q, w) in sorted.iter().enumerate().take(far).skip(start) {
            if best[q] > out.0 && has_edge(from, w, v, rho) {
                out = (best[q], Some(q));
            }
        }
        let tail = suffix_max[far];
        if tail.0 > out.0 {
            out = tail;
        }
        out
    };

    for p in (0..n).rev() {
        let (b, nx) = choose(&sorted[p], p + 1, &best, &suffix_max);
        best[p] = b + 1;
        next[p] = nx;
        suffix_max[p] = if best[p] >= suffix_max[p + 1].0 {
            (best[p], Some(p))
        } else {
            suffix_max[p + 1]
        };
    }

    let start = sorted.partition_point(|w| w.radius < rho);
    let (_, first) = choose(&source, start, &best, &suffix_max);

    let mut path = vec![0];
    let mut cur = first;
    while let Some(p) = cur {
        path.push(order[p] + 1);
        cur = next[p];
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rng_from_seed;
    use rand::Rng;
    use std::f64::consts::TAU;

    const V: f64 = 0.5;
    const RHO: f64 = 3.0;

    fn item(id: usize, radius: f64, theta: f64) -> DagItem {
        DagItem { id, radius, theta }
    }

    fn random_items(rng: &mut impl Rng, n: usize) -> Vec<DagItem> {
        (0..n)
            .map(|id| item(id, rng.gen_range(RHO..20.0), rng.gen_range(0.0..TAU)))
            .collect()
    }

    #[test]
    fn empty_graph_is_just_the_source() {
        let dag = build_reachability_graph(0.0, &[], V, RHO);
        assert_eq!(longest_path(&dag), vec![0]);
        assert_eq!(longest_path_bruteforce(&dag).unwrap(), vec![0]);
        assert_eq!(longest_reachable_chain(0.0, &[], V, RHO), vec![0]);
    }

    #[test]
    fn co_angular_chain_is_fully_visited() {
        let items: Vec<_> = (0..6).map(|i| item(i, 4.0 + 2.0 * (5 - i) as f64, 1.0)).collect();
        let dag = build_reachability_graph(1.0, &items, V, RHO);
        let path = longest_path(&dag);
        assert_eq!(path.len(), 7);
        assert_eq!(dag.path_ids(&path), vec![5, 4, 3, 2, 1, 0]);
        assert_eq!(path, longest_path_bruteforce(&dag).unwrap());
    }

    #[test]
    fn boundary_edge_is_present() {
        let a = item(0, 5.0, 0.0);
        let b = item(1, 5.0 + V * PI * RHO, PI);
        let dag = build_reachability_graph(0.0, &[a, b], V, RHO);
        assert!(dag.has_edge(1, 2));
        assert!(!dag.has_edge(2, 1));
    }

    #[test]
    fn equal_radii_get_no_edge() {
        let dag = build_reachability_graph(0.0, &[item(0, 6.0, 1.0), item(1, 6.0, 1.0)], V, RHO);
        assert!(!dag.has_edge(1, 2) && !dag.has_edge(2, 1));
    }

    #[test]
    fn edges_match_direct_condition() {
        let mut rng = rng_from_seed(11);
        let items = random_items(&mut rng, 8);
        let phi = 2.0;
        let dag = build_reachability_graph(phi, &items, V, RHO);
        for (k, it) in items.iter().enumerate() {
            let direct = it.radius > RHO && it.radius - RHO >= V * RHO * angular_distance(phi, it.theta);
            assert_eq!(dag.has_edge(0, k + 1), direct);
            for (j, jt) in items.iter().enumerate() {
                let direct = it.radius > jt.radius
                    && (it.radius - (jt.radius - RHO)) - RHO >= V * angular_distance(it.theta, jt.theta) * RHO;
                assert_eq!(dag.has_edge(j + 1, k + 1), direct, "pair {j}->{k}");
            }
        }
    }

    #[test]
    fn tie_break_prefers_smaller_keys() {
        // every maximal path has two targets; [0, 2] has the smallest keys
        let items = [
            item(0, 3.5, 0.0),
            item(1, 3.6, PI),
            item(2, 10.0, 0.0),
            item(3, 10.1, PI),
        ];
        let dag = build_reachability_graph(0.0, &items, 0.05, RHO);
        let brute = longest_path_bruteforce(&dag).unwrap();
        assert_eq!(longest_path(&dag), brute);
        assert_eq!(dag.path_ids(&brute), vec![0, 2]);
    }

    #[test]
    fn bruteforce_guards_size() {
        let mut rng = rng_from_seed(3);
        let dag = build_reachability_graph(0.0, &random_items(&mut rng, 15), V, RHO);
        assert!(matches!(longest_path_bruteforce(&dag), Err(GraphError::TooLarge { .. })));
    }

    #[test]
    fn dp_matches_bruteforce_on_random_instances() {
        let mut rng = rng_from_seed(5);
        for _ in 0..300 {
            let n = rng.gen_range(0..=9);
            let v = rng.gen_range(0.0..0.95);
            let items = random_items(&mut rng, n);
            let phi = rng.gen_range(0.0..TAU);
            let dag = build_reachability_graph(phi, &items, v, RHO);
            assert_eq!(longest_path(&dag), longest_path_bruteforce(&dag).unwrap());
        }
    }

    #[test]
    fn windowed_dp_matches_explicit_dp() {
        let mut rng = rng_from_seed(9);
        for _ in 0..300 {
            let n = rng.gen_range(0..60);
            let v = rng.gen_range(0.0..0.95);
            let mut items = random_items(&mut rng, n);
            // a few exact radius ties and virtual radii beyond D
            if n > 3 {
                items[1].radius = items[0].radius;
                items[2].radius += 30.0;
            }
            let phi = rng.gen_range(0.0..TAU);
            let dag = build_reachability_graph(phi, &items, v, RHO);
            assert_eq!(longest_path(&dag), longest_reachable_chain(phi, &items, v, RHO));
        }
    }
}
