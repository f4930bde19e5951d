//! Open Hamiltonian paths with a fixed start point.
//!
//! [`emhp_heuristic`] builds a nearest-neighbor path, improves it with 2-opt
//! moves that keep the start in place, and returns whichever is shorter: that
//! path or the strip sweep of [`strip_path`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Point;

/// Up to this many points the 2-opt scan tries every pair; above it only pairs
/// joined through a short candidate edge are tried.
pub const FULL_TWO_OPT_LIMIT: usize = 400;
pub const CANDIDATE_NEIGHBORS: usize = 10;
/// Move evaluations allowed per point squared.
pub const MOVE_BUDGET_FACTOR: u64 = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct TourPlan {
    /// Permutation of the input indices, in visiting order.
    pub order: Vec<usize>,
    /// Open-path length from the start through every point.
    pub length: f64,
}

impl TourPlan {
    fn empty() -> Self {
        Self {
            order: Vec::new(),
            length: 0.0,
        }
    }

    fn from_order(start: Point, points: &[Point], order: Vec<usize>) -> Self {
        let length = path_length(start, points, &order);
        Self { order, length }
    }
}

/// Axis-aligned square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub min: Point,
    pub side: f64,
}

impl Square {
    pub fn centered(side: f64) -> Self {
        Self {
            min: Point::new(-side / 2.0, -side / 2.0),
            side,
        }
    }

    /// Smallest axis-aligned square anchored at the lower-left corner of the
    /// bounding box. `None` for an empty set.
    pub fn bounding(points: &[Point]) -> Option<Self> {
        let first = points.first()?;
        let (mut lo, mut hi) = (*first, *first);
        for p in points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let side = (hi.x - lo.x).max(hi.y - lo.y);
        Some(Self {
            min: lo,
            side: if side > 0.0 { side } else { 1.0 },
        })
    }
}

pub fn path_length(start: Point, points: &[Point], order: &[usize]) -> f64 {
    let mut prev = start;
    let mut total = 0.0;
    for &i in order {
        total += prev.distance(points[i]);
        prev = points[i];
    }
    total
}

pub fn emhp_heuristic(start: Point, points: &[Point]) -> TourPlan {
    match points.len() {
        0 => return TourPlan::empty(),
        1 => return TourPlan::from_order(start, points, vec![0]),
        _ => {}
    }
    let mut local = nearest_neighbor_order(start, points);
    two_opt(start, points, &mut local);
    let local = TourPlan::from_order(start, points, local);

    let square = Square::bounding(points).expect("non-empty");
    let strips = strip_path(start, points, square);
    if strips.length < local.length {
        strips
    } else {
        local
    }
}

/// Greedy path: always go to the closest unvisited point. Ties go to the lower index.
pub fn nearest_neighbor_order(start: Point, points: &[Point]) -> Vec<usize> {
    let mut grid = Grid::new(points);
    let mut order = Vec::with_capacity(points.len());
    let mut cur = start;
    while let Some(next) = grid.take_nearest(cur, points) {
        cur = points[next];
        order.push(next);
    }
    order
}

/// Bucket grid over the unvisited points, about two points per cell.
struct Grid {
    min: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
    remaining: usize,
}

impl Grid {
    fn new(points: &[Point]) -> Self {
        let n = points.len();
        let square = Square::bounding(points).unwrap_or(Square {
            min: Point::ORIGIN,
            side: 1.0,
        });
        let per_side = ((n as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let cell = square.side / per_side as f64;
        let mut grid = Self {
            min: square.min,
            cell,
            nx: per_side,
            ny: per_side,
            cells: vec![Vec::new(); per_side * per_side],
            remaining: n,
        };
        for (i, &p) in points.iter().enumerate() {
            let (cx, cy) = grid.cell_of(p);
            grid.cells[cy * grid.nx + cx].push(i);
        }
        grid
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let clamp = |v: f64, max: usize| (v.floor().max(0.0) as usize).min(max - 1);
        (
            clamp((p.x - self.min.x) / self.cell, self.nx),
            clamp((p.y - self.min.y) / self.cell, self.ny),
        )
    }

    /// Removes and returns the unvisited point closest to `from`.
    fn take_nearest(&mut self, from: Point, points: &[Point]) -> Option<usize> {
        if self.remaining == 0 {
            return None;
        }
        let (cx, cy) = self.cell_of(from);
        let (cx, cy) = (cx as isize, cy as isize);
        let mut best: Option<(f64, usize, usize)> = None; // (distance, point, cell)
        for ring in 0isize.. {
            let (x0, x1, y0, y1) = (cx - ring, cx + ring, cy - ring, cy + ring);
            if x0 < 0 && y0 < 0 && x1 >= self.nx as isize && y1 >= self.ny as isize {
                break;
            }
            for y in y0.max(0)..=y1.min(self.ny as isize - 1) {
                let on_edge = y == y0 || y == y1;
                let step = if on_edge { 1 } else { (x1 - x0).max(1) };
                let mut x = x0;
                while x <= x1 {
                    if x >= 0 && x < self.nx as isize {
                        let c = y as usize * self.nx + x as usize;
                        for &i in &self.cells[c] {
                            let d = from.distance(points[i]);
                            let better = match best {
                                None => true,
                                Some((bd, bi, _)) => d < bd || (d == bd && i < bi),
                            };
                            if better {
                                best = Some((d, i, c));
                            }
                        }
                    }
                    x += step;
                }
            }
            // anything in a farther ring is at least `ring` cells away
            if let Some((d, _, _)) = best {
                if d < ring as f64 * self.cell {
                    break;
                }
            }
        }
        let (_, i, c) = best?;
        let slot = self.cells[c].iter().position(|&j| j == i).expect("point in its cell");
        self.cells[c].swap_remove(slot);
        self.remaining -= 1;
        Some(i)
    }
}

/// First-improvement 2-opt on an open path whose first node (the start) is fixed.
/// Returns the number of move evaluations spent.
pub fn two_opt(start: Point, points: &[Point], order: &mut [usize]) -> u64 {
    let n = order.len();
    if n < 2 {
        return 0;
    }
    // node 0 is the start, node i + 1 is points[i]
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(start);
    nodes.extend_from_slice(points);
    let mut tour: Vec<usize> = std::iter::once(0).chain(order.iter().map(|&i| i + 1)).collect();
    let budget = MOVE_BUDGET_FACTOR * (n as u64) * (n as u64);

    let spent = if n <= FULL_TWO_OPT_LIMIT {
        two_opt_full(&nodes, &mut tour, budget)
    } else {
        two_opt_candidates(&nodes, &mut tour, budget)
    };
    for (slot, &node) in order.iter_mut().zip(&tour[1..]) {
        *slot = node - 1;
    }
    spent
}

/// Length change of reversing `tour[i+1..=j]`; edges past the path end cost nothing.
fn move_delta(nodes: &[Point], tour: &[usize], i: usize, j: usize) -> f64 {
    let d = |a: usize, b: usize| nodes[tour[a]].distance(nodes[tour[b]]);
    let last = tour.len() - 1;
    let mut delta = d(i, j) - d(i, i + 1);
    if j < last {
        delta += d(i + 1, j + 1) - d(j, j + 1);
    }
    delta
}

const IMPROVEMENT_EPS: f64 = 1e-12;

fn two_opt_full(nodes: &[Point], tour: &mut [usize], budget: u64) -> u64 {
    let last = tour.len() - 1;
    let mut spent = 0u64;
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..last.saturating_sub(1) {
            for j in i + 2..=last {
                spent += 1;
                if spent > budget {
                    return spent;
                }
                if move_delta(nodes, tour, i, j) < -IMPROVEMENT_EPS {
                    tour[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
    spent
}

fn two_opt_candidates(nodes: &[Point], tour: &mut [usize], budget: u64) -> u64 {
    let last = tour.len() - 1;
    let neighbors = k_nearest(nodes, CANDIDATE_NEIGHBORS);
    let mut pos = vec![0usize; nodes.len()];
    for (p, &node) in tour.iter().enumerate() {
        pos[node] = p;
    }
    let mut spent = 0u64;
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..last.saturating_sub(1) {
            // new edge (tour[i], c) with c = tour[j], or (tour[i+1], c) with c = tour[j+1]
            let a = tour[i];
            let b = tour[i + 1];
            let candidates = neighbors[a]
                .iter()
                .map(|&c| pos[c])
                .chain(neighbors[b].iter().map(|&c| pos[c].wrapping_sub(1)));
            let mut chosen = None;
            for j in candidates {
                if j < i + 2 || j > last {
                    continue;
                }
                spent += 1;
                if spent > budget {
                    return spent;
                }
                if move_delta(nodes, tour, i, j) < -IMPROVEMENT_EPS {
                    chosen = Some(j);
                    break;
                }
            }
            if let Some(j) = chosen {
                tour[i + 1..=j].reverse();
                for (p, &node) in tour.iter().enumerate().take(j + 1).skip(i + 1) {
                    pos[node] = p;
                }
                improved = true;
            }
        }
    }
    spent
}

#[derive(PartialEq)]
struct Candidate(f64, usize);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// `k` nearest other points (never the point itself) of every point, closest first, found by scanning
/// outward in x-sorted order.
pub fn k_nearest(points: &[Point], k: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut by_x: Vec<usize> = (0..n).collect();
    by_x.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x).then(a.cmp(&b)));
    let mut rank = vec![0usize; n];
    for (r, &i) in by_x.iter().enumerate() {
        rank[i] = r;
    }

    (0..n)
        .map(|i| {
            let p = points[i];
            let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
            let consider = |j: usize, heap: &mut BinaryHeap<Candidate>| {
                let d = p.distance(points[j]);
                heap.push(Candidate(d, j));
                if heap.len() > k {
                    heap.pop();
                }
            };
            let worst = |heap: &BinaryHeap<Candidate>| {
                if heap.len() < k {
                    f64::INFINITY
                } else {
                    heap.peek().map_or(f64::INFINITY, |c| c.0)
                }
            };
            let r = rank[i];
            let (mut lo, mut hi) = (r, r + 1);
            loop {
                let left = (lo > 0).then(|| by_x[lo - 1]);
                let right = (hi < n).then(|| by_x[hi]);
                let dl = left.map_or(f64::INFINITY, |j| p.x - points[j].x);
                let dr = right.map_or(f64::INFINITY, |j| points[j].x - p.x);
                if dl.min(dr) > worst(&heap) || (left.is_none() && right.is_none()) {
                    break;
                }
                if dl <= dr {
                    consider(left.expect("finite gap"), &mut heap);
                    lo -= 1;
                } else {
                    consider(right.expect("finite gap"), &mut heap);
                    hi += 1;
                }
            }
            heap.into_sorted_vec().into_iter().map(|c| c.1).collect()
        })
        .collect()
}

/// Boustrophedon sweep over `⌈√(n/2)⌉` horizontal strips of `square`.
///
/// Four sweeps are tried (starting at each corner side) and the shortest kept.
pub fn strip_path(start: Point, points: &[Point], square: Square) -> TourPlan {
    let n = points.len();
    if n == 0 {
        return TourPlan::empty();
    }
    let strips = ((n as f64 / 2.0).sqrt().ceil() as usize).max(1);
    let height = square.side / strips as f64;
    let strip_of = |p: Point| -> usize {
        let s = ((p.y - square.min.y) / height).floor();
        (s.max(0.0) as usize).min(strips - 1)
    };

    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); strips];
    for (i, &p) in points.iter().enumerate() {
        buckets[strip_of(p)].push(i);
    }
    for bucket in &mut buckets {
        bucket.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x).then(a.cmp(&b)));
    }

    let sweep = |bottom_up: bool, left_first: bool| -> Vec<usize> {
        let mut order = Vec::with_capacity(n);
        let mut rightward = left_first;
        let strip_seq: Box<dyn Iterator<Item = &Vec<usize>>> = if bottom_up {
            Box::new(buckets.iter())
        } else {
            Box::new(buckets.iter().rev())
        };
        for bucket in strip_seq {
            if bucket.is_empty() {
                continue;
            }
            if rightward {
                order.extend(bucket.iter().copied());
            } else {
                order.extend(bucket.iter().rev().copied());
            }
            rightward = !rightward;
        }
        order
    };

    [(true, true), (true, false), (false, true), (false, false)]
        .into_iter()
        .map(|(b, l)| TourPlan::from_order(start, points, sweep(b, l)))
        .min_by(|a, b| a.length.total_cmp(&b.length))
        .expect("four candidate sweeps")
}
