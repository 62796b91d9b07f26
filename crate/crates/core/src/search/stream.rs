//! Exact enumeration of `∂P_λ ∩ 𝔛/2^K` in order of distance to a query.
//!
//! The boundary is the union of the facets
//! `F_{A,j} = { x : x_A ∈ P(λ_1..λ_j), x_{A^c} ∈ P(λ_{j+1}..λ_{n+1}) }` over
//! coordinate sets `A` of size `1 ≤ j ≤ n`. On a facet the squared distance
//! splits into one term per block, and the lattice points of a permutohedron
//! form an M-convex set, so each block is walked best-first by exchange moves
//! `+e_a - e_b` from its closest point: the walk emits points in exact distance
//! order because sublevel sets of a separable convex function on an M-convex
//! set are connected under exchanges. A facet is the sorted sum of its two
//! block streams, and facets are opened lazily in order of a continuous lower
//! bound.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use crate::model::prefix_sums;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Euclidean projection of `y` onto the permutohedron of `mu` (sorted
/// descending): sort `y`, subtract the decreasing isotonic regression of
/// `y_sorted - mu`, and undo the sort.
pub(crate) fn project_permutohedron(y: &[f64], mu: &[f64]) -> Vec<f64> {
    let m = y.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| y[b].total_cmp(&y[a]));
    // Pool-adjacent-violators for a non-increasing fit.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(m);
    for (i, &idx) in order.iter().enumerate() {
        blocks.push((y[idx] - mu[i], 1));
        while blocks.len() >= 2 {
            let (s2, c2) = blocks[blocks.len() - 1];
            let (s1, c1) = blocks[blocks.len() - 2];
            if s1 / c1 as f64 >= s2 / c2 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s1 + s2, c1 + c2);
        }
    }
    let mut out = vec![0.0; m];
    let mut i = 0;
    for (s, c) in blocks {
        let mean = s / c as f64;
        for _ in 0..c {
            out[order[i]] = y[order[i]] - mean;
            i += 1;
        }
    }
    out
}

fn sq_dist(x: &[i64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(&a, b)| (a as f64 - b) * (a as f64 - b)).sum()
}

/// Best-first walk over the integer points of one permutohedron.
struct BlockStream {
    target: Vec<f64>,
    bounds: Vec<i64>,
    heap: BinaryHeap<Reverse<(Key, Vec<i64>)>>,
    seen: HashSet<Vec<i64>>,
    emitted: Vec<(f64, Vec<i64>)>,
    evaluations: usize,
}

impl BlockStream {
    fn new(target: Vec<f64>, mu: &[i64]) -> Self {
        let mut s = Self {
            target,
            bounds: prefix_sums(mu),
            heap: BinaryHeap::new(),
            seen: HashSet::new(),
            emitted: Vec::new(),
            evaluations: 0,
        };
        let start = s.closest(mu);
        s.evaluations += 1;
        s.heap.push(Reverse((Key(sq_dist(&start, &s.target)), start.clone())));
        s.seen.insert(start);
        s
    }

    fn feasible(&self, x: &[i64]) -> bool {
        let mut sorted = x.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let mut acc = 0;
        sorted.iter().zip(&self.bounds).all(|(v, &b)| {
            acc += v;
            acc <= b
        })
    }

    /// Closest integer point: round the continuous projection, then descend
    /// by exchanges until no exchange improves.
    fn closest(&mut self, mu: &[i64]) -> Vec<i64> {
        let m = mu.len();
        let muf: Vec<f64> = mu.iter().map(|&v| v as f64).collect();
        let p = project_permutohedron(&self.target, &muf);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
        let total = self.bounds[m - 1];
        let mut x = vec![0i64; m];
        let (mut acc, mut prev) = (0.0, 0i64);
        for (i, &idx) in order.iter().enumerate() {
            acc += p[idx];
            let fl = if i + 1 == m {
                total
            } else {
                ((acc + 1e-9).floor() as i64).min(self.bounds[i])
            };
            x[idx] = fl - prev;
            prev = fl;
        }
        if !self.feasible(&x) {
            for (i, &idx) in order.iter().enumerate() {
                x[idx] = mu[i];
            }
        }
        self.descend(&mut x);
        x
    }

    fn descend(&mut self, x: &mut [i64]) {
        let m = x.len();
        loop {
            let r: Vec<f64> = x.iter().zip(&self.target).map(|(&a, b)| a as f64 - b).collect();
            // Moving +1 at b and -1 at a changes the squared distance by
            // 2 + 2(r_b - r_a).
            let mut moves: Vec<(f64, usize, usize)> = Vec::new();
            for a in 0..m {
                for b in 0..m {
                    let delta = 2.0 + 2.0 * (r[b] - r[a]);
                    if a != b && delta < -1e-12 {
                        moves.push((delta, a, b));
                    }
                }
            }
            moves.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut moved = false;
            for (_, a, b) in moves {
                x[a] -= 1;
                x[b] += 1;
                self.evaluations += 1;
                if self.feasible(x) {
                    moved = true;
                    break;
                }
                x[a] += 1;
                x[b] -= 1;
            }
            if !moved {
                return;
            }
        }
    }

    fn get(&mut self, i: usize) -> Option<f64> {
        while self.emitted.len() <= i {
            let Reverse((Key(d), x)) = self.heap.pop()?;
            let m = x.len();
            for a in 0..m {
                for b in 0..m {
                    if a == b {
                        continue;
                    }
                    let mut y = x.clone();
                    y[a] -= 1;
                    y[b] += 1;
                    if self.seen.contains(&y) {
                        continue;
                    }
                    self.evaluations += 1;
                    if self.feasible(&y) {
                        self.heap.push(Reverse((Key(sq_dist(&y, &self.target)), y.clone())));
                        self.seen.insert(y);
                    }
                }
            }
            self.emitted.push((d, x));
        }
        Some(self.emitted[i].0)
    }
}

/// Points of one facet in order of distance: a lazy merge of the sums of two
/// sorted block streams.
struct FacetStream {
    first: Vec<usize>,
    second: Vec<usize>,
    a: BlockStream,
    b: BlockStream,
    heap: BinaryHeap<Reverse<(Key, usize, usize)>>,
}

impl FacetStream {
    fn new(target: &[f64], mask: u32, rows: &[i64], j: usize) -> Self {
        let m = target.len();
        let first: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let second: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 0).collect();
        let mut a = BlockStream::new(first.iter().map(|&i| target[i]).collect(), &rows[..j]);
        let mut b = BlockStream::new(second.iter().map(|&i| target[i]).collect(), &rows[j..]);
        let mut heap = BinaryHeap::new();
        if let (Some(da), Some(db)) = (a.get(0), b.get(0)) {
            heap.push(Reverse((Key(da + db), 0, 0)));
        }
        Self {
            first,
            second,
            a,
            b,
            heap,
        }
    }

    fn peek(&self) -> Option<f64> {
        self.heap.peek().map(|Reverse((k, _, _))| k.0)
    }

    fn pop(&mut self) -> Option<(f64, Vec<i64>)> {
        let Reverse((Key(d), i, j)) = self.heap.pop()?;
        if let (Some(da), Some(db)) = (self.a.get(i), self.b.get(j + 1)) {
            self.heap.push(Reverse((Key(da + db), i, j + 1)));
        }
        if j == 0 {
            if let (Some(da), Some(db)) = (self.a.get(i + 1), self.b.get(0)) {
                self.heap.push(Reverse((Key(da + db), i + 1, 0)));
            }
        }
        let mut x = vec![0i64; self.first.len() + self.second.len()];
        for (&c, &v) in self.first.iter().zip(&self.a.emitted[i].1) {
            x[c] = v;
        }
        for (&c, &v) in self.second.iter().zip(&self.b.emitted[j].1) {
            x[c] = v;
        }
        Some((d, x))
    }

    fn evaluations(&self) -> usize {
        self.a.evaluations + self.b.evaluations
    }
}

struct Facet {
    mask: u32,
    j: usize,
    stream: Option<FacetStream>,
}

/// Boundary lattice points at one level (integer numerators) in
/// non-decreasing order of squared distance to a target, each exactly once.
pub struct BoundaryStream {
    target: Vec<f64>,
    rows: Vec<i64>,
    facets: Vec<Facet>,
    heap: BinaryHeap<Reverse<(Key, usize)>>,
    emitted: HashSet<Vec<i64>>,
    candidates: usize,
    facets_opened: usize,
}

impl BoundaryStream {
    /// `target` is the query already multiplied by `2^level`, `rows` the
    /// diagram stretched to the same scale.
    pub fn new(target: Vec<f64>, rows: Vec<i64>) -> Self {
        let m = rows.len();
        let mut facets = Vec::new();
        let mut heap = BinaryHeap::new();
        let rowsf: Vec<f64> = rows.iter().map(|&r| r as f64).collect();
        for mask in 1u32..(1 << m) - 1 {
            let j = mask.count_ones() as usize;
            let (ya, yb): (Vec<(usize, f64)>, Vec<(usize, f64)>) =
                target.iter().copied().enumerate().partition(|(i, _)| mask >> i & 1 == 1);
            let ya: Vec<f64> = ya.into_iter().map(|p| p.1).collect();
            let yb: Vec<f64> = yb.into_iter().map(|p| p.1).collect();
            let pa = project_permutohedron(&ya, &rowsf[..j]);
            let pb = project_permutohedron(&yb, &rowsf[j..]);
            let bound = dist_f(&pa, &ya) + dist_f(&pb, &yb);
            // Float slack so that the bound stays below every lattice point.
            let bound = (bound - 1e-9 * (1.0 + bound)).max(0.0);
            heap.push(Reverse((Key(bound), facets.len())));
            facets.push(Facet {
                mask,
                j,
                stream: None,
            });
        }
        Self {
            target,
            rows,
            facets,
            heap,
            emitted: HashSet::new(),
            candidates: 0,
            facets_opened: 0,
        }
    }

    /// Lower bound on the squared distance of every point not yet returned.
    pub fn peek(&self) -> Option<f64> {
        self.heap.peek().map(|Reverse((k, _))| k.0)
    }

    /// Combined facet points produced so far, duplicates included.
    pub fn candidates(&self) -> usize {
        self.candidates
    }

    /// Block lattice points tested for feasibility.
    pub fn evaluations(&self) -> usize {
        self.facets
            .iter()
            .filter_map(|f| f.stream.as_ref())
            .map(FacetStream::evaluations)
            .sum()
    }

    pub fn facets_opened(&self) -> usize {
        self.facets_opened
    }
}

impl Iterator for BoundaryStream {
    type Item = (f64, Vec<i64>);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let Reverse((_, idx)) = self.heap.pop()?;
            let facet = &mut self.facets[idx];
            let Some(stream) = facet.stream.as_mut() else {
                // Opening replaces the lower bound by the facet's true minimum.
                self.facets_opened += 1;
                let stream = FacetStream::new(&self.target, facet.mask, &self.rows, facet.j);
                if let Some(k) = stream.peek() {
                    self.heap.push(Reverse((Key(k), idx)));
                }
                facet.stream = Some(stream);
                continue;
            };
            let Some((d, x)) = stream.pop() else {
                continue;
            };
            self.candidates += 1;
            if let Some(k) = stream.peek() {
                self.heap.push(Reverse((Key(k), idx)));
            }
            if self.emitted.insert(x.clone()) {
                return Some((d, x));
            }
        }
    }
}

fn dist_f(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
