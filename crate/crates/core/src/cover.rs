//! Exact covering numbers of small finite point sets in L¹.
//!
//! A set of diameter at most `2ε` is a clique of the threshold graph
//! `{d <= 2ε}`, so the covering number is its minimum clique cover. The
//! search is a branch and bound over vertices; a greedy cover seeds the
//! incumbent and a greedy independent set gives the lower bound.

use crate::error::{Error, Result};
use crate::grid_fn::GridFunction;
use crate::packing::PackingFamily;

/// Default cap on the number of points given to the exact solver.
pub const DEFAULT_COVER_CAP: usize = 20;
/// Default cap on the family dimension `m` for whole-family covers.
pub const DEFAULT_FAMILY_CAP: usize = 12;
/// Default number of search nodes before the solver gives up.
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverResult {
    /// Best cover found; the minimum when `exact` is set.
    pub cover: usize,
    /// Size of an independent set, a lower bound on the minimum.
    pub independent: usize,
    pub nodes: u64,
    /// False when the node budget ran out before optimality was proved.
    pub exact: bool,
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn and_assign(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a &= b;
        }
    }

    fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }
}

struct Search<'a> {
    adj: &'a [Bits],
    order: Vec<usize>,
    best: usize,
    floor: usize,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    /// `open[c]` holds the vertices adjacent to every member of clique `c`.
    fn run(&mut self, pos: usize, open: &mut Vec<Bits>) -> std::result::Result<(), ()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(());
        }
        if open.len() >= self.best || self.best == self.floor {
            return Ok(());
        }
        if pos == self.order.len() {
            self.best = open.len();
            return Ok(());
        }
        let v = self.order[pos];
        for c in 0..open.len() {
            if open[c].get(v) {
                let saved = open[c].clone();
                open[c].and_assign(&self.adj[v]);
                self.run(pos + 1, open)?;
                open[c] = saved;
            }
        }
        if open.len() + 1 < self.best {
            open.push(self.adj[v].clone());
            self.run(pos + 1, open)?;
            open.pop();
        }
        Ok(())
    }
}

fn greedy_cover(adj: &[Bits], order: &[usize]) -> usize {
    let mut open: Vec<Bits> = Vec::new();
    for &v in order {
        match open.iter_mut().find(|m| m.get(v)) {
            Some(m) => m.and_assign(&adj[v]),
            None => open.push(adj[v].clone()),
        }
    }
    open.len()
}

fn greedy_independent(adj: &[Bits], order: &[usize]) -> usize {
    let mut blocked = Bits::empty(adj.len());
    let mut size = 0;
    for &v in order {
        if !blocked.get(v) {
            size += 1;
            for (w, b) in blocked.0.iter_mut().zip(&adj[v].0) {
                *w |= b;
            }
        }
    }
    size
}

/// Minimum clique cover of the graph on `0..n` with edges where `close(i, j)`.
/// Stops after `budget` search nodes, returning the incumbent with
/// `exact = false`.
pub fn min_clique_cover(n: usize, close: impl Fn(usize, usize) -> bool, budget: u64) -> CoverResult {
    if n == 0 {
        return CoverResult { cover: 0, independent: 0, nodes: 0, exact: true };
    }
    // every vertex is adjacent to itself so masks double as clique candidates
    let mut adj = vec![Bits::empty(n); n];
    for i in 0..n {
        adj[i].set(i);
        for j in i + 1..n {
            if close(i, j) {
                adj[i].set(j);
                adj[j].set(i);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (adj[v].count(), v));
    let independent = greedy_independent(&adj, &order);
    let greedy = greedy_cover(&adj, &order);
    let mut search = Search { adj: &adj, order, best: greedy, floor: independent, nodes: 0, budget };
    let exact = search.run(0, &mut Vec::new()).is_ok();
    CoverResult { cover: search.best, independent, nodes: search.nodes, exact }
}

/// Minimal number of subsets of diameter `<= 2ε` covering `points`.
pub fn brute_force_cover_number(points: &[GridFunction], eps: f64, cap: usize) -> Result<usize> {
    if points.len() > cap {
        return Err(Error::SizeCap { size: points.len(), cap });
    }
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            d[i * n + j] = points[i].l1_distance(&points[j])?;
        }
    }
    let r = min_clique_cover(n, |i, j| d[i * n + j] <= 2.0 * eps, DEFAULT_NODE_BUDGET);
    if !r.exact {
        return Err(Error::OutOfRange(format!("cover search exceeded {DEFAULT_NODE_BUDGET} nodes")));
    }
    Ok(r.cover)
}

/// Covering number of the whole family `{u_δ}` at scale `ε`, using the
/// Hamming form of the L¹ distance. `cap` bounds the family dimension `m`;
/// check `exact` on the result.
pub fn family_cover_number(family: &PackingFamily, eps: f64, cap: usize, budget: u64) -> Result<CoverResult> {
    let m = family.size();
    if m > cap.min(24) {
        return Err(Error::SizeCap { size: m, cap });
    }
    let dist: Vec<f64> = (0..=m).map(|d| family.l1_from_hamming(d)).collect::<Result<_>>()?;
    Ok(min_clique_cover(1 << m, |i, j| dist[(i ^ j).count_ones() as usize] <= 2.0 * eps, budget))
}

/// Greedy cover by closed balls of radius `radius` centred at the points
/// themselves; an upper bound on the diameter-`2·radius` covering number.
pub fn greedy_ball_cover(points: &[GridFunction], radius: f64) -> Result<usize> {
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let x = points[i].l1_distance(&points[j])?;
            d[i * n + j] = x;
            d[j * n + i] = x;
        }
    }
    Ok(greedy_balls(n, |i, j| d[i * n + j] <= radius))
}

/// Greedy radius-`radius` ball cover of the whole family `{u_δ}`.
pub fn family_ball_cover(family: &PackingFamily, radius: f64, cap: usize) -> Result<usize> {
    let m = family.size();
    if m > cap.min(24) {
        return Err(Error::SizeCap { size: m, cap });
    }
    let dist: Vec<f64> = (0..=m).map(|d| family.l1_from_hamming(d)).collect::<Result<_>>()?;
    Ok(greedy_balls(1 << m, |i, j| dist[(i ^ j).count_ones() as usize] <= radius))
}

fn greedy_balls(n: usize, close: impl Fn(usize, usize) -> bool) -> usize {
    let near: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| i == j || close(i, j)).collect()).collect();
    let mut covered = vec![false; n];
    let mut count = 0;
    while covered.iter().any(|c| !c) {
        let center = (0..n)
            .max_by_key(|&c| (near[c].iter().filter(|&&j| !covered[j]).count(), std::cmp::Reverse(c)))
            .unwrap();
        for &j in &near[center] {
            covered[j] = true;
        }
        count += 1;
    }
    count
}
