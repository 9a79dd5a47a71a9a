use std::cmp::Ordering;

use super::points::{sq_dist, PointSet};
use crate::{Error, Execution, Result};

pub(crate) const MIN_POINTS: usize = 3;

/// Per-point ordering of all other points by distance.
///
/// Row `i` lists the `N - 1` other indices from nearest to farthest; the rank
/// `r_ij` of `j` around `i` is its position in that row plus one. Equal
/// distances are ordered by ascending index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTable {
    n: usize,
    neighbors: Vec<u32>,
}

impl RankTable {
    pub fn n_points(&self) -> usize {
        self.n
    }

    /// Neighbours of `i`, nearest first.
    pub fn row(&self, i: usize) -> &[u32] {
        let w = self.n - 1;
        &self.neighbors[i * w..(i + 1) * w]
    }

    /// Index of the `m`-th nearest neighbour of `i` (`m` is zero-based).
    pub fn neighbor(&self, i: usize, m: usize) -> usize {
        self.row(i)[m] as usize
    }

    pub fn nearest(&self, i: usize) -> usize {
        self.neighbor(i, 0)
    }

    /// `r_ij` in `1..=N-1`. Panics if `i == j`.
    pub fn rank(&self, i: usize, j: usize) -> usize {
        assert_ne!(i, j, "self-pairs have no rank");
        self.row(i)
            .iter()
            .position(|&m| m as usize == j)
            .expect("every other index appears in each row")
            + 1
    }
}

fn check_len(points: &PointSet) -> Result<()> {
    if points.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            got: points.len(),
            min: MIN_POINTS,
        });
    }
    if points.len() > u32::MAX as usize {
        return Err(Error::InvalidInput("too many points for a rank table".into()));
    }
    Ok(())
}

pub fn pairwise_rank_table(points: &PointSet) -> Result<RankTable> {
    pairwise_rank_table_with(points, Execution::default())
}

pub fn pairwise_rank_table_with(points: &PointSet, exec: Execution) -> Result<RankTable> {
    check_len(points)?;
    let n = points.len();
    let rows = exec.map_range(n, |i| {
        let xi = points.row_slice(i);
        let mut row: Vec<(f64, u32)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(xi, points.row_slice(j)), j as u32))
            .collect();
        row.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
        row.into_iter().map(|(_, j)| j).collect::<Vec<u32>>()
    });
    Ok(RankTable {
        n,
        neighbors: rows.concat(),
    })
}

/// The ranks, in space B, of each point's nearest neighbour in space A.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalRanks {
    values: Vec<u32>,
}

impl ConditionalRanks {
    pub fn new(values: Vec<u32>) -> Self {
        ConditionalRanks { values }
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_same(a: &RankTable, b: &RankTable) -> Result<()> {
    if a.n != b.n {
        return Err(Error::Shape(format!(
            "rank tables built from different point counts: {} vs {}",
            a.n, b.n
        )));
    }
    Ok(())
}

pub fn conditional_ranks(rank_a: &RankTable, rank_b: &RankTable) -> Result<ConditionalRanks> {
    check_same(rank_a, rank_b)?;
    let values = (0..rank_a.n)
        .map(|i| rank_b.rank(i, rank_a.nearest(i)) as u32)
        .collect();
    Ok(ConditionalRanks { values })
}

/// Information Imbalance from A to B: `2 / (N (N - 1))` times the sum of the
/// B-ranks of the A-nearest neighbours.
pub fn information_imbalance(rank_a: &RankTable, rank_b: &RankTable) -> Result<f64> {
    let cond = conditional_ranks(rank_a, rank_b)?;
    Ok(information_imbalance_from_ranks(&cond))
}

pub fn information_imbalance_from_ranks(cond: &ConditionalRanks) -> f64 {
    let n = cond.len() as f64;
    let sum: u64 = cond.values.iter().map(|&r| r as u64).sum();
    2.0 * sum as f64 / (n * (n - 1.0))
}

/// Conditional ranks in both directions without materialising rank tables.
///
/// Returns `(A -> B, B -> A)`. Equivalent to building both tables and calling
/// [`conditional_ranks`] twice, but runs in `O(N)` memory.
pub fn mutual_neighbor_ranks(
    a: &PointSet,
    b: &PointSet,
    exec: Execution,
) -> Result<(ConditionalRanks, ConditionalRanks)> {
    check_len(a)?;
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "representations have different point counts: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    let (sa, sb) = (Space::new(a), Space::new(b));
    let pairs = exec.map_range(n, |i| {
        let ra = sa.around(i);
        let rb = sb.around(i);
        (rb.rank(ra.nearest()), ra.rank(rb.nearest()))
    });
    let (ab, ba) = pairs.into_iter().unzip();
    Ok((ConditionalRanks { values: ab }, ConditionalRanks { values: ba }))
}

/// Per-space neighbour queries: sorted order for 1-D points, distance rows otherwise.
enum Space<'a> {
    Line(LineIndex),
    Dense(&'a PointSet),
}

impl<'a> Space<'a> {
    fn new(p: &'a PointSet) -> Self {
        if p.dim() == 1 {
            Space::Line(LineIndex::new(p))
        } else {
            Space::Dense(p)
        }
    }

    fn around(&self, i: usize) -> Around<'_> {
        match self {
            Space::Line(l) => Around::Line(l, i),
            Space::Dense(p) => Around::Dense(distance_row(p, i), i),
        }
    }
}

enum Around<'a> {
    Line(&'a LineIndex, usize),
    Dense(Vec<f64>, usize),
}

impl Around<'_> {
    fn nearest(&self) -> usize {
        match self {
            Around::Line(l, i) => l.nearest(*i),
            Around::Dense(row, i) => nearest_in_row(row, *i),
        }
    }

    fn rank(&self, target: usize) -> u32 {
        match self {
            Around::Line(l, i) => l.rank(*i, target),
            Around::Dense(row, i) => rank_in_row(row, *i, target),
        }
    }
}

/// 1-D points in ascending order.
///
/// Around any point the squared distance `(x_i - x)^2`, computed exactly as
/// in the dense path, is non-increasing left of `i` and non-decreasing right
/// of it, so strict and tied counts come from binary searches. Only tied
/// points are visited one by one.
struct LineIndex {
    values: Vec<f64>,
    ids: Vec<usize>,
    pos: Vec<usize>,
}

impl LineIndex {
    fn new(p: &PointSet) -> Self {
        let x: Vec<f64> = (0..p.len()).map(|i| p.row_slice(i)[0]).collect();
        let mut ids: Vec<usize> = (0..x.len()).collect();
        ids.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
        let mut pos = vec![0; x.len()];
        for (q, &id) in ids.iter().enumerate() {
            pos[id] = q;
        }
        LineIndex {
            values: ids.iter().map(|&id| x[id]).collect(),
            ids,
            pos,
        }
    }

    fn sq(&self, xi: f64, q: usize) -> f64 {
        let t = xi - self.values[q];
        t * t
    }

    /// Sorted positions on the left and right of `i` whose squared distance
    /// is `< d` (`strict`) or `<= d`, as counts from the inside out.
    fn within(&self, i: usize, d: f64, strict: bool) -> (usize, usize) {
        let (p, xi) = (self.pos[i], self.values[self.pos[i]]);
        let inside = |v: f64| if strict { v < d } else { v <= d };
        let left = &self.values[..p];
        let right = &self.values[p + 1..];
        let l = left.len() - left.partition_point(|&v| !inside((xi - v) * (xi - v)));
        let r = right.partition_point(|&v| inside((xi - v) * (xi - v)));
        (l, r)
    }

    fn nearest(&self, i: usize) -> usize {
        let (p, xi) = (self.pos[i], self.values[self.pos[i]]);
        let mut dmin = f64::INFINITY;
        if p > 0 {
            dmin = self.sq(xi, p - 1);
        }
        if p + 1 < self.values.len() {
            dmin = dmin.min(self.sq(xi, p + 1));
        }
        let (l, r) = self.within(i, dmin, false);
        (p - l..p).chain(p + 1..p + 1 + r).map(|q| self.ids[q]).min().expect("at least two points")
    }

    fn rank(&self, i: usize, target: usize) -> u32 {
        let xi = self.values[self.pos[i]];
        let dt = self.sq(xi, self.pos[target]);
        let (ls, rs) = self.within(i, dt, true);
        let (le, re) = self.within(i, dt, false);
        let p = self.pos[i];
        let tied_before = (p - le..p - ls)
            .chain(p + 1 + rs..p + 1 + re)
            .filter(|&q| self.ids[q] < target)
            .count();
        (ls + rs + tied_before + 1) as u32
    }
}

fn distance_row(p: &PointSet, i: usize) -> Vec<f64> {
    let xi = p.row_slice(i);
    (0..p.len()).map(|j| sq_dist(xi, p.row_slice(j))).collect()
}

fn nearest_in_row(row: &[f64], i: usize) -> usize {
    let mut best = usize::MAX;
    let mut best_d = f64::INFINITY;
    for (j, &d) in row.iter().enumerate() {
        if j != i && (d < best_d || best == usize::MAX) {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Rank of `target` around `i`, with index tie-breaking.
fn rank_in_row(row: &[f64], i: usize, target: usize) -> u32 {
    let dt = row[target];
    let mut closer = 0u32;
    for (m, &d) in row.iter().enumerate() {
        if m != i && m != target && (d < dt || (d == dt && m < target)) {
            closer += 1;
        }
    }
    closer + 1
}
