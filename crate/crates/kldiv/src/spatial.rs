//! Exact k-th nearest-neighbor distance queries over a fixed point set.
//!
//! [`NeighborIndex`] is a kd-tree; [`brute_force_kth_distance`] is the O(N)
//! reference oracle. Both reduce per-pair distances with the same arithmetic,
//! so for any query the returned k-th distance is bit-identical between them.

use crate::error::{Error, Result};
use crate::special::NormKind;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// An ordered collection of N points in d dimensions.
///
/// Index i identifies sample X_i across all operations. All coordinates are
/// finite, every point has the same dimension d >= 1, and N >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Vec<f64>,
    dim: usize,
}

impl SampleSet {
    /// Builds a sample set from a list of points, validating the invariants.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InconsistentDimension {
                index: 0,
                expected: 1,
                got: 0,
            });
        }
        let mut data = Vec::with_capacity(points.len() * dim);
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InconsistentDimension {
                    index,
                    expected: dim,
                    got: p.len(),
                });
            }
            for (coord, &v) in p.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteCoordinate { index, coord });
                }
                data.push(v);
            }
        }
        Ok(SampleSet { data, dim })
    }

    /// Builds a sample set from a flat row-major buffer of `len * dim` values.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InconsistentDimension {
                index: 0,
                expected: 1,
                got: 0,
            });
        }
        if data.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InconsistentDimension {
                index: data.len() / dim,
                expected: dim,
                got: data.len() % dim,
            });
        }
        for (i, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteCoordinate {
                    index: i / dim,
                    coord: i % dim,
                });
            }
        }
        Ok(SampleSet { data, dim })
    }

    // a SampleSet is never empty, so there is no is_empty
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Distance reduced to the cheap comparable form: squared for Euclidean,
/// max coordinate gap for Chebyshev. Coordinates are folded in index order
/// so the value is deterministic.
fn reduced_distance(a: &[f64], b: &[f64], norm: NormKind) -> f64 {
    match norm {
        NormKind::Euclidean => {
            let mut acc = 0.0;
            for i in 0..a.len() {
                let d = a[i] - b[i];
                acc += d * d;
            }
            acc
        }
        NormKind::Chebyshev => {
            let mut acc = 0.0f64;
            for i in 0..a.len() {
                let d = (a[i] - b[i]).abs();
                if d > acc {
                    acc = d;
                }
            }
            acc
        }
    }
}

fn finalize_distance(reduced: f64, norm: NormKind) -> f64 {
    match norm {
        NormKind::Euclidean => reduced.sqrt(),
        NormKind::Chebyshev => reduced,
    }
}

fn reduced_plane_gap(gap: f64, norm: NormKind) -> f64 {
    match norm {
        NormKind::Euclidean => gap * gap,
        NormKind::Chebyshev => gap.abs(),
    }
}

#[derive(PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

const SMALL_K: usize = 16;

/// Tracks the k smallest reduced distances seen so far.
enum KthTracker {
    Small { k: usize, len: usize, buf: [f64; SMALL_K] },
    Heap { k: usize, heap: BinaryHeap<OrdF64> },
}

impl KthTracker {
    fn new(k: usize) -> Self {
        if k <= SMALL_K {
            KthTracker::Small {
                k,
                len: 0,
                buf: [f64::INFINITY; SMALL_K],
            }
        } else {
            KthTracker::Heap {
                k,
                heap: BinaryHeap::with_capacity(k + 1),
            }
        }
    }

    /// Current k-th smallest value, or infinity while fewer than k seen.
    fn bound(&self) -> f64 {
        match self {
            KthTracker::Small { k, len, buf } => {
                if *len < *k {
                    f64::INFINITY
                } else {
                    buf[*k - 1]
                }
            }
            KthTracker::Heap { k, heap } => {
                if heap.len() < *k {
                    f64::INFINITY
                } else {
                    heap.peek().map_or(f64::INFINITY, |v| v.0)
                }
            }
        }
    }

    fn push(&mut self, value: f64) {
        match self {
            KthTracker::Small { k, len, buf } => {
                if *len < *k {
                    let mut i = *len;
                    while i > 0 && buf[i - 1] > value {
                        buf[i] = buf[i - 1];
                        i -= 1;
                    }
                    buf[i] = value;
                    *len += 1;
                } else if value < buf[*k - 1] {
                    let mut i = *k - 1;
                    while i > 0 && buf[i - 1] > value {
                        buf[i] = buf[i - 1];
                        i -= 1;
                    }
                    buf[i] = value;
                }
            }
            KthTracker::Heap { k, heap } => {
                if heap.len() < *k {
                    heap.push(OrdF64(value));
                } else if value < heap.peek().map_or(f64::INFINITY, |v| v.0) {
                    heap.push(OrdF64(value));
                    heap.pop();
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: u32, end: u32 },
    Split { dim: u32, value: f64, left: u32, right: u32 },
}

/// Default kd-tree leaf size.
pub const DEFAULT_LEAF_SIZE: usize = 16;

/// Immutable kd-tree over a [`SampleSet`]; safe for concurrent queries.
///
/// Ranks among equidistant neighbors are arbitrary; only the k-th distance
/// value is defined, and it matches the brute-force oracle exactly.
pub struct NeighborIndex<'a> {
    set: &'a SampleSet,
    norm: NormKind,
    nodes: Vec<Node>,
    order: Vec<u32>,
}

/// Builds a [`NeighborIndex`] with the default leaf size.
pub fn build_index(samples: &SampleSet, norm: NormKind) -> NeighborIndex<'_> {
    NeighborIndex::build(samples, norm, DEFAULT_LEAF_SIZE)
}

impl<'a> NeighborIndex<'a> {
    /// Builds the tree; `leaf_size` caps the number of points per leaf.
    pub fn build(samples: &'a SampleSet, norm: NormKind, leaf_size: usize) -> Self {
        let leaf_size = leaf_size.max(1);
        let mut order: Vec<u32> = (0..samples.len() as u32).collect();
        let mut nodes = Vec::new();
        build_node(samples, &mut nodes, &mut order, 0, leaf_size);
        NeighborIndex {
            set: samples,
            norm,
            nodes,
            order,
        }
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    pub fn source(&self) -> &SampleSet {
        self.set
    }

    /// Exact distance from `query` to its k-th nearest point in the source
    /// set, omitting `exclude` if given.
    pub fn kth_distance(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Result<f64> {
        if query.len() != self.set.dim() {
            return Err(Error::DimensionMismatch {
                left: query.len(),
                right: self.set.dim(),
            });
        }
        if let Some(e) = exclude {
            if e >= self.set.len() {
                return Err(Error::IndexOutOfBounds {
                    index: e,
                    len: self.set.len(),
                });
            }
        }
        let available = self.set.len() - usize::from(exclude.is_some());
        if k == 0 || k > available {
            return Err(Error::KOutOfRange { k, available });
        }
        let mut tracker = KthTracker::new(k);
        self.search(0, query, exclude, &mut tracker);
        Ok(finalize_distance(tracker.bound(), self.norm))
    }

    fn search(&self, node: u32, query: &[f64], exclude: Option<usize>, tracker: &mut KthTracker) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &idx in &self.order[start as usize..end as usize] {
                    if exclude == Some(idx as usize) {
                        continue;
                    }
                    let d = reduced_distance(query, self.set.point(idx as usize), self.norm);
                    tracker.push(d);
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let gap = query[dim as usize] - value;
                let (near, far) = if gap < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, exclude, tracker);
                if reduced_plane_gap(gap, self.norm) < tracker.bound() {
                    self.search(far, query, exclude, tracker);
                }
            }
        }
    }
}

fn build_node(
    set: &SampleSet,
    nodes: &mut Vec<Node>,
    order: &mut [u32],
    offset: usize,
    leaf_size: usize,
) -> u32 {
    let id = nodes.len() as u32;
    if order.len() <= leaf_size {
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        });
        return id;
    }
    // Split on the widest dimension; fall back to a leaf when all points
    // coincide (duplicates are permitted at build time).
    let dim = set.dim();
    let mut best_dim = 0usize;
    let mut best_extent = -1.0f64;
    for d in 0..dim {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &idx in order.iter() {
            let v = set.point(idx as usize)[d];
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        if hi - lo > best_extent {
            best_extent = hi - lo;
            best_dim = d;
        }
    }
    if best_extent <= 0.0 {
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        });
        return id;
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        set.point(a as usize)[best_dim].total_cmp(&set.point(b as usize)[best_dim])
    });
    let split_value = set.point(order[mid] as usize)[best_dim];
    nodes.push(Node::Split {
        dim: best_dim as u32,
        value: split_value,
        left: 0,
        right: 0,
    });
    let (left_slice, right_slice) = order.split_at_mut(mid);
    let left = build_node(set, nodes, left_slice, offset, leaf_size);
    let right = build_node(set, nodes, right_slice, offset + mid, leaf_size);
    if let Node::Split {
        left: ref mut l,
        right: ref mut r,
        ..
    } = nodes[id as usize]
    {
        *l = left;
        *r = right;
    }
    id
}

/// O(N) reference oracle: full scan and partial selection of the k-th
/// smallest distance. Same contract as [`NeighborIndex::kth_distance`].
pub fn brute_force_kth_distance(
    samples: &SampleSet,
    query: &[f64],
    k: usize,
    norm: NormKind,
    exclude: Option<usize>,
) -> Result<f64> {
    if query.len() != samples.dim() {
        return Err(Error::DimensionMismatch {
            left: query.len(),
            right: samples.dim(),
        });
    }
    if let Some(e) = exclude {
        if e >= samples.len() {
            return Err(Error::IndexOutOfBounds {
                index: e,
                len: samples.len(),
            });
        }
    }
    let available = samples.len() - usize::from(exclude.is_some());
    if k == 0 || k > available {
        return Err(Error::KOutOfRange { k, available });
    }
    let mut dists: Vec<f64> = Vec::with_capacity(available);
    for i in 0..samples.len() {
        if exclude == Some(i) {
            continue;
        }
        dists.push(reduced_distance(query, samples.point(i), norm));
    }
    let (_, kth, _) = dists.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    Ok(finalize_distance(*kth, norm))
}
