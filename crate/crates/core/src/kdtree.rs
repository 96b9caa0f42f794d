//! Static kd-tree over points of runtime dimension with exact closed-ball
//! range reporting.

use crate::numeric::dist2;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
        // bounding box of the subtree, used for pruning
        lo: Box<[f64]>,
        hi: Box<[f64]>,
    },
}

/// Immutable kd-tree. Point `i` is `coords[i*dim..(i+1)*dim]` of the slice it
/// was built from; queries report those original indices.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    // permuted copy of the coordinates, contiguous per leaf
    coords: Vec<f64>,
    ids: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn build(dim: usize, coords: &[f64]) -> Self {
        assert!(dim > 0 && coords.len().is_multiple_of(dim));
        let count = coords.len() / dim;
        let mut ids: Vec<usize> = (0..count).collect();
        let mut nodes = Vec::new();
        if count > 0 {
            build_rec(dim, coords, &mut ids, 0, count, &mut nodes);
        }
        let mut permuted = Vec::with_capacity(coords.len());
        for &i in &ids {
            permuted.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
        }
        KdTree { dim, coords: permuted, ids, nodes }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Visit every point with `|p - center| <= radius`, in tree order.
    pub fn for_each_in_ball(&self, center: &[f64], radius: f64, mut visit: impl FnMut(usize)) {
        if self.nodes.is_empty() || radius < 0.0 {
            return;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            match &self.nodes[ni] {
                Node::Leaf { start, end } => {
                    for slot in *start..*end {
                        let p = &self.coords[slot * self.dim..(slot + 1) * self.dim];
                        if dist2(p, center) <= r2 {
                            visit(self.ids[slot]);
                        }
                    }
                }
                Node::Split { axis, value, left, right, lo, hi } => {
                    if box_dist2(lo, hi, center) > r2 {
                        continue;
                    }
                    let d = center[*axis] - value;
                    if d <= radius {
                        stack.push(*left);
                    }
                    if d >= -radius {
                        stack.push(*right);
                    }
                }
            }
        }
    }

    /// Indices of all points in the closed ball, sorted ascending so the result
    /// does not depend on tree layout.
    pub fn query_ball(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_in_ball(center, radius, |i| out.push(i));
        out.sort_unstable();
        out
    }

    /// Smallest index among points in the closed ball, if any.
    pub fn min_index_in_ball(&self, center: &[f64], radius: f64) -> Option<usize> {
        let mut best: Option<usize> = None;
        self.for_each_in_ball(center, radius, |i| {
            best = Some(best.map_or(i, |b| b.min(i)));
        });
        best
    }

    /// Nearest point other than `exclude`, as (index, squared distance).
    pub fn nearest(&self, center: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let bound = best.map_or(f64::INFINITY, |b| b.1);
            match &self.nodes[ni] {
                Node::Leaf { start, end } => {
                    for slot in *start..*end {
                        let id = self.ids[slot];
                        if Some(id) == exclude {
                            continue;
                        }
                        let p = &self.coords[slot * self.dim..(slot + 1) * self.dim];
                        let d = dist2(p, center);
                        let better = match best {
                            None => true,
                            Some((bi, bd)) => d < bd || (d == bd && id < bi),
                        };
                        if better {
                            best = Some((id, d));
                        }
                    }
                }
                Node::Split { axis, value, left, right, lo, hi } => {
                    if box_dist2(lo, hi, center) > bound {
                        continue;
                    }
                    // visit the near side last so it is popped first
                    if center[*axis] <= *value {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best
    }
}

fn box_dist2(lo: &[f64], hi: &[f64], x: &[f64]) -> f64 {
    let mut d = 0.0;
    for ((l, h), v) in lo.iter().zip(hi).zip(x) {
        let e = if v < l {
            l - v
        } else if v > h {
            v - h
        } else {
            0.0
        };
        d += e * e;
    }
    d
}

fn build_rec(
    dim: usize,
    coords: &[f64],
    ids: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let me = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return me;
    }
    let slice = &mut ids[start..end];
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for &i in slice.iter() {
        for a in 0..dim {
            let v = coords[i * dim + a];
            lo[a] = lo[a].min(v);
            hi[a] = hi[a].max(v);
        }
    }
    let axis = (0..dim)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    if hi[axis] - lo[axis] <= 0.0 {
        // all points coincide
        nodes.push(Node::Leaf { start, end });
        return me;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        coords[a * dim + axis]
            .total_cmp(&coords[b * dim + axis])
            .then(a.cmp(&b))
    });
    let value = coords[slice[mid] * dim + axis];
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let left = build_rec(dim, coords, ids, start, start + mid, nodes);
    let right = build_rec(dim, coords, ids, start + mid, end, nodes);
    nodes[me] = Node::Split {
        axis,
        value,
        left,
        right,
        lo: lo.into_boxed_slice(),
        hi: hi.into_boxed_slice(),
    };
    me
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ball_query_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2usize, 3, 5] {
            let count = 500;
            let coords: Vec<f64> = (0..count * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let tree = KdTree::build(dim, &coords);
            for _ in 0..100 {
                let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.2..1.2)).collect();
                let r = rng.gen_range(0.0..1.0);
                let brute: Vec<usize> = (0..count)
                    .filter(|&i| dist2(&coords[i * dim..(i + 1) * dim], &c) <= r * r)
                    .collect();
                assert_eq!(tree.query_ball(&c, r), brute);
            }
        }
    }

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dim = 4;
        let coords: Vec<f64> = (0..200 * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tree = KdTree::build(dim, &coords);
        for q in 0..200 {
            let c = &coords[q * dim..(q + 1) * dim];
            let (i, d) = tree.nearest(c, Some(q)).unwrap();
            let best = (0..200)
                .filter(|&j| j != q)
                .map(|j| dist2(&coords[j * dim..(j + 1) * dim], c))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d, best);
            assert_ne!(i, q);
        }
    }

    #[test]
    fn duplicate_points_and_boundary() {
        let coords = vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let tree = KdTree::build(2, &coords);
        assert_eq!(tree.query_ball(&[0.0, 0.0], 1.0), vec![0, 1, 2]);
        assert_eq!(tree.query_ball(&[0.0, 0.0], 0.999), vec![0, 1]);
        assert_eq!(tree.min_index_in_ball(&[1.0, 0.0], 0.5), Some(2));
    }
}
