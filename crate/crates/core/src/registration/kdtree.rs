//! Exact nearest-neighbour queries over a static point set.

use crate::quat::Vec3;

#[derive(Debug, Clone)]
struct Node {
    point: usize,
    axis: u8,
    left: Option<u32>,
    right: Option<u32>,
}

/// Balanced 3-d tree built by median splits.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Vec3>,
    nodes: Vec<Node>,
    root: Option<u32>,
}

fn coord(p: &Vec3, axis: u8) -> f64 {
    match axis {
        0 => p.x,
        1 => p.y,
        _ => p.z,
    }
}

impl SpatialIndex {
    pub fn new(points: &[Vec3]) -> Self {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        let mut tree = SpatialIndex { points: points.to_vec(), nodes: Vec::with_capacity(points.len()), root: None };
        tree.root = tree.build(&mut idx, 0);
        tree
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> Option<u32> {
        if idx.is_empty() {
            return None;
        }
        let axis = (depth % 3) as u8;
        let mid = idx.len() / 2;
        let pts = &self.points;
        idx.select_nth_unstable_by(mid, |&a, &b| coord(&pts[a], axis).total_cmp(&coord(&pts[b], axis)));
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { point: idx[mid], axis, left: None, right: None });
        let (lo, rest) = idx.split_at_mut(mid);
        let left = self.build(lo, depth + 1);
        let right = self.build(&mut rest[1..], depth + 1);
        self.nodes[id as usize].left = left;
        self.nodes[id as usize].right = right;
        Some(id)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> Vec3 {
        self.points[i]
    }

    /// Index of the closest point and the squared distance to it.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(self.root, q, &mut best);
        self.root.map(|_| best)
    }

    fn search(&self, node: Option<u32>, q: &Vec3, best: &mut (usize, f64)) {
        let Some(id) = node else { return };
        let n = &self.nodes[id as usize];
        let p = &self.points[n.point];
        let d2 = (*p - *q).norm_squared();
        if d2 < best.1 || (d2 == best.1 && n.point < best.0) {
            *best = (n.point, d2);
        }
        let diff = coord(q, n.axis) - coord(p, n.axis);
        let (near, far) = if diff < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        self.search(near, q, best);
        if diff * diff <= best.1 {
            self.search(far, q, best);
        }
    }
}
