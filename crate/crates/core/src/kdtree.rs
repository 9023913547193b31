//! Static kd-tree over a row-major point set.
//!
//! Distances are squared Euclidean distances summed in coordinate order, the
//! same arithmetic as the linear scan in [`crate::quantizer`], so both paths
//! return identical argmins (ties go to the smallest index).

const LEAF: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    d: usize,
    points: Vec<f64>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}

impl KdTree {
    pub fn new(d: usize, points: &[f64]) -> Self {
        assert!(d > 0 && points.len().is_multiple_of(d));
        let n = points.len() / d;
        let mut tree = KdTree { d, points: points.to_vec(), order: (0..n).collect(), nodes: Vec::new() };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the widest coordinate
        let mut best = (0, -1.0);
        for k in 0..self.d {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.order[start..end] {
                let v = self.points[i * self.d + k];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best.1 {
                best = (k, hi - lo);
            }
        }
        let dim = best.0;
        let mid = start + (end - start) / 2;
        let (d, pts) = (self.d, &self.points);
        self.order[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| pts[a * d + dim].total_cmp(&pts[b * d + dim]));
        let value = self.points[self.order[mid] * d + dim];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { dim, value, left, right };
        id
    }

    /// Nearest point as `(index, squared distance)`; smallest index on ties.
    pub fn nearest(&self, x: &[f64]) -> Option<(usize, f64)> {
        if self.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_in(0, x, &mut best);
        Some(best)
    }

    fn nearest_in(&self, node: usize, x: &[f64], best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = dist2(x, self.point(i));
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = x[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_in(near, x, best);
                if diff * diff <= best.1 {
                    self.nearest_in(far, x, best);
                }
            }
        }
    }

    /// Whether some point lies at squared distance strictly below `r2`.
    pub fn exists_closer(&self, x: &[f64], r2: f64) -> bool {
        !self.is_empty() && self.closer_in::<false>(0, x, r2)
    }

    /// Whether some point lies at squared distance at most `r2`.
    pub fn exists_within(&self, x: &[f64], r2: f64) -> bool {
        !self.is_empty() && self.closer_in::<true>(0, x, r2)
    }

    fn closer_in<const INCLUSIVE: bool>(&self, node: usize, x: &[f64], r2: f64) -> bool {
        let hit = |d2: f64| if INCLUSIVE { d2 <= r2 } else { d2 < r2 };
        match self.nodes[node] {
            Node::Leaf { start, end } => self.order[start..end].iter().any(|&i| hit(dist2(x, self.point(i)))),
            Node::Split { dim, value, left, right } => {
                let diff = x[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.closer_in::<INCLUSIVE>(near, x, r2)
                    || (hit(diff * diff) && self.closer_in::<INCLUSIVE>(far, x, r2))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn brute(points: &[f64], d: usize, x: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.chunks_exact(d).enumerate() {
            let d2 = dist2(x, p);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for d in [1, 2, 3] {
            let pts: Vec<f64> = (0..700 * d).map(|_| rng.random::<f64>()).collect();
            let tree = KdTree::new(d, &pts);
            for _ in 0..1000 {
                let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 1.2 - 0.1).collect();
                let want = brute(&pts, d, &x);
                assert_eq!(tree.nearest(&x), Some(want));
                assert!(tree.exists_closer(&x, want.1 * 1.000001 + 1e-300));
                assert!(!tree.exists_closer(&x, want.1));
                assert!(tree.exists_within(&x, want.1));
            }
        }
    }

    #[test]
    fn ties_go_to_the_smallest_index() {
        // a grid makes equidistant queries common
        let mut pts = Vec::new();
        for i in 0..30 {
            for j in 0..30 {
                pts.push(i as f64);
                pts.push(j as f64);
            }
        }
        let tree = KdTree::new(2, &pts);
        for i in 0..29 {
            for j in 0..29 {
                let x = [i as f64 + 0.5, j as f64 + 0.5];
                assert_eq!(tree.nearest(&x), Some(brute(&pts, 2, &x)));
            }
        }
    }
}
