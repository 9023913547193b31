//! Finite codebooks with a nearest-neighbour index.

use crate::error::{Error, Result};
use crate::kdtree::{dist2, KdTree};

/// Above this many points, `d >= 2` queries go through the kd-tree.
const LINEAR_SCAN_MAX: usize = 512;
/// Strict-closeness queries switch to the tree much earlier.
const CLOSER_TREE_MIN: usize = 24;

#[derive(Debug, Clone)]
pub struct Quantizer {
    d: usize,
    points: Vec<f64>,
    // d = 1: increasing values and their original indices
    sorted: Vec<f64>,
    order: Vec<usize>,
    tree: Option<KdTree>,
}

impl Quantizer {
    /// Row-major points; they must be finite and pairwise distinct. An empty
    /// quantizer is allowed (it stands for an empty frozen set).
    pub fn new(d: usize, points: Vec<f64>) -> Result<Self> {
        if d == 0 || !points.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch { expected: d, found: points.len() });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("quantizer points must be finite".into()));
        }
        let n = points.len() / d;
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            points[a * d..(a + 1) * d]
                .iter()
                .zip(&points[b * d..(b + 1) * d])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in idx.windows(2) {
            if points[w[0] * d..(w[0] + 1) * d] == points[w[1] * d..(w[1] + 1) * d] {
                return Err(Error::DuplicatePoint { index: w[0].max(w[1]) });
            }
        }
        let (sorted, order) =
            if d == 1 { (idx.iter().map(|&i| points[i]).collect(), idx) } else { (Vec::new(), Vec::new()) };
        let tree = (d >= 2 && n >= CLOSER_TREE_MIN).then(|| KdTree::new(d, &points));
        Ok(Quantizer { d, points, sorted, order, tree })
    }

    pub fn from_1d(points: &[f64]) -> Result<Self> {
        Self::new(1, points.to_vec())
    }

    pub fn empty(d: usize) -> Self {
        Quantizer { d, points: Vec::new(), sorted: Vec::new(), order: Vec::new(), tree: None }
    }

    /// A copy with `x` appended.
    pub fn with_point(&self, x: &[f64]) -> Result<Self> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: x.len() });
        }
        let mut pts = self.points.clone();
        pts.extend_from_slice(x);
        Self::new(self.d, pts)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Increasing point values (`d = 1` only, empty otherwise).
    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// Permutation mapping sorted position to point index (`d = 1` only).
    pub fn sorted_view(&self) -> &[usize] {
        &self.order
    }

    /// `(index, Euclidean distance)` of the nearest point.
    pub fn nearest(&self, x: &[f64]) -> Result<(usize, f64)> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: x.len() });
        }
        let (i, d2) = self.nearest_sq(x).ok_or(Error::EmptyQuantizer)?;
        Ok((i, d2.sqrt()))
    }

    /// `(index, squared distance)`; `None` when empty. No dimension check.
    pub fn nearest_sq(&self, x: &[f64]) -> Option<(usize, f64)> {
        if self.is_empty() {
            return None;
        }
        if self.d == 1 {
            return Some(self.nearest_1d(x[0]));
        }
        match &self.tree {
            Some(t) if self.len() > LINEAR_SCAN_MAX => t.nearest(x),
            _ => Some(self.nearest_linear(x)),
        }
    }

    fn nearest_1d(&self, x: f64) -> (usize, f64) {
        let s = &self.sorted;
        let pos = s.partition_point(|&v| v < x);
        let mut best = (usize::MAX, f64::INFINITY);
        for k in [pos.wrapping_sub(1), pos] {
            if let Some(&v) = s.get(k) {
                let t = x - v;
                let d2 = t * t;
                let i = self.order[k];
                if d2 < best.1 || (d2 == best.1 && i < best.0) {
                    best = (i, d2);
                }
            }
        }
        best
    }

    /// Reference linear scan, `(index, squared distance)`.
    pub fn nearest_linear(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in self.points.chunks_exact(self.d).enumerate() {
            let d2 = dist2(x, p);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best
    }

    /// Whether some point lies at squared distance strictly below `r2`.
    pub fn exists_closer(&self, x: &[f64], r2: f64) -> bool {
        if self.d == 1 {
            return self.nearest_sq(x).is_some_and(|(_, d2)| d2 < r2);
        }
        match &self.tree {
            Some(t) => t.exists_closer(x, r2),
            None => self.points.chunks_exact(self.d).any(|p| dist2(x, p) < r2),
        }
    }

    /// Whether some point lies at squared distance at most `r2`.
    pub fn exists_within(&self, x: &[f64], r2: f64) -> bool {
        if self.d == 1 {
            return self.nearest_sq(x).is_some_and(|(_, d2)| d2 <= r2);
        }
        match &self.tree {
            Some(t) => t.exists_within(x, r2),
            None => self.points.chunks_exact(self.d).any(|p| dist2(x, p) <= r2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn nearest_examples() {
        let q = Quantizer::from_1d(&[0.5]).unwrap();
        let (i, d) = q.nearest(&[0.3]).unwrap();
        assert_eq!(i, 0);
        assert!((d - 0.2).abs() < 1e-15);
        let q = Quantizer::from_1d(&[0.25, 0.5]).unwrap();
        assert_eq!(q.nearest(&[0.375]).unwrap(), (0, 0.125));
        let q = Quantizer::from_1d(&[0.5, 0.25]).unwrap();
        assert_eq!(q.nearest(&[0.375]).unwrap(), (0, 0.125));
        let q = Quantizer::new(2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let (i, d) = q.nearest(&[0.9, 0.9]).unwrap();
        assert_eq!(i, 1);
        assert!((d - 0.02f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(matches!(Quantizer::from_1d(&[0.1, 0.2, 0.1]), Err(Error::DuplicatePoint { index: 2 })));
        assert!(matches!(Quantizer::new(2, vec![1.0, 2.0, 3.0]), Err(Error::DimensionMismatch { .. })));
        let q = Quantizer::new(2, vec![0.0, 0.0]).unwrap();
        assert!(matches!(q.nearest(&[0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(Quantizer::empty(1).nearest(&[0.0]), Err(Error::EmptyQuantizer)));
    }

    #[test]
    fn sorted_view_is_increasing() {
        let q = Quantizer::from_1d(&[0.7, -1.0, 0.2, 3.0]).unwrap();
        assert_eq!(q.sorted_view(), &[1, 2, 0, 3]);
        assert!(q.sorted_values().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn accelerated_paths_agree_with_linear_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (d, n) in [(1, 300), (2, 40), (2, 900), (3, 600)] {
            let pts: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
            let q = Quantizer::new(d, pts).unwrap();
            for _ in 0..1000 {
                let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let fast = q.nearest_sq(&x).unwrap();
                assert_eq!(fast, q.nearest_linear(&x));
                assert!(!q.exists_closer(&x, fast.1));
            }
        }
    }

    proptest! {
        #[test]
        fn one_d_ties_pick_smallest_index(a in -5.0f64..5.0, h in 0.01f64..3.0, swap: bool) {
            let pts = if swap { [a + 2.0 * h, a] } else { [a, a + 2.0 * h] };
            let q = Quantizer::from_1d(&pts).unwrap();
            let x = [0.5 * (pts[0] + pts[1])];
            let (i, _) = q.nearest(&x).unwrap();
            let lin = q.nearest_linear(&x).0;
            prop_assert_eq!(i, lin);
        }
    }
}
