use std::sync::Arc;

use rand::Rng;
use rand_distr::{Open01, StandardNormal};

use super::{Distribution1D, DistributionNd};
use crate::error::{Error, Result};
use crate::seed::SampleRng;

/// Standard normal law on `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalNd {
    d: usize,
}

impl NormalNd {
    pub fn new(d: usize) -> Self {
        Self { d }
    }
}

impl DistributionNd for NormalNd {
    fn name(&self) -> String {
        format!("normal_nd({})", self.d)
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn sample(&self, rng: &mut SampleRng, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
    }

    fn density(&self, x: &[f64]) -> Option<f64> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Some((-0.5 * r2).exp() / (2.0 * std::f64::consts::PI).powf(0.5 * self.d as f64))
    }

    fn mean(&self) -> Vec<f64> {
        vec![0.0; self.d]
    }
}

/// Uniform law on `[0, 1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformCube {
    d: usize,
}

impl UniformCube {
    pub fn new(d: usize) -> Self {
        Self { d }
    }
}

impl DistributionNd for UniformCube {
    fn name(&self) -> String {
        format!("uniform_nd({})", self.d)
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn sample(&self, rng: &mut SampleRng, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = rng.random::<f64>();
        }
    }

    fn density(&self, x: &[f64]) -> Option<f64> {
        Some(if x.iter().all(|v| (0.0..=1.0).contains(v)) { 1.0 } else { 0.0 })
    }

    fn mean(&self) -> Vec<f64> {
        vec![0.5; self.d]
    }
}

/// A scalar law viewed as a sampleable law on `R^1` (inverse-cdf sampling).
#[derive(Debug, Clone)]
pub struct Wrapped1D {
    inner: Arc<dyn Distribution1D>,
}

impl Wrapped1D {
    pub fn new(inner: Arc<dyn Distribution1D>) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &Arc<dyn Distribution1D> {
        &self.inner
    }
}

impl DistributionNd for Wrapped1D {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn dim(&self) -> usize {
        1
    }

    fn sample(&self, rng: &mut SampleRng, out: &mut [f64]) {
        let u: f64 = rng.sample(Open01);
        out[0] = self.inner.quantile(u);
    }

    fn density(&self, x: &[f64]) -> Option<f64> {
        self.inner.has_density().then(|| self.inner.pdf(x[0]))
    }

    fn mean(&self) -> Vec<f64> {
        vec![self.inner.mean()]
    }
}

/// Uniform law on a finite point cloud, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Empirical {
    d: usize,
    points: Vec<f64>,
}

impl Empirical {
    pub fn new(d: usize, points: Vec<f64>) -> Result<Self> {
        if d == 0 || points.is_empty() || !points.len().is_multiple_of(d) {
            return Err(Error::InvalidParameter(format!(
                "empirical law needs a non-empty multiple of {d} coordinates, got {}",
                points.len()
            )));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("empirical law has non-finite coordinates".into()));
        }
        Ok(Self { d, points })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl DistributionNd for Empirical {
    fn name(&self) -> String {
        format!("empirical({}x{})", self.len(), self.d)
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn sample(&self, rng: &mut SampleRng, out: &mut [f64]) {
        let i = rng.random_range(0..self.len());
        out.copy_from_slice(&self.points[i * self.d..(i + 1) * self.d]);
    }

    fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for row in self.points.chunks_exact(self.d) {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Normal;
    use crate::seed::SeedStream;

    #[test]
    fn normal_nd_sample_moments() {
        let d = NormalNd::new(2);
        let mut rng = SeedStream::new(3).rng(0);
        let mut x = [0.0; 2];
        let (mut s, mut s2) = (0.0, 0.0);
        let n = 200_000;
        for _ in 0..n {
            d.sample(&mut rng, &mut x);
            s += x[0] + x[1];
            s2 += x[0] * x[0] + x[1] * x[1];
        }
        assert!((s / (2.0 * n as f64)).abs() < 0.01);
        assert!((s2 / (2.0 * n as f64) - 1.0).abs() < 0.01);
    }

    #[test]
    fn wrapped_samples_follow_the_scalar_law() {
        let w = Wrapped1D::new(Arc::new(Normal::new(2.0, 0.5).unwrap()));
        let mut rng = SeedStream::new(1).rng(0);
        let mut x = [0.0];
        let n = 100_000;
        let mut s = 0.0;
        for _ in 0..n {
            w.sample(&mut rng, &mut x);
            s += x[0];
        }
        assert!((s / n as f64 - 2.0).abs() < 0.01);
    }

    #[test]
    fn empirical_validation_and_mean() {
        assert!(Empirical::new(2, vec![1.0, 2.0, 3.0]).is_err());
        let e = Empirical::new(2, vec![0.0, 0.0, 2.0, 4.0]).unwrap();
        assert_eq!(e.mean(), vec![1.0, 2.0]);
        let mut rng = SeedStream::new(0).rng(0);
        let mut x = [0.0; 2];
        e.sample(&mut rng, &mut x);
        assert!(x == [0.0, 0.0] || x == [2.0, 4.0]);
    }
}
