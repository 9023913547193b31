//! `L^p` quantization errors, Voronoi weights and quantization-based cubature.

use rayon::prelude::*;

use crate::distributions::{Distribution1D, DistributionNd};
use crate::error::{Error, Result};
use crate::quantizer::Quantizer;
use crate::seed::{self, SeedStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionMethod {
    Exact1d,
    MonteCarlo,
}

impl DistortionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistortionMethod::Exact1d => "exact1d",
            DistortionMethod::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionRecord {
    pub level: usize,
    pub p: f64,
    pub value: f64,
    pub method: DistortionMethod,
    pub mc_samples: usize,
    pub std_error: f64,
}

impl DistortionRecord {
    pub fn exact(level: usize, p: f64, value: f64) -> Self {
        DistortionRecord { level, p, value, method: DistortionMethod::Exact1d, mc_samples: 0, std_error: 0.0 }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Voronoi cells `[l_i, r_i]` of increasing points: midpoints between
/// neighbours, infinite at the ends.
pub fn voronoi_cells_1d(sorted: &[f64]) -> Vec<(f64, f64)> {
    let n = sorted.len();
    (0..n)
        .map(|i| {
            let l = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (sorted[i - 1] + sorted[i]) };
            let r = if i + 1 == n { f64::INFINITY } else { 0.5 * (sorted[i] + sorted[i + 1]) };
            (l, r)
        })
        .collect()
}

/// `e_p^p` of a one-dimensional grid, summed cell by cell.
pub fn distortion_power_1d(dist: &dyn Distribution1D, sorted: &[f64], p: f64) -> Result<f64> {
    let mut acc = KahanSum::default();
    for (&a, (l, r)) in sorted.iter().zip(voronoi_cells_1d(sorted)) {
        acc.add(dist.power_moment(a, l, r, p)?);
    }
    Ok(acc.value().max(0.0))
}

/// `e_p` of every prefix `points[..N]`, `N = 1..=len`, in insertion order.
/// Cell contributions are cached; each prefix total is re-summed with
/// compensation, so no error accumulates along the sequence.
pub fn prefix_distortions_1d(dist: &dyn Distribution1D, points: &[f64], p: f64) -> Result<Vec<f64>> {
    let mut sorted: Vec<f64> = Vec::with_capacity(points.len());
    let mut cells: Vec<f64> = Vec::with_capacity(points.len());
    let mut out = Vec::with_capacity(points.len());
    let cell = |sorted: &[f64], i: usize| -> Result<f64> {
        let a = sorted[i];
        let l = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (sorted[i - 1] + a) };
        let r = sorted.get(i + 1).map_or(f64::INFINITY, |&b| 0.5 * (a + b));
        dist.power_moment(a, l, r, p)
    };
    for (k, &a) in points.iter().enumerate() {
        let pos = sorted.partition_point(|&v| v < a);
        if sorted.get(pos) == Some(&a) {
            return Err(Error::DuplicatePoint { index: k });
        }
        sorted.insert(pos, a);
        cells.insert(pos, 0.0);
        let lo = pos.saturating_sub(1);
        let hi = (pos + 2).min(sorted.len());
        for (i, c) in (lo..hi).zip(&mut cells[lo..hi]) {
            *c = cell(&sorted, i)?;
        }
        let mut acc = KahanSum::default();
        cells.iter().for_each(|&c| acc.add(c));
        out.push(acc.value().max(0.0).powf(1.0 / p));
    }
    Ok(out)
}

pub fn distortion_exact_1d(dist: &dyn Distribution1D, q: &Quantizer, p: f64) -> Result<DistortionRecord> {
    if q.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: q.dim() });
    }
    if q.is_empty() {
        return Err(Error::EmptyQuantizer);
    }
    let v = distortion_power_1d(dist, q.sorted_values(), p)?;
    Ok(DistortionRecord::exact(q.len(), p, v.powf(1.0 / p)))
}

/// `(value, std_error)` of `(E D^p)^(1/p)` from the sample sums of `D^p`
/// and `D^2p` (delta method).
pub fn mc_estimate(sum: f64, sum_sq: f64, n: usize, p: f64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    let se_mean = (var / nf).sqrt();
    let value = mean.powf(1.0 / p);
    let se = if mean > 0.0 { value / (p * mean) * se_mean } else { 0.0 };
    (value, se)
}

#[inline]
pub(crate) fn powered(d2: f64, p: f64) -> f64 {
    if p == 2.0 {
        d2
    } else {
        d2.powf(0.5 * p)
    }
}

/// Runs `f` over every chunk of an `n`-sample batch in parallel and returns
/// the per-chunk results in chunk order.
pub(crate) fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, usize, usize) -> T + Sync,
{
    let chunks: Vec<_> = seed::chunks(n).collect();
    chunks.into_par_iter().map(|(c, start, len)| f(c, start, len)).collect()
}

pub fn distortion_mc(
    dist: &dyn DistributionNd,
    q: &Quantizer,
    p: f64,
    samples: usize,
    seed: SeedStream,
) -> Result<DistortionRecord> {
    if dist.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), found: dist.dim() });
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    if q.is_empty() {
        return Err(Error::EmptyQuantizer);
    }
    let d = dist.dim();
    let parts = map_chunks(samples, |c, _, len| {
        let mut rng = seed.rng(c);
        let mut x = vec![0.0; d];
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..len {
            dist.sample(&mut rng, &mut x);
            let (_, d2) = q.nearest_sq(&x).expect("non-empty");
            let v = powered(d2, p);
            s += v;
            s2 += v * v;
        }
        (s, s2)
    });
    let (mut s, mut s2) = (KahanSum::default(), KahanSum::default());
    for (a, b) in parts {
        s.add(a);
        s2.add(b);
    }
    let (value, std_error) = mc_estimate(s.value(), s2.value(), samples, p);
    Ok(DistortionRecord {
        level: q.len(),
        p,
        value,
        method: DistortionMethod::MonteCarlo,
        mc_samples: samples,
        std_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiWeights {
    pub weights: Vec<f64>,
    /// 0 for weights computed exactly.
    pub estimation_samples: usize,
}

pub fn voronoi_weights(
    dist: &dyn DistributionNd,
    q: &Quantizer,
    samples: usize,
    seed: SeedStream,
) -> Result<VoronoiWeights> {
    if dist.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), found: dist.dim() });
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    if q.is_empty() {
        return Err(Error::EmptyQuantizer);
    }
    let (d, n) = (dist.dim(), q.len());
    let parts = map_chunks(samples, |c, _, len| {
        let mut rng = seed.rng(c);
        let mut x = vec![0.0; d];
        let mut counts = vec![0u64; n];
        for _ in 0..len {
            dist.sample(&mut rng, &mut x);
            counts[q.nearest_sq(&x).expect("non-empty").0] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; n];
    for part in parts {
        counts.iter_mut().zip(part).for_each(|(a, b)| *a += b);
    }
    Ok(VoronoiWeights {
        weights: counts.iter().map(|&k| k as f64 / samples as f64).collect(),
        estimation_samples: samples,
    })
}

/// Exact cell masses of a one-dimensional grid, in point order.
pub fn voronoi_weights_exact_1d(dist: &dyn Distribution1D, q: &Quantizer) -> Result<VoronoiWeights> {
    if q.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: q.dim() });
    }
    let mut w = vec![0.0; q.len()];
    for (k, (l, r)) in voronoi_cells_1d(q.sorted_values()).into_iter().enumerate() {
        w[q.sorted_view()[k]] = dist.mass(l, r);
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Ok(VoronoiWeights { weights: w, estimation_samples: 0 })
}

/// `sum_i w_i f(a_i)`; uniform weights when `w` is `None`.
pub fn cubature<F: Fn(&[f64]) -> f64>(f: F, q: &Quantizer, w: Option<&VoronoiWeights>) -> Result<f64> {
    if q.is_empty() {
        return Err(Error::EmptyQuantizer);
    }
    let n = q.len();
    if let Some(w) = w {
        if w.weights.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: w.weights.len() });
        }
    }
    let mut acc = KahanSum::default();
    for i in 0..n {
        let wi = w.map_or(1.0 / n as f64, |w| w.weights[i]);
        acc.add(wi * f(q.point(i)));
    }
    Ok(acc.value())
}
