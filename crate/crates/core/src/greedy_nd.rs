//! Stochastic greedy quantization in any dimension.
//!
//! Each level freezes `a^{(N-1)}` and moves a single point `a_N`, either by
//! randomized Lloyd I (cell centroids estimated from a fresh batch per sweep)
//! or by CLVQ, a stochastic gradient step taken only when `a_N` wins the
//! nearest-neighbour competition, with Ruppert-Polyak averaging.
//!
//! Random streams: level `N` uses `root.derive(N)`; below it tag 0 draws the
//! start candidates, tag 1 the sweep batches (`derive(sweep)`), tag 2 the
//! stationarity batch and tag 3 the CLVQ stimuli. The distortion trajectory is
//! evaluated on one shared batch drawn from `root.derive(EVAL_TAG)`.

use crate::distortion::{map_chunks, mc_estimate, powered, DistortionMethod, DistortionRecord, KahanSum};
use crate::distributions::DistributionNd;
use crate::error::{Error, Result};
use crate::greedy1d::{GreedySequence, LevelStats, Solver};
use crate::kdtree::dist2;
use crate::quantizer::Quantizer;
use crate::seed::SeedStream;

pub const EVAL_TAG: u64 = u64::MAX;

const START_TAG: u64 = 0;
const SWEEP_TAG: u64 = 1;
const CHECK_TAG: u64 = 2;
const CLVQ_TAG: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticRunConfig {
    /// `M(N) = max(1, mc_per_level * N)` samples per sweep (CLVQ: steps).
    pub mc_per_level: usize,
    pub max_sweeps: usize,
    /// Sweeps stop when the movement is at most `tol_factor` times the local
    /// RMS distance of the cell samples to the iterate.
    pub tol_factor: f64,
    pub clvq_c: f64,
    pub clvq_alpha: f64,
    /// Report the Ruppert-Polyak average (CLVQ) or the mean of the second
    /// half of the sweep iterates (randomized Lloyd) instead of the last
    /// iterate.
    pub averaging: bool,
    pub start_candidates: usize,
    pub start_rule: StartRule,
    pub max_empty_restarts: usize,
    /// Shared evaluation batch for the distortion trajectory.
    pub eval_samples: usize,
    pub seed: u64,
}

impl Default for StochasticRunConfig {
    fn default() -> Self {
        StochasticRunConfig {
            mc_per_level: 1000,
            max_sweeps: 50,
            tol_factor: 1e-4,
            clvq_c: 1.0,
            clvq_alpha: 0.75,
            averaging: true,
            start_candidates: 64,
            start_rule: StartRule::BestReduction,
            max_empty_restarts: 5,
            eval_samples: 1_000_000,
            seed: 0,
        }
    }
}

impl StochasticRunConfig {
    pub fn samples(&self, level: usize) -> usize {
        (self.mc_per_level * level).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.mc_per_level == 0 {
            return bad("samples per level must be positive");
        }
        if !(self.clvq_alpha > 0.5 && self.clvq_alpha < 1.0) {
            return bad("CLVQ exponent alpha must lie in (1/2, 1)");
        }
        if !(self.clvq_c > 0.0) || !self.clvq_c.is_finite() {
            return bad("CLVQ constant c must be positive");
        }
        if self.max_sweeps == 0 || self.start_candidates == 0 || self.eval_samples == 0 {
            return bad("sweeps, start candidates and evaluation samples must be positive");
        }
        Ok(())
    }

    /// `gamma_n = c / (c + n^alpha)`.
    pub fn clvq_step(&self, n: usize) -> f64 {
        self.clvq_c / (self.clvq_c + (n as f64).powf(self.clvq_alpha))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CellStats {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    count: u64,
    // squared distances of the cell samples to the iterate
    dist_sq: f64,
}

impl CellStats {
    fn new(d: usize) -> Self {
        CellStats { sum: vec![0.0; d], sum_sq: vec![0.0; d], count: 0, dist_sq: 0.0 }
    }

    fn merge(&mut self, o: &CellStats) {
        self.sum.iter_mut().zip(&o.sum).for_each(|(a, b)| *a += b);
        self.sum_sq.iter_mut().zip(&o.sum_sq).for_each(|(a, b)| *a += b);
        self.count += o.count;
        self.dist_sq += o.dist_sq;
    }

    fn centroid(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Standard errors of the centroid coordinates.
    fn std_errors(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, s2)| {
                let m = s / n;
                let var = if n > 1.0 { ((s2 - n * m * m) / (n - 1.0)).max(0.0) } else { 0.0 };
                (var / n).sqrt()
            })
            .collect()
    }
}

fn cell_batch(dist: &dyn DistributionNd, frozen: &Quantizer, a: &[f64], m: usize, stream: SeedStream) -> CellStats {
    let d = a.len();
    let parts = map_chunks(m, |c, _, len| {
        let mut rng = stream.rng(c);
        let mut x = vec![0.0; d];
        let mut st = CellStats::new(d);
        for _ in 0..len {
            dist.sample(&mut rng, &mut x);
            let r2 = dist2(&x, a);
            if !frozen.exists_closer(&x, r2) {
                st.count += 1;
                st.dist_sq += r2;
                for ((s, s2), &v) in st.sum.iter_mut().zip(st.sum_sq.iter_mut()).zip(&x) {
                    *s += v;
                    *s2 += v * v;
                }
            }
        }
        st
    });
    let mut total = CellStats::new(d);
    parts.iter().for_each(|p| total.merge(p));
    total
}

/// The batch sample farthest from `frozen + {a}` (first one on ties).
fn farthest_in_batch(
    dist: &dyn DistributionNd,
    frozen: &Quantizer,
    a: &[f64],
    m: usize,
    stream: SeedStream,
) -> Vec<f64> {
    let d = a.len();
    let parts = map_chunks(m, |c, _, len| {
        let mut rng = stream.rng(c);
        let mut x = vec![0.0; d];
        let mut best = (f64::NEG_INFINITY, vec![0.0; d]);
        for _ in 0..len {
            dist.sample(&mut rng, &mut x);
            let r2 = frozen.nearest_sq(&x).map_or(f64::INFINITY, |(_, v)| v).min(dist2(&x, a));
            if r2 > best.0 {
                best = (r2, x.clone());
            }
        }
        best
    });
    parts.into_iter().fold((f64::NEG_INFINITY, a.to_vec()), |acc, p| if p.0 > acc.0 { p } else { acc }).1
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedLloydOutcome {
    pub a: Vec<f64>,
    /// Movement of the last sweep.
    pub residual: f64,
    pub sweeps: usize,
    pub restarts: usize,
    /// Iterates after every sweep, row-major.
    pub iterates: Vec<f64>,
}

fn check_level_input(dist: &dyn DistributionNd, frozen: &Quantizer, start: &[f64]) -> Result<()> {
    if start.len() != dist.dim() || frozen.dim() != dist.dim() {
        return Err(Error::DimensionMismatch { expected: dist.dim(), found: start.len() });
    }
    if frozen.nearest_sq(start).is_some_and(|(_, d2)| d2 == 0.0) {
        return Err(Error::InvalidParameter("start point coincides with a frozen point".into()));
    }
    Ok(())
}

/// Randomized greedy Lloyd I for the point added to `frozen`.
pub fn randomized_lloyd_level(
    dist: &dyn DistributionNd,
    frozen: &Quantizer,
    start: &[f64],
    cfg: &StochasticRunConfig,
    stream: SeedStream,
) -> Result<RandomizedLloydOutcome> {
    check_level_input(dist, frozen, start)?;
    let m = cfg.samples(frozen.len() + 1);
    let d = start.len();
    let sweeps_stream = stream.derive(SWEEP_TAG);
    let mut a = start.to_vec();
    let mut residual = f64::INFINITY;
    let mut restarts = 0;
    let mut iterates = Vec::new();
    // index (in sweeps) of the first iterate since the last restart
    let mut run_start = 0;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        let batch = sweeps_stream.derive(sweeps as u64);
        sweeps += 1;
        let st = cell_batch(dist, frozen, &a, m, batch);
        if st.count == 0 {
            restarts += 1;
            if restarts >= cfg.max_empty_restarts {
                return Err(Error::RepeatedEmptyCell { attempts: restarts });
            }
            a = farthest_in_batch(dist, frozen, &a, m, batch);
            iterates.extend_from_slice(&a);
            run_start = sweeps;
            continue;
        }
        let next = st.centroid();
        residual = dist2(&next, &a).sqrt();
        let rms = (st.dist_sq / st.count as f64).sqrt();
        a = next;
        iterates.extend_from_slice(&a);
        if residual <= cfg.tol_factor * rms {
            break;
        }
    }
    if cfg.averaging {
        let run = &iterates[run_start * d..];
        let k = run.len() / d;
        let tail = &run[(k / 2) * d..];
        let cnt = (tail.len() / d) as f64;
        let mut avg = vec![0.0; d];
        for row in tail.chunks_exact(d) {
            avg.iter_mut().zip(row).for_each(|(s, v)| *s += v);
        }
        avg.iter_mut().for_each(|s| *s /= cnt);
        if frozen.nearest_sq(&avg).is_some_and(|(_, d2)| d2 == 0.0) {
            return Err(Error::DuplicatePoint { index: frozen.len() });
        }
        a = avg;
    }
    Ok(RandomizedLloydOutcome { a, residual, sweeps, restarts, iterates })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClvqOutcome {
    pub last: Vec<f64>,
    /// `(a_0 + ... + a_{n-1}) / n`.
    pub averaged: Vec<f64>,
    pub wins: usize,
}

/// Greedy CLVQ: `a <- a - gamma_n (a - X_n)` whenever `a` is strictly closer
/// to `X_n` than every frozen point.
pub fn clvq_level(
    dist: &dyn DistributionNd,
    frozen: &Quantizer,
    start: &[f64],
    cfg: &StochasticRunConfig,
    stream: SeedStream,
) -> Result<ClvqOutcome> {
    check_level_input(dist, frozen, start)?;
    cfg.validate()?;
    let steps = cfg.samples(frozen.len() + 1);
    let d = start.len();
    let mut rng = stream.derive(CLVQ_TAG).rng(0);
    let mut a = start.to_vec();
    let mut sum: Vec<KahanSum> = vec![KahanSum::default(); d];
    let mut x = vec![0.0; d];
    let mut wins = 0;
    for n in 1..=steps {
        sum.iter_mut().zip(&a).for_each(|(s, v)| s.add(*v));
        dist.sample(&mut rng, &mut x);
        let r2 = dist2(&x, &a);
        if !frozen.exists_within(&x, r2) {
            wins += 1;
            let g = cfg.clvq_step(n);
            a.iter_mut().zip(&x).for_each(|(ak, xk)| *ak -= g * (*ak - xk));
        }
    }
    let averaged = sum.iter().map(|s| s.value() / steps as f64).collect();
    Ok(ClvqOutcome { last: a, averaged, wins })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityCheck {
    pub centroid: Vec<f64>,
    pub distance: f64,
    /// Three standard errors of the centroid estimate (Euclidean norm).
    pub bound: f64,
    pub cell_samples: u64,
    pub passed: bool,
}

/// Compares `a` with its cell centroid estimated from `samples` fresh draws.
pub fn stationarity_check(
    dist: &dyn DistributionNd,
    frozen: &Quantizer,
    a: &[f64],
    samples: usize,
    stream: SeedStream,
) -> Result<StationarityCheck> {
    let st = cell_batch(dist, frozen, a, samples, stream);
    if st.count == 0 {
        return Err(Error::RepeatedEmptyCell { attempts: 1 });
    }
    let centroid = st.centroid();
    let distance = dist2(&centroid, a).sqrt();
    let bound = 3.0 * st.std_errors().iter().map(|s| s * s).sum::<f64>().sqrt();
    Ok(StationarityCheck { centroid, distance, bound, cell_samples: st.count, passed: distance <= bound })
}

/// Distortion of a growing grid on a fixed sample batch. Matches
/// [`crate::distortion::distortion_mc`] with the same stream bit for bit.
#[derive(Debug, Clone)]
pub struct IncrementalDistortion {
    d: usize,
    p: f64,
    samples: Vec<f64>,
    best: Vec<f64>,
}

impl IncrementalDistortion {
    pub fn new(dist: &dyn DistributionNd, p: f64, n: usize, stream: SeedStream) -> Self {
        let d = dist.dim();
        let parts = map_chunks(n, |c, _, len| {
            let mut rng = stream.rng(c);
            let mut out = vec![0.0; len * d];
            for row in out.chunks_exact_mut(d) {
                dist.sample(&mut rng, row);
            }
            out
        });
        IncrementalDistortion { d, p, samples: parts.concat(), best: vec![f64::INFINITY; n] }
    }

    pub fn add_point(&mut self, a: &[f64]) {
        let d = self.d;
        use rayon::prelude::*;
        self.best.par_iter_mut().zip(self.samples.par_chunks_exact(d)).for_each(|(b, x)| *b = b.min(dist2(x, a)));
    }

    pub fn record(&self, level: usize) -> DistortionRecord {
        let n = self.best.len();
        let p = self.p;
        let parts = map_chunks(n, |_, start, len| {
            let (mut s, mut s2) = (0.0, 0.0);
            for &d2 in &self.best[start..start + len] {
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
        let (value, std_error) = mc_estimate(s.value(), s2.value(), n, p);
        DistortionRecord { level, p, value, method: DistortionMethod::MonteCarlo, mc_samples: n, std_error }
    }
}

/// How the start point of a level is chosen among the candidate draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartRule {
    /// Farthest candidate from the frozen points.
    Farthest,
    /// Candidate whose addition lowers the distortion of a screening batch
    /// of `M(N)` draws the most.
    BestReduction,
}

fn start_point_reduction(
    dist: &dyn DistributionNd,
    frozen: &Quantizer,
    k: usize,
    m: usize,
    stream: SeedStream,
) -> Vec<f64> {
    let d = dist.dim();
    let mut rng = stream.rng(0);
    let mut cands = vec![0.0; k * d];
    for row in cands.chunks_exact_mut(d) {
        dist.sample(&mut rng, row);
    }
    let screen = stream.derive(1);
    let parts = map_chunks(m, |c, _, len| {
        let mut rng = screen.rng(c);
        let mut x = vec![0.0; d];
        let mut gain = vec![0.0; k];
        for _ in 0..len {
            dist.sample(&mut rng, &mut x);
            let cur = frozen.nearest_sq(&x).map_or(f64::INFINITY, |(_, v)| v);
            for (g, c) in gain.iter_mut().zip(cands.chunks_exact(d)) {
                let r2 = dist2(&x, c);
                if r2 < cur {
                    *g += cur - r2;
                }
            }
        }
        gain
    });
    let mut gain = vec![0.0; k];
    for p in parts {
        gain.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    let mut best = 0;
    for i in 1..k {
        if gain[i] > gain[best] {
            best = i;
        }
    }
    cands[best * d..(best + 1) * d].to_vec()
}

fn start_point(dist: &dyn DistributionNd, frozen: &Quantizer, k: usize, stream: SeedStream) -> Vec<f64> {
    let d = dist.dim();
    let mut rng = stream.rng(0);
    let mut x = vec![0.0; d];
    let mut best = (f64::NEG_INFINITY, vec![0.0; d]);
    for _ in 0..k {
        dist.sample(&mut rng, &mut x);
        let r2 = frozen.nearest_sq(&x).map_or(f64::INFINITY, |(_, v)| v);
        if r2 > best.0 {
            best = (r2, x.clone());
        }
    }
    best.1
}

/// Greedy sequence by a stochastic solver. `a_1` is the mean of the law;
/// the start of level `N >= 2` is picked by `cfg.start_rule`.
/// Every level is followed by a stationarity check on `M(N)` fresh samples.
pub fn build_greedy_nd(
    dist: &dyn DistributionNd,
    n_max: usize,
    cfg: &StochasticRunConfig,
    solver: Solver,
) -> Result<GreedySequence> {
    cfg.validate()?;
    if n_max == 0 {
        return Err(Error::InvalidParameter("level cap must be at least 1".into()));
    }
    if !matches!(solver, Solver::RandomizedLloyd | Solver::Clvq) {
        return Err(Error::Unsupported(format!("solver `{}` is not stochastic", solver.as_str())));
    }
    let d = dist.dim();
    let root = SeedStream::new(cfg.seed);
    let mut eval = IncrementalDistortion::new(dist, 2.0, cfg.eval_samples, root.derive(EVAL_TAG));
    let mut frozen = Quantizer::empty(d);
    let mut levels = Vec::with_capacity(n_max);
    let mut trajectory = Vec::with_capacity(n_max);
    for level in 1..=n_max {
        let stream = root.derive(level as u64);
        let (a, start, iters, residual, restarts) = if level == 1 {
            let m = dist.mean();
            (m.clone(), m, 0, 0.0, 0)
        } else {
            let start = match cfg.start_rule {
                StartRule::Farthest => start_point(dist, &frozen, cfg.start_candidates, stream.derive(START_TAG)),
                StartRule::BestReduction => start_point_reduction(
                    dist,
                    &frozen,
                    cfg.start_candidates,
                    cfg.samples(level),
                    stream.derive(START_TAG),
                ),
            };
            match solver {
                Solver::RandomizedLloyd => {
                    let o =
                        randomized_lloyd_level(dist, &frozen, &start, cfg, stream).map_err(|e| e.at_level(level))?;
                    (o.a, start, o.sweeps, o.residual, o.restarts)
                }
                _ => {
                    let o = clvq_level(dist, &frozen, &start, cfg, stream).map_err(|e| e.at_level(level))?;
                    let residual = dist2(&o.last, &o.averaged).sqrt();
                    let a = if cfg.averaging { o.averaged } else { o.last };
                    (a, start, cfg.samples(level), residual, 0)
                }
            }
        };
        let check = stationarity_check(dist, &frozen, &a, cfg.samples(level), stream.derive(CHECK_TAG))
            .map_err(|e| e.at_level(level))?;
        frozen = frozen.with_point(&a).map_err(|e| e.at_level(level))?;
        eval.add_point(&a);
        trajectory.push(eval.record(level));
        levels.push(LevelStats {
            level,
            start,
            bracket: None,
            iters,
            residual,
            stationarity: check.distance,
            stationarity_bound: Some(check.bound),
            restarts,
        });
    }
    Ok(GreedySequence { dim: d, points: frozen.points().to_vec(), trajectory, solver, levels, saturated: false })
}
