//! Deterministic greedy quantization of scalar laws (`p = 2`).
//!
//! Level `N` keeps `a_1..a_{N-1}` frozen, picks the inter-point interval with
//! the largest local inertia and solves the one-point problem inside it,
//! either by the greedy Lloyd I fixed-point map or by the Newton-type
//! (greedy Forgy) zero search of the stationarity equation.

use std::sync::Arc;

use crate::distortion::{DistortionRecord, KahanSum};
use crate::distributions::{restricted_centroid, Conditioned, Distribution1D};
use crate::error::{Error, Result};
use crate::quantizer::Quantizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    Lloyd,
    Forgy,
    RandomizedLloyd,
    Clvq,
}

impl Solver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Solver::Lloyd => "lloyd",
            Solver::Forgy => "forgy",
            Solver::RandomizedLloyd => "rlloyd",
            Solver::Clvq => "clvq",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lloyd" => Ok(Solver::Lloyd),
            "forgy" | "newton" => Ok(Solver::Forgy),
            "rlloyd" | "randomized_lloyd" => Ok(Solver::RandomizedLloyd),
            "clvq" => Ok(Solver::Clvq),
            _ => Err(Error::Parse(format!("unknown solver `{s}` (lloyd, forgy, rlloyd, clvq)"))),
        }
    }
}

/// Step sizes `gamma_n` of the Newton iteration; the step actually taken is
/// `min(gamma_n, 1 / rho(a))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `gamma_n = +inf`: the step is `1 / rho(a)`.
    Newton,
    Constant(f64),
}

impl StepSchedule {
    fn gamma(&self, _n: usize) -> f64 {
        match *self {
            StepSchedule::Newton => f64::INFINITY,
            StepSchedule::Constant(g) => g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Greedy1dConfig {
    pub solver: Solver,
    pub tol: f64,
    pub max_iter: usize,
    pub steps: StepSchedule,
}

impl Default for Greedy1dConfig {
    fn default() -> Self {
        Greedy1dConfig { solver: Solver::Lloyd, tol: 1e-12, max_iter: 10_000, steps: StepSchedule::Newton }
    }
}

/// Result of a one-point inner solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSolve {
    pub a: f64,
    pub iters: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelStats {
    pub level: usize,
    pub start: Vec<f64>,
    /// 1-D only: frozen neighbours bounding the search interval (infinite
    /// when absent).
    pub bracket: Option<(f64, f64)>,
    pub iters: usize,
    /// Last iterate movement of the inner solver.
    pub residual: f64,
    /// `|a_N - E(X | X in W_N)|` for the final Voronoi cell `W_N` of `a_N`
    /// (estimated for the stochastic builders).
    pub stationarity: f64,
    /// Acceptance bound on `stationarity` for the stochastic builders
    /// (3 standard errors of the centroid estimate).
    pub stationarity_bound: Option<f64>,
    /// Empty-cell restarts of the randomized Lloyd iteration.
    pub restarts: usize,
}

impl LevelStats {
    fn exact(level: usize, left: f64, right: f64, start: f64, s: &InnerSolve, stationarity: f64) -> Self {
        LevelStats {
            level,
            start: vec![start],
            bracket: Some((left, right)),
            iters: s.iters,
            residual: s.residual,
            stationarity,
            stationarity_bound: None,
            restarts: 0,
        }
    }

    pub fn stationary(&self, tol: f64) -> bool {
        self.stationarity <= self.stationarity_bound.unwrap_or(tol)
    }
}

/// Points in insertion order (row-major when `dim > 1`) with the distortion
/// of every prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedySequence {
    pub dim: usize,
    pub points: Vec<f64>,
    pub trajectory: Vec<DistortionRecord>,
    pub solver: Solver,
    pub levels: Vec<LevelStats>,
    /// The law was exhausted (zero remaining inertia) before the level cap.
    pub saturated: bool,
}

impl GreedySequence {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// The first `n` points as a quantizer.
    pub fn prefix(&self, n: usize) -> Result<Quantizer> {
        Quantizer::new(self.dim, self.points[..n * self.dim].to_vec())
    }

    pub fn values(&self) -> Vec<f64> {
        self.trajectory.iter().map(|r| r.value).collect()
    }

    /// `N^{1/d} e_p(a^{(N)})` for every level.
    pub fn scaled_values(&self) -> Vec<f64> {
        self.trajectory.iter().map(|r| (r.level as f64).powf(1.0 / self.dim as f64) * r.value).collect()
    }
}

fn lower(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::NEG_INFINITY
    }
}

fn upper(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::INFINITY
    }
}

/// Voronoi cell of `a` between frozen neighbours `left < a < right`.
pub fn cell_of(left: f64, right: f64, a: f64) -> (f64, f64) {
    (0.5 * (lower(left) + a), 0.5 * (upper(right) + a))
}

/// `T(a) = E(X | X in [(left + a)/2, (right + a)/2])`.
pub fn lloyd_map(dist: &dyn Distribution1D, left: f64, right: f64, a: f64) -> Result<f64> {
    let (l, r) = cell_of(left, right, a);
    restricted_centroid(dist, l, r)
}

fn check_start(left: f64, right: f64, start: f64) -> Result<()> {
    if start > lower(left) && start < upper(right) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("start {start} is not inside ({left}, {right})")))
    }
}

/// Greedy Lloyd I: iterates [`lloyd_map`] until the movement is at most `tol`.
pub fn lloyd_fixed_point(
    dist: &dyn Distribution1D,
    left: f64,
    right: f64,
    start: f64,
    tol: f64,
    max_iter: usize,
) -> Result<InnerSolve> {
    check_start(left, right, start)?;
    let mut a = start;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let next = lloyd_map(dist, left, right, a)?;
        residual = (next - a).abs();
        a = next;
        if residual <= tol {
            return Ok(InnerSolve { a, iters: it, residual });
        }
    }
    Err(Error::NoConvergence { last: a, residual, iters: max_iter })
}

/// `rho(a)`: cell mass plus the two boundary-density terms; a boundary term
/// vanishes when its neighbour is infinite.
pub fn forgy_rho(dist: &dyn Distribution1D, left: f64, right: f64, a: f64) -> f64 {
    let (l, r) = cell_of(left, right, a);
    let mut rho = dist.mass(l, r);
    if left.is_finite() {
        rho += 0.5 * (a - left) * dist.pdf(l);
    }
    if right.is_finite() {
        rho += 0.5 * (right - a) * dist.pdf(r);
    }
    rho
}

/// Greedy Forgy: `a <- a - min(gamma_n, 1/rho(a)) (F a - K)` over the cell.
pub fn forgy_newton(
    dist: &dyn Distribution1D,
    left: f64,
    right: f64,
    start: f64,
    steps: StepSchedule,
    tol: f64,
    max_iter: usize,
) -> Result<InnerSolve> {
    if !dist.has_density() {
        return Err(Error::Unsupported("the Newton iteration needs a density".into()));
    }
    check_start(left, right, start)?;
    let mut a = start;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let (l, r) = cell_of(left, right, a);
        let m = dist.partial_moments(l, r);
        let rho = forgy_rho(dist, left, right, a);
        if !(rho > 0.0) {
            return Err(Error::CurvatureLoss { a, rho });
        }
        let step = steps.gamma(it).min(1.0 / rho);
        // m.mass * a - m.first, written around the centroid to avoid cancellation
        let c = dist.conditional_mean(l, r).ok_or(Error::EmptyCell { left: l, right: r })?;
        let g = m.mass * (a - c);
        let next = a - step * g;
        residual = (next - a).abs();
        a = next;
        if residual <= tol {
            return Ok(InnerSolve { a, iters: it, residual });
        }
    }
    Err(Error::NoConvergence { last: a, residual, iters: max_iter })
}

/// Local inertias of the intervals between sorted points.
#[derive(Debug, Clone, PartialEq)]
pub struct InertiaTable {
    pub sorted: Vec<f64>,
    /// `sigma[i]` belongs to `(sorted[i-1], sorted[i])`, with `sorted[-1] = -inf`
    /// and `sorted[n] = +inf`.
    pub sigma: Vec<f64>,
    pub argmax: usize,
}

/// Relative gap under which two inertias count as tied.
const TIE_RTOL: f64 = 1e-12;

fn interval_inertia(dist: &dyn Distribution1D, left: f64, right: f64) -> f64 {
    match (left.is_finite(), right.is_finite()) {
        (false, true) => dist.centered_second_moment(right, f64::NEG_INFINITY, right),
        (true, false) => dist.centered_second_moment(left, left, f64::INFINITY),
        (true, true) => {
            let m = 0.5 * (left + right);
            dist.centered_second_moment(left, left, m) + dist.centered_second_moment(right, m, right)
        }
        (false, false) => dist.centered_second_moment(dist.mean(), f64::NEG_INFINITY, f64::INFINITY),
    }
}

fn argmax_with_ties(sigma: &[f64]) -> usize {
    let max = sigma.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = max - TIE_RTOL * max.abs();
    sigma.iter().position(|&s| s >= floor).unwrap_or(0)
}

impl InertiaTable {
    fn bounds(&self, i: usize) -> (f64, f64) {
        let l = if i == 0 { f64::NEG_INFINITY } else { self.sorted[i - 1] };
        let r = self.sorted.get(i).copied().unwrap_or(f64::INFINITY);
        (l, r)
    }

    pub fn total(&self) -> f64 {
        let mut acc = KahanSum::default();
        self.sigma.iter().for_each(|&s| acc.add(s));
        acc.value()
    }

    fn insert(&mut self, dist: &dyn Distribution1D, a: f64) -> Result<()> {
        let pos = self.sorted.partition_point(|&v| v < a);
        if self.sorted.get(pos) == Some(&a) {
            return Err(Error::DuplicatePoint { index: pos });
        }
        let (l, r) = self.bounds(pos);
        self.sorted.insert(pos, a);
        self.sigma[pos] = interval_inertia(dist, l, a);
        self.sigma.insert(pos + 1, interval_inertia(dist, a, r));
        self.argmax = argmax_with_ties(&self.sigma);
        Ok(())
    }
}

pub fn inertia_table(dist: &dyn Distribution1D, pts: &[f64]) -> Result<InertiaTable> {
    let q = Quantizer::from_1d(pts)?;
    let sorted = q.sorted_values().to_vec();
    let n = sorted.len();
    let sigma: Vec<f64> = (0..=n)
        .map(|i| {
            let l = if i == 0 { f64::NEG_INFINITY } else { sorted[i - 1] };
            let r = sorted.get(i).copied().unwrap_or(f64::INFINITY);
            interval_inertia(dist, l, r)
        })
        .collect();
    let argmax = argmax_with_ties(&sigma);
    Ok(InertiaTable { sorted, sigma, argmax })
}

fn solve(dist: &dyn Distribution1D, left: f64, right: f64, start: f64, cfg: &Greedy1dConfig) -> Result<InnerSolve> {
    match cfg.solver {
        Solver::Lloyd => lloyd_fixed_point(dist, left, right, start, cfg.tol, cfg.max_iter),
        Solver::Forgy => forgy_newton(dist, left, right, start, cfg.steps, cfg.tol, cfg.max_iter),
        other => Err(Error::Unsupported(format!("solver `{}` is not deterministic", other.as_str()))),
    }
}

struct Levels {
    points: Vec<f64>,
    levels: Vec<LevelStats>,
    totals: Vec<f64>,
    saturated: bool,
}

fn run_levels(dist: &dyn Distribution1D, anchors: &[f64], n_new: usize, cfg: &Greedy1dConfig) -> Result<Levels> {
    let mut table = inertia_table(dist, anchors)?;
    let mut out = Levels { points: Vec::new(), levels: Vec::new(), totals: Vec::new(), saturated: false };
    for k in 0..n_new {
        let level = anchors.len() + k + 1;
        let (left, right, start) = if table.sorted.is_empty() {
            (f64::NEG_INFINITY, f64::INFINITY, dist.mean())
        } else {
            if !(table.sigma[table.argmax] > 0.0) {
                out.saturated = true;
                break;
            }
            let (l, r) = table.bounds(table.argmax);
            (l, r, restricted_centroid(dist, l, r).map_err(|e| e.at_level(level))?)
        };
        let s = solve(dist, left, right, start, cfg).map_err(|e| e.at_level(level))?;
        let stationarity = (lloyd_map(dist, left, right, s.a).map_err(|e| e.at_level(level))? - s.a).abs();
        table.insert(dist, s.a).map_err(|e| e.at_level(level))?;
        out.points.push(s.a);
        out.levels.push(LevelStats::exact(level, left, right, start, &s, stationarity));
        out.totals.push(table.total().max(0.0));
    }
    Ok(out)
}

/// Greedy sequence of `dist` for `p = 2`, starting from `a_1 = E X`.
pub fn build_greedy_1d(
    dist: &dyn Distribution1D,
    p: f64,
    n_max: usize,
    cfg: &Greedy1dConfig,
) -> Result<GreedySequence> {
    build_greedy_1d_with_anchors(dist, p, &[], n_max, cfg)
}

/// Like [`build_greedy_1d`], with `anchors` frozen before the first level.
/// The anchors are not part of the returned points but do count in the grid
/// whose distortion is recorded: `trajectory[k]` belongs to
/// `anchors + {a_1..a_{k+1}}`.
pub fn build_greedy_1d_with_anchors(
    dist: &dyn Distribution1D,
    p: f64,
    anchors: &[f64],
    n_max: usize,
    cfg: &Greedy1dConfig,
) -> Result<GreedySequence> {
    if p != 2.0 {
        return Err(Error::Unsupported(format!("deterministic greedy construction needs p = 2, got {p}")));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("level cap must be at least 1".into()));
    }
    let run = run_levels(dist, anchors, n_max, cfg)?;
    let trajectory =
        run.totals.iter().zip(&run.levels).map(|(&t, s)| DistortionRecord::exact(s.level, 2.0, t.sqrt())).collect();
    Ok(GreedySequence {
        dim: 1,
        points: run.points,
        trajectory,
        solver: cfg.solver,
        levels: run.levels,
        saturated: run.saturated,
    })
}

// Grid of the full law grown one point at a time.
struct FullLaw<'a> {
    dist: &'a dyn Distribution1D,
    table: InertiaTable,
    points: Vec<f64>,
    levels: Vec<LevelStats>,
    trajectory: Vec<DistortionRecord>,
}

impl FullLaw<'_> {
    fn push(&mut self, a: f64, src: Option<&LevelStats>) -> Result<()> {
        let level = self.points.len() + 1;
        self.table.insert(self.dist, a).map_err(|e| e.at_level(level))?;
        let sorted = &self.table.sorted;
        let idx = sorted.partition_point(|&v| v < a);
        let l = if idx == 0 { f64::NEG_INFINITY } else { sorted[idx - 1] };
        let r = sorted.get(idx + 1).copied().unwrap_or(f64::INFINITY);
        let stationarity = (lloyd_map(self.dist, l, r, a).map_err(|e| e.at_level(level))? - a).abs();
        let (iters, residual, start) = src.map_or((0, 0.0, a), |s| (s.iters, s.residual, s.start[0]));
        self.points.push(a);
        let solve = InnerSolve { a, iters, residual };
        self.levels.push(LevelStats::exact(level, l, r, start, &solve, stationarity));
        self.trajectory.push(DistortionRecord::exact(level, 2.0, self.table.total().max(0.0).sqrt()));
        Ok(())
    }
}

fn check_symmetric(dist: &dyn Distribution1D) -> Result<()> {
    let s = dist.scale();
    let ok = dist.mean().abs() <= 1e-12 * s
        && [0.1, 0.5, 1.0, 2.0, 4.0].iter().all(|&t| {
            let x = t * s;
            (dist.cdf(-x) - dist.sf(x)).abs() <= 1e-12
                && (dist.pdf(-x) - dist.pdf(x)).abs() <= 1e-12 * dist.pdf(x).max(1e-300)
        });
    if ok {
        Ok(())
    } else {
        Err(Error::NotSymmetric)
    }
}

/// Sequence `0, b_1, -b_1, b_2, -b_2, ...` where `(b_k)` is the greedy
/// sequence of the law conditioned on `[0, +inf)` with `0` frozen as an
/// active point. The trajectory is the distortion of the full law.
pub fn build_greedy_symmetric(
    dist: Arc<dyn Distribution1D>,
    n_max: usize,
    cfg: &Greedy1dConfig,
) -> Result<GreedySequence> {
    check_symmetric(dist.as_ref())?;
    if n_max == 0 {
        return Err(Error::InvalidParameter("level cap must be at least 1".into()));
    }
    let half = Conditioned::new(dist.clone(), 0.0, f64::INFINITY)?;
    let half_run = run_levels(&half, &[0.0], (n_max - 1).div_ceil(2), cfg)?;

    let mut full = FullLaw {
        dist: dist.as_ref(),
        table: inertia_table(dist.as_ref(), &[])?,
        points: Vec::with_capacity(n_max),
        levels: Vec::with_capacity(n_max),
        trajectory: Vec::with_capacity(n_max),
    };
    full.push(0.0, None)?;
    for (b, s) in half_run.points.iter().zip(&half_run.levels) {
        full.push(*b, Some(s))?;
        if full.points.len() < n_max {
            full.push(-*b, Some(s))?;
        }
    }
    let FullLaw { points, levels, trajectory, .. } = full;
    Ok(GreedySequence { dim: 1, points, trajectory, solver: cfg.solver, levels, saturated: half_run.saturated })
}
