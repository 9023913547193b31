//! Numerical checks around rate optimality: the `b`-maximal function,
//! Zador-type integrals, distortion mismatch and the
//! `A_{N+1} <= A_N - C A_N^{1+rho}` recursion.

use crate::distortion::prefix_distortions_1d;
use crate::distributions::Distribution1D;
use crate::error::{Error, Result};
use crate::greedy1d::GreedySequence;
use crate::quadrature::{self, Tolerance};

/// A value together with the "likely infinite" divergence flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub likely_infinite: bool,
    pub refinements: usize,
}

/// Growth factor and streak length that flag divergence under refinement.
const GROWTH: f64 = 2.0;
const GROWTH_STREAK: usize = 3;

fn one_d(seq: &GreedySequence) -> Result<&[f64]> {
    if seq.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: seq.dim });
    }
    Ok(&seq.points)
}

fn check_b(b: f64) -> Result<()> {
    if b > 0.0 && b < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("b must lie in (0, 1/2), got {b}")))
    }
}

/// `Psi_b(xi) = max_{N <= n_cap} 2r / mu([xi - r, xi + r])` with
/// `r = b d(xi, a^{(N)})`. The ratio is 0 when `r = 0`; a ball without
/// mass gives `+inf`.
pub fn maximal_function(dist: &dyn Distribution1D, points: &[f64], b: f64, xi: f64, n_cap: usize) -> Result<f64> {
    check_b(b)?;
    let mut best: f64 = 0.0;
    let mut d = f64::INFINITY;
    for &a in &points[..n_cap.min(points.len())] {
        let dn = (xi - a).abs();
        if dn >= d {
            continue;
        }
        d = dn;
        let r = b * d;
        if r == 0.0 {
            break;
        }
        let mass = dist.mass(xi - r, xi + r);
        if !(mass > 0.0) {
            return Ok(f64::INFINITY);
        }
        best = best.max(2.0 * r / mass);
    }
    Ok(best)
}

/// `int Psi_b^exponent dmu`, by the midpoint rule in probability space
/// (`xi = F^{-1}(u)`), doubling the node count until the relative change is
/// below `1e-3` or divergence is flagged.
pub fn maximal_function_integral(
    dist: &dyn Distribution1D,
    seq: &GreedySequence,
    b: f64,
    exponent: f64,
    quad_points: usize,
) -> Result<Estimate> {
    check_b(b)?;
    if !(exponent >= 0.0) {
        return Err(Error::InvalidParameter(format!("exponent must be non-negative, got {exponent}")));
    }
    let pts = one_d(seq)?;
    if exponent == 0.0 {
        return Ok(Estimate { value: 1.0, likely_infinite: false, refinements: 0 });
    }
    let eval = |n: usize| -> Result<f64> {
        use rayon::prelude::*;
        let vals: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = dist.quantile((i as f64 + 0.5) / n as f64);
                maximal_function(dist, pts, b, xi, pts.len()).map(|v| v.powf(exponent))
            })
            .collect::<Result<_>>()?;
        Ok(vals.iter().sum::<f64>() / n as f64)
    };
    refine(|k| eval(quad_points.max(1) << k), 10)
}

fn refine<F: FnMut(usize) -> Result<f64>>(mut step: F, max_refinements: usize) -> Result<Estimate> {
    let mut prev = step(0)?;
    let mut streak = 0;
    for k in 1..=max_refinements {
        let v = step(k)?;
        if v.is_infinite() {
            return Ok(Estimate { value: v, likely_infinite: true, refinements: k });
        }
        streak = if v > GROWTH * prev { streak + 1 } else { 0 };
        if streak >= GROWTH_STREAK {
            return Ok(Estimate { value: v, likely_infinite: true, refinements: k });
        }
        if streak == 0 && (v - prev).abs() <= 1e-3 * v.abs() {
            return Ok(Estimate { value: v, likely_infinite: false, refinements: k });
        }
        prev = v;
    }
    Ok(Estimate { value: prev, likely_infinite: false, refinements: max_refinements })
}

/// `int phi^{1 - q/(d+p)} d lambda` for a scalar law (`d = 1`). Unbounded
/// supports are truncated to `mean +- R`, doubling `R` from `4 scale`.
pub fn zador_integral(dist: &dyn Distribution1D, p: f64, q: f64) -> Result<Estimate> {
    if !dist.has_density() {
        return Err(Error::Unsupported("Zador integrals need a density".into()));
    }
    let e = 1.0 - q / (1.0 + p);
    let f = |x: f64| {
        let lp = dist.ln_pdf(x);
        if lp == f64::NEG_INFINITY {
            0.0
        } else {
            (e * lp).exp()
        }
    };
    let tol = Tolerance { abs: 0.0, rel: 1e-10, max_intervals: 2000 };
    let (lo, hi) = dist.support();
    let integral = |a: f64, b: f64| {
        let m = dist.median().clamp(a, b);
        quadrature::integrate(f, a, m, tol).value + quadrature::integrate(f, m, b, tol).value
    };
    if lo.is_finite() && hi.is_finite() {
        return Ok(Estimate { value: integral(lo, hi), likely_infinite: false, refinements: 0 });
    }
    let (c, s) = (dist.mean(), dist.scale());
    refine(
        |k| {
            let r = 4.0 * s * (1u64 << k) as f64;
            let v = integral((c - r).max(lo), (c + r).min(hi));
            Ok(if v.is_nan() { f64::INFINITY } else { v })
        },
        8,
    )
    .map(|mut est| {
        // convergence on a truncated domain is only trusted to 1e-3 by
        // `refine`; tighten once the domain is large enough
        if !est.likely_infinite && est.value.is_finite() {
            let r = 4.0 * s * (1u64 << (est.refinements + 2)) as f64;
            est.value = integral((c - r).max(lo), (c + r).min(hi));
        }
        est
    })
}

/// `N e_q(a^{(N)})` for every level of a 1-D sequence.
pub fn mismatch_trajectory(dist: &dyn Distribution1D, seq: &GreedySequence, q: f64) -> Result<Vec<f64>> {
    let pts = one_d(seq)?;
    let e = prefix_distortions_1d(dist, pts, q)?;
    Ok(e.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionBound {
    /// `A_1..A_{n_max}`.
    pub sequence: Vec<f64>,
    /// `sup_N A_N N^{1/rho}`.
    pub k: f64,
    /// The supremum over `N <= n_max/2` is within 1% of the full one.
    pub plateau: bool,
}

/// Extremal sequence `A_{N+1} = A_N - C A_N^{1+rho}` and its fitted bound
/// `A_N <= K N^{-1/rho}`.
pub fn recursion_bound_check(a1: f64, c: f64, rho: f64, n_max: usize) -> Result<RecursionBound> {
    if !(a1 > 0.0 && c > 0.0 && rho > 0.0) || c * a1.powf(rho) >= 1.0 || n_max == 0 {
        return Err(Error::Precondition(format!(
            "need A1 > 0, C > 0, rho > 0 and C A1^rho < 1 (A1 = {a1}, C = {c}, rho = {rho})"
        )));
    }
    let mut seq = Vec::with_capacity(n_max);
    let mut a = a1;
    let (mut k, mut k_half) = (0.0f64, 0.0f64);
    for n in 1..=n_max {
        if !(a > 0.0) {
            return Err(Error::Precondition(format!("sequence left (0, inf) at N = {n}")));
        }
        seq.push(a);
        k = k.max(a * (n as f64).powf(1.0 / rho));
        if n <= n_max / 2 {
            k_half = k;
        }
        a -= c * a.powf(1.0 + rho);
    }
    let plateau = k.is_finite() && (k - k_half) <= 0.01 * k;
    Ok(RecursionBound { sequence: seq, k, plateau })
}
