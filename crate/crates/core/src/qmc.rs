//! Low-discrepancy sequences and the quantization constants they achieve
//! on `U[0,1]`, for comparison with greedy sequences.

use crate::distortion::{distortion_power_1d, prefix_distortions_1d};
use crate::distributions::{Distribution1D, Uniform};
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// `xi_1..xi_n` of the base-`b` Van der Corput sequence (indices start at 1).
pub fn vdc(base: u64, n: usize) -> Result<Vec<f64>> {
    if base < 2 {
        return Err(Error::InvalidParameter(format!("Van der Corput base must be >= 2, got {base}")));
    }
    Ok((1..=n as u64).map(|i| radical_inverse(i, base)).collect())
}

pub fn first_primes(d: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(d);
    let mut c = 2u64;
    while primes.len() < d {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| !c.is_multiple_of(p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// First `n` Halton points in `[0,1)^d` (bases: the first `d` primes),
/// row-major.
pub fn halton(d: usize, n: usize) -> Vec<f64> {
    let bases = first_primes(d);
    let mut out = Vec::with_capacity(n * d);
    for i in 1..=n as u64 {
        out.extend(bases.iter().map(|&b| radical_inverse(i, b)));
    }
    out
}

/// Exact star discrepancy of a point set in `[0,1]`.
pub fn star_discrepancy_1d(points: &[f64]) -> Result<f64> {
    if let Some(&x) = points.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::OutsideUnitInterval(x));
    }
    let mut s = points.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    Ok(s.iter().enumerate().map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n)).fold(0.0, f64::max))
}

/// `D*` of every prefix `points[..N]`, `N = 1..=len`.
pub fn prefix_star_discrepancies(points: &[f64]) -> Result<Vec<f64>> {
    if let Some(&x) = points.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::OutsideUnitInterval(x));
    }
    let mut sorted: Vec<f64> = Vec::with_capacity(points.len());
    let mut out = Vec::with_capacity(points.len());
    for &x in points {
        let pos = sorted.partition_point(|&v| v < x);
        sorted.insert(pos, x);
        let n = sorted.len() as f64;
        out.push(
            sorted.iter().enumerate().map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n)).fold(0.0, f64::max),
        );
    }
    Ok(out)
}

/// Star discrepancy in `[0,1]^d` maximized over the grid of point
/// coordinates (plus 1); a lower bound on the true value for `d >= 2`.
/// Limited to 64 points.
pub fn star_discrepancy_grid(d: usize, points: &[f64]) -> Result<f64> {
    if d == 0 || !points.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch { expected: d, found: points.len() });
    }
    let n = points.len() / d;
    if n > 64 {
        return Err(Error::InvalidParameter(format!("grid star discrepancy is limited to 64 points, got {n}")));
    }
    if let Some(&x) = points.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::OutsideUnitInterval(x));
    }
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut v: Vec<f64> = points.iter().skip(k).step_by(d).copied().chain([1.0]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let nf = n as f64;
    let mut idx = vec![0usize; d];
    let mut best: f64 = 0.0;
    loop {
        let u: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
        let vol: f64 = u.iter().product();
        let (mut open, mut closed) = (0usize, 0usize);
        for p in points.chunks_exact(d) {
            if p.iter().zip(&u).all(|(x, b)| x < b) {
                open += 1;
            }
            if p.iter().zip(&u).all(|(x, b)| x <= b) {
                closed += 1;
            }
        }
        best = best.max(vol - open as f64 / nf).max(closed as f64 / nf - vol);
        let mut k = 0;
        loop {
            if k == d {
                return Ok(best);
            }
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// `N e_p(prefix_N)` of a sequence on `U[0,1]` with the `[N_max/2, N_max]`
/// window proxies for its liminf and limsup.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledTrajectory {
    pub p: f64,
    /// `scaled[N-1] = N e_p(xi_1..xi_N)`.
    pub scaled: Vec<f64>,
    pub liminf_proxy: f64,
    pub limsup_proxy: f64,
}

/// `(min, max)` of `scaled[N-1]` over `lo <= N <= hi`.
pub fn window_min_max(scaled: &[f64], lo: usize, hi: usize) -> (f64, f64) {
    let hi = hi.min(scaled.len());
    scaled[lo.max(1) - 1..hi].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

pub fn scaled_trajectory_uniform(points: &[f64], p: f64) -> Result<ScaledTrajectory> {
    let u = Uniform::new(0.0, 1.0)?;
    let e = prefix_distortions_1d(&u, points, p)?;
    let scaled: Vec<f64> = e.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).collect();
    let n = scaled.len();
    let (liminf_proxy, limsup_proxy) = window_min_max(&scaled, n / 2, n);
    Ok(ScaledTrajectory { p, scaled, liminf_proxy, limsup_proxy })
}

/// Dyadic Van der Corput trajectory `N e_p` for `N <= n_max` on `U[0,1]`.
pub fn vdc_quantization_constants(p: f64, n_max: usize) -> Result<ScaledTrajectory> {
    if n_max < 8 {
        return Err(Error::InvalidParameter(format!("need n_max >= 8, got {n_max}")));
    }
    scaled_trajectory_uniform(&vdc(2, n_max)?, p)
}

/// `L^p`-optimal `n`-grid of `U[0,1]`: `(2k-1)/(2n)`.
pub fn uniform_optimal_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| (2 * k - 1) as f64 / (2 * n) as f64).collect()
}

/// Concatenation of the optimal grids of sizes `1, 2, 4, ..., 2^(levels-1)`
/// (`2^levels - 1` points). Only `U[0,1]` is supported.
pub fn concatenated_sequence(dist: &dyn Distribution1D, levels: u32) -> Result<Vec<f64>> {
    if dist.support() != (0.0, 1.0) || (dist.cdf(0.3) - 0.3).abs() > 1e-15 || !dist.has_density() {
        return Err(Error::Unsupported(format!(
            "concatenated sequences need closed-form optimal grids; `{}` has none",
            dist.name()
        )));
    }
    if levels > 30 {
        return Err(Error::InvalidParameter(format!("too many blocks: {levels}")));
    }
    Ok((0..levels).flat_map(|l| uniform_optimal_grid(1 << l)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProinovCheck {
    /// `|int_0^1 f - (1/N) sum f(xi_i)|`.
    pub lhs: f64,
    /// `L D*_N`.
    pub rhs: f64,
    /// `e_1(xi, U[0,1])`.
    pub e1: f64,
    pub star_discrepancy: f64,
}

impl ProinovCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs && self.e1 <= self.star_discrepancy
    }
}

/// One-dimensional Koksma-Hlawka/Proinov check for an `L`-Lipschitz `f`.
pub fn proinov_bound_check<F: Fn(f64) -> f64>(points: &[f64], f: F, lipschitz: f64) -> Result<ProinovCheck> {
    if points.is_empty() {
        return Err(Error::EmptyQuantizer);
    }
    let dstar = star_discrepancy_1d(points)?;
    let exact = quadrature::integrate(&f, 0.0, 1.0, Tolerance::default()).value;
    let mean = points.iter().map(|&x| f(x)).sum::<f64>() / points.len() as f64;
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let e1 = distortion_power_1d(&Uniform::new(0.0, 1.0)?, &sorted, 1.0)?;
    Ok(ProinovCheck { lhs: (exact - mean).abs(), rhs: lipschitz * dstar, e1, star_discrepancy: dstar })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ZADOR_J21;

    #[test]
    fn vdc_examples() {
        assert_eq!(vdc(2, 4).unwrap(), vec![0.5, 0.25, 0.75, 0.125]);
        assert_eq!(vdc(3, 1).unwrap(), vec![1.0 / 3.0]);
        assert!(vdc(1, 3).is_err());
        let h = halton(2, 3);
        assert_eq!(h, vec![0.5, 1.0 / 3.0, 0.25, 2.0 / 3.0, 0.75, 1.0 / 9.0]);
        assert_eq!(first_primes(5), vec![2, 3, 5, 7, 11]);
    }

    #[test]
    fn star_discrepancy_examples() {
        assert_eq!(star_discrepancy_1d(&[0.5]).unwrap(), 0.5);
        assert_eq!(star_discrepancy_1d(&[0.25, 0.75]).unwrap(), 0.25);
        for n in [1, 3, 10, 100] {
            let d = star_discrepancy_1d(&uniform_optimal_grid(n)).unwrap();
            assert!((d - 0.5 / n as f64).abs() < 1e-15);
        }
        assert!(matches!(star_discrepancy_1d(&[1.5]), Err(Error::OutsideUnitInterval(_))));
    }

    #[test]
    fn prefix_discrepancies_match() {
        let v = vdc(3, 200).unwrap();
        let pre = prefix_star_discrepancies(&v).unwrap();
        for n in [1, 2, 17, 81, 200] {
            assert_eq!(pre[n - 1], star_discrepancy_1d(&v[..n]).unwrap());
        }
    }

    #[test]
    fn grid_discrepancy_reduces_to_exact_in_1d() {
        let pts = vdc(2, 37).unwrap();
        let a = star_discrepancy_grid(1, &pts).unwrap();
        let b = star_discrepancy_1d(&pts).unwrap();
        assert!((a - b).abs() < 1e-15);
        let h = halton(2, 50);
        let d2 = star_discrepancy_grid(2, &h).unwrap();
        assert!(d2 > 0.0 && d2 < 0.2);
        assert!(star_discrepancy_grid(2, &halton(2, 65)).is_err());
    }

    #[test]
    fn vdc_l1_at_two_points() {
        let t = vdc_quantization_constants(1.0, 8).unwrap();
        assert!((t.scaled[1] - 11.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn concatenated_blocks() {
        let u = Uniform::new(0.0, 1.0).unwrap();
        let b = concatenated_sequence(&u, 3).unwrap();
        assert_eq!(b, vec![0.5, 0.25, 0.75, 0.125, 0.375, 0.625, 0.875]);
        let n = crate::distributions::Normal::standard();
        assert!(concatenated_sequence(&n, 3).is_err());
        let t = scaled_trajectory_uniform(&concatenated_sequence(&u, 10).unwrap(), 2.0).unwrap();
        assert!(t.scaled.windows(2).enumerate().all(|(i, w)| w[1] / (i + 2) as f64 <= w[0] / (i + 1) as f64));
        assert!(t.scaled[63..].iter().all(|&v| v >= ZADOR_J21 * 0.98));
    }

    #[test]
    fn proinov_examples() {
        let c = proinov_bound_check(&[0.5], |x| x, 1.0).unwrap();
        assert!(c.lhs < 1e-15 && c.rhs == 0.5);
        let c = proinov_bound_check(&[0.5, 0.25], |x| x, 1.0).unwrap();
        assert!((c.e1 - 11.0 / 64.0).abs() < 1e-15);
        assert_eq!(c.star_discrepancy, 0.5);
        let c = proinov_bound_check(&uniform_optimal_grid(4), |x| x * x, 2.0).unwrap();
        assert!((c.lhs - 1.0 / 192.0).abs() < 1e-14);
        assert!(c.lhs <= 0.125 && c.holds());
    }

    #[test]
    fn e1_never_exceeds_star_discrepancy() {
        let v = vdc(2, 300).unwrap();
        for n in 1..=300 {
            let c = proinov_bound_check(&v[..n], |x| x, 1.0).unwrap();
            assert!(c.e1 <= c.star_discrepancy, "n = {n}");
        }
    }

    #[test]
    fn vdc_discrepancy_is_logarithmic() {
        let v = vdc(2, 1 << 12).unwrap();
        let mut c: f64 = 0.0;
        for n in (1..=v.len()).step_by(7) {
            let d = star_discrepancy_1d(&v[..n]).unwrap();
            c = c.max(d * n as f64 / (1.0 + (n as f64).ln()));
        }
        assert!(c < 1.0, "{c}");
    }
}
