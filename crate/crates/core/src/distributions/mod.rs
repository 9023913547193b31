//! Probability laws consumed by the greedy builders.
//!
//! Scalar laws ([`Distribution1D`]) expose the cumulative functionals the
//! deterministic procedures need: `F(x)`, `K(x) = int_{(-inf,x]} u mu(du)` and
//! the cumulative second moment. Multivariate laws ([`DistributionNd`]) only
//! need to be sampleable.

mod multivariate;
mod univariate;

use std::fmt;
use std::sync::Arc;

pub use multivariate::{Empirical, NormalNd, UniformCube, Wrapped1D};
pub use univariate::{Conditioned, Dirac, Exponential, Normal, Uniform};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::seed::SampleRng;

/// Cells narrower than this many `scale()` units are integrated with a
/// 20-point Gauss-Legendre rule on the density instead of by differencing
/// cumulative functions, which would cancel catastrophically.
const NARROW_CELL: f64 = 0.5;

/// Mass, first and second moment of a law restricted to an interval.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PartialMoments {
    pub mass: f64,
    pub first: f64,
    pub second: f64,
}

pub trait Distribution1D: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// Closed support interval; endpoints may be infinite.
    fn support(&self) -> (f64, f64);

    fn pdf(&self, x: f64) -> f64;

    fn ln_pdf(&self, x: f64) -> f64 {
        self.pdf(x).ln()
    }

    /// `false` for laws with atoms; the density-based paths are then unavailable.
    fn has_density(&self) -> bool {
        true
    }

    fn cdf(&self, x: f64) -> f64;

    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// `K(x) = int_{(-inf, x]} u mu(du)`.
    fn first_moment(&self, x: f64) -> f64;

    /// `int_{(x, +inf)} u mu(du)`.
    fn upper_first_moment(&self, x: f64) -> f64 {
        self.mean() - self.first_moment(x)
    }

    /// `int_{(-inf, x]} u^2 mu(du)`.
    fn second_moment(&self, x: f64) -> f64;

    fn upper_second_moment(&self, x: f64) -> f64 {
        self.second_moment(f64::INFINITY) - self.second_moment(x)
    }

    fn quantile(&self, u: f64) -> f64;

    /// Quantile of the survival probability `s`, i.e. `quantile(1 - s)`
    /// without rounding `1 - s`.
    fn upper_quantile(&self, s: f64) -> f64 {
        self.quantile(1.0 - s)
    }

    fn mean(&self) -> f64;

    fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Log-concave density.
    fn strongly_unimodal(&self) -> bool;

    /// Absolute moments of order `< moment_order()` are finite.
    fn moment_order(&self) -> f64 {
        f64::INFINITY
    }

    /// Typical length scale, used to decide when a cell counts as narrow.
    fn scale(&self) -> f64;

    fn clamp_to_support(&self, l: f64, r: f64) -> (f64, f64) {
        let (lo, hi) = self.support();
        (l.max(lo), r.min(hi))
    }

    /// Moments of the law restricted to `[l, r]`.
    fn partial_moments(&self, l: f64, r: f64) -> PartialMoments {
        let (l, r) = self.clamp_to_support(l, r);
        if !(r > l) {
            return PartialMoments::default();
        }
        if self.has_density() && l.is_finite() && r.is_finite() && r - l <= NARROW_CELL * self.scale() {
            let mid = 0.5 * (l + r);
            let mass = quadrature::gl20_integrate(|x| self.pdf(x), l, r);
            let dev = quadrature::gl20_integrate(|x| (x - mid) * self.pdf(x), l, r);
            let dev2 = quadrature::gl20_integrate(|x| (x - mid) * (x - mid) * self.pdf(x), l, r);
            return PartialMoments { mass, first: mid * mass + dev, second: dev2 + 2.0 * mid * dev + mid * mid * mass };
        }
        if l >= self.median() {
            PartialMoments {
                mass: self.sf(l) - self.sf(r),
                first: self.upper_first_moment(l) - self.upper_first_moment(r),
                second: self.upper_second_moment(l) - self.upper_second_moment(r),
            }
        } else {
            PartialMoments {
                mass: self.cdf(r) - self.cdf(l),
                first: self.first_moment(r) - self.first_moment(l),
                second: self.second_moment(r) - self.second_moment(l),
            }
        }
    }

    fn mass(&self, l: f64, r: f64) -> f64 {
        self.partial_moments(l, r).mass
    }

    /// `E(X | X in [l, r])`, or `None` when the interval carries no mass.
    fn conditional_mean(&self, l: f64, r: f64) -> Option<f64> {
        let (lc, rc) = self.clamp_to_support(l, r);
        if self.has_density() && lc.is_finite() && rc.is_finite() && rc > lc && rc - lc <= NARROW_CELL * self.scale() {
            let mid = 0.5 * (lc + rc);
            let mass = quadrature::gl20_integrate(|x| self.pdf(x), lc, rc);
            if !(mass > 0.0) {
                return None;
            }
            let dev = quadrature::gl20_integrate(|x| (x - mid) * self.pdf(x), lc, rc);
            return Some(mid + dev / mass);
        }
        let m = self.partial_moments(l, r);
        if m.mass > 0.0 {
            Some(m.first / m.mass)
        } else {
            None
        }
    }

    /// `int_l^r (x - c)^2 mu(dx)`.
    fn centered_second_moment(&self, c: f64, l: f64, r: f64) -> f64 {
        let (l, r) = self.clamp_to_support(l, r);
        if !(r > l) {
            return 0.0;
        }
        if self.has_density() && l.is_finite() && r.is_finite() && r - l <= NARROW_CELL * self.scale() {
            return quadrature::gl20_integrate(|x| (x - c) * (x - c) * self.pdf(x), l, r);
        }
        let m = self.partial_moments(l, r);
        (m.second - 2.0 * c * m.first + c * c * m.mass).max(0.0)
    }

    /// `int_l^r |x - c|^p mu(dx)`: closed forms for `p = 1, 2`, quadrature otherwise.
    fn power_moment(&self, c: f64, l: f64, r: f64, p: f64) -> Result<f64> {
        check_power(self, l, r, p)?;
        if p == 2.0 {
            return Ok(self.centered_second_moment(c, l, r));
        }
        if p == 1.0 {
            let (l, r) = self.clamp_to_support(l, r);
            if !(r > l) {
                return Ok(0.0);
            }
            let below = self.partial_moments(l, c.min(r));
            let above = self.partial_moments(c.max(l), r);
            let v = (c * below.mass - below.first) + (above.first - c * above.mass);
            return Ok(v.max(0.0));
        }
        power_moment_quadrature(self, c, l, r, p)
    }
}

fn check_power<D: Distribution1D + ?Sized>(dist: &D, l: f64, r: f64, p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent p must be positive and finite, got {p}")));
    }
    let (lc, rc) = dist.clamp_to_support(l, r);
    if (lc.is_infinite() || rc.is_infinite()) && p >= dist.moment_order() {
        return Err(Error::MomentOverflow { p, order: dist.moment_order() });
    }
    Ok(())
}

// Quantiles saturate to infinity for probabilities below the float
// resolution; those nodes carry no measurable mass.
fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// `int_l^r |x - c|^p mu(dx)` by adaptive Gauss-Kronrod quadrature, split at
/// `c`; infinite tails are mapped to probability space through the quantile
/// functions.
pub fn power_moment_quadrature<D: Distribution1D + ?Sized>(dist: &D, c: f64, l: f64, r: f64, p: f64) -> Result<f64> {
    check_power(dist, l, r, p)?;
    if !dist.has_density() {
        return Err(Error::Unsupported("quadrature needs a density".into()));
    }
    let (l, r) = dist.clamp_to_support(l, r);
    if !(r > l) {
        return Ok(0.0);
    }
    let tol = Tolerance { abs: 0.0, rel: 1e-12, max_intervals: 1000 };
    let mut total = 0.0;
    // left of the center: integrand (c - x)^p
    let (u, v) = (l, c.min(r));
    if v > u {
        total += if u.is_finite() {
            quadrature::integrate(|x| (c - x).powf(p) * dist.pdf(x), u, v, tol).value
        } else {
            let top = dist.cdf(v);
            quadrature::integrate(|s| finite_or_zero((c - dist.quantile(s)).max(0.0).powf(p)), 0.0, top, tol).value
        };
    }
    let (u, v) = (c.max(l), r);
    if v > u {
        total += if v.is_finite() {
            quadrature::integrate(|x| (x - c).powf(p) * dist.pdf(x), u, v, tol).value
        } else {
            let top = dist.sf(u);
            quadrature::integrate(|s| finite_or_zero((dist.upper_quantile(s) - c).max(0.0).powf(p)), 0.0, top, tol)
                .value
        };
    }
    if !total.is_finite() {
        return Err(Error::MomentOverflow { p, order: dist.moment_order() });
    }
    Ok(total)
}

/// `E(X | X in [l, r])`.
pub fn restricted_centroid<D: Distribution1D + ?Sized>(dist: &D, l: f64, r: f64) -> Result<f64> {
    let c = dist.conditional_mean(l, r).ok_or(Error::EmptyCell { left: l, right: r })?;
    let (lc, rc) = dist.clamp_to_support(l, r);
    Ok(c.clamp(lc, rc))
}

/// `int_l^r |x - center|^p mu(dx)`.
pub fn cell_inertia_p<D: Distribution1D + ?Sized>(dist: &D, center: f64, l: f64, r: f64, p: f64) -> Result<f64> {
    dist.power_moment(center, l, r, p)
}

/// Quadrature-only evaluation of [`cell_inertia_p`], independent of the
/// closed forms.
pub fn cell_inertia_quadrature<D: Distribution1D + ?Sized>(
    dist: &D,
    center: f64,
    l: f64,
    r: f64,
    p: f64,
) -> Result<f64> {
    power_moment_quadrature(dist, center, l, r, p)
}

/// A sampleable law on `R^d`.
pub trait DistributionNd: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    /// Writes one draw into `out` (length `dim()`).
    fn sample(&self, rng: &mut SampleRng, out: &mut [f64]);

    fn density(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn mean(&self) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub enum Builtin {
    OneD(Arc<dyn Distribution1D>),
    Nd(Arc<dyn DistributionNd>),
}

impl Builtin {
    pub fn dim(&self) -> usize {
        match self {
            Builtin::OneD(_) => 1,
            Builtin::Nd(d) => d.dim(),
        }
    }

    pub fn one_d(self) -> Result<Arc<dyn Distribution1D>> {
        match self {
            Builtin::OneD(d) => Ok(d),
            Builtin::Nd(d) => Err(Error::InvalidParameter(format!("`{}` is not a scalar law", d.name()))),
        }
    }

    /// Scalar laws are wrapped as one-dimensional sampleable laws.
    pub fn nd(self) -> Arc<dyn DistributionNd> {
        match self {
            Builtin::OneD(d) => Arc::new(Wrapped1D::new(d)),
            Builtin::Nd(d) => d,
        }
    }
}

pub const CATALOGUE: &[&str] = &[
    "uniform01",
    "uniform(a,b)",
    "normal(m,sigma)",
    "halfnormal(sigma)",
    "exponential(lambda)",
    "dirac(c)",
    "normal_nd(d)",
    "uniform_nd(d)",
];

fn arity(name: &str, params: &[f64], allowed: &[usize]) -> Result<()> {
    if allowed.contains(&params.len()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("`{name}` takes {allowed:?} parameters, got {}", params.len())))
    }
}

fn dimension(name: &str, params: &[f64]) -> Result<usize> {
    arity(name, params, &[1])?;
    let d = params[0];
    if d >= 1.0 && d.fract() == 0.0 && d <= 1e6 {
        Ok(d as usize)
    } else {
        Err(Error::InvalidParameter(format!("`{name}` needs a positive integer dimension, got {d}")))
    }
}

/// Builds a catalogue law. `normal` takes `(mean, standard deviation)`.
pub fn make_builtin(name: &str, params: &[f64]) -> Result<Builtin> {
    let one = |d: Arc<dyn Distribution1D>| Ok(Builtin::OneD(d));
    match name {
        "uniform01" => {
            arity(name, params, &[0])?;
            one(Arc::new(Uniform::new(0.0, 1.0)?))
        }
        "uniform" => {
            arity(name, params, &[0, 2])?;
            match params {
                [a, b] => one(Arc::new(Uniform::new(*a, *b)?)),
                _ => one(Arc::new(Uniform::new(0.0, 1.0)?)),
            }
        }
        "normal" => {
            arity(name, params, &[0, 2])?;
            match params {
                [m, s] => one(Arc::new(Normal::new(*m, *s)?)),
                _ => one(Arc::new(Normal::standard())),
            }
        }
        "halfnormal" => {
            arity(name, params, &[0, 1])?;
            let s = params.first().copied().unwrap_or(1.0);
            one(Arc::new(Conditioned::new(Arc::new(Normal::new(0.0, s)?), 0.0, f64::INFINITY)?))
        }
        "exponential" => {
            arity(name, params, &[0, 1])?;
            one(Arc::new(Exponential::new(params.first().copied().unwrap_or(1.0))?))
        }
        "dirac" => {
            arity(name, params, &[1])?;
            one(Arc::new(Dirac::new(params[0])?))
        }
        "normal_nd" => Ok(Builtin::Nd(Arc::new(NormalNd::new(dimension(name, params)?)))),
        "uniform_nd" => Ok(Builtin::Nd(Arc::new(UniformCube::new(dimension(name, params)?)))),
        _ => Err(Error::UnknownDistribution { name: name.to_string(), catalogue: CATALOGUE.join(", ") }),
    }
}

/// Splits `name(p1, p2, ...)` (or a bare `name`) into its parts.
pub fn parse_spec(spec: &str) -> Result<(String, Vec<f64>)> {
    let spec = spec.trim();
    let (name, rest) = match spec.find('(') {
        Some(i) => (&spec[..i], Some(&spec[i + 1..])),
        None => (spec, None),
    };
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(Error::Parse(format!("bad distribution name in `{spec}`")));
    }
    let params = match rest {
        None => Vec::new(),
        Some(rest) => {
            let inner = rest.strip_suffix(')').ok_or_else(|| Error::Parse(format!("missing `)` in `{spec}`")))?;
            if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad parameter `{}` in `{spec}`", t.trim())))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        }
    };
    Ok((name.to_string(), params))
}

pub fn from_spec(spec: &str) -> Result<Builtin> {
    let (name, params) = parse_spec(spec)?;
    make_builtin(&name, &params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::std_normal_cdf;
    use proptest::prelude::*;

    fn catalogue_1d() -> Vec<Arc<dyn Distribution1D>> {
        ["uniform01", "normal(0,1)", "normal(1.5,0.3)", "halfnormal", "exponential(2)", "uniform(-1,3)"]
            .iter()
            .map(|s| from_spec(s).unwrap().one_d().unwrap())
            .collect()
    }

    #[test]
    fn centroid_examples() {
        let u = Uniform::new(0.0, 1.0).unwrap();
        assert!((restricted_centroid(&u, 0.0, 0.5).unwrap() - 0.25).abs() < 1e-15);
        let n = Normal::standard();
        assert!(restricted_centroid(&n, f64::NEG_INFINITY, f64::INFINITY).unwrap().abs() < 1e-15);
        // quadrature oracle: int_0^inf x phi(x) dx / (1/2)
        let num =
            quadrature::integrate(|x| x * crate::special::std_normal_pdf(x), 0.0, 40.0, Tolerance::default()).value;
        let oracle = num / 0.5;
        assert!((oracle - 0.797_884_560_802_865_4).abs() < 1e-12);
        let got = restricted_centroid(&n, 0.0, f64::INFINITY).unwrap();
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn centroid_of_empty_cell_is_an_error() {
        let u = Uniform::new(0.0, 1.0).unwrap();
        assert!(matches!(restricted_centroid(&u, 2.0, 3.0), Err(Error::EmptyCell { .. })));
    }

    #[test]
    fn inertia_examples() {
        let u = Uniform::new(0.0, 1.0).unwrap();
        assert!((cell_inertia_p(&u, 0.5, 0.0, 1.0, 2.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        // piecewise oracle: int_0^{1/4} (1/4 - x) dx + int_{1/4}^{3/8} (x - 1/4) dx
        let oracle = 0.25 * 0.25 / 2.0 + 0.125 * 0.125 / 2.0;
        assert_eq!(oracle, 5.0 / 128.0);
        assert!((cell_inertia_p(&u, 0.25, 0.0, 0.375, 1.0).unwrap() - oracle).abs() < 1e-15);
        let n = Normal::standard();
        let v = cell_inertia_p(&n, 0.0, f64::NEG_INFINITY, f64::INFINITY, 2.0).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn builtin_examples() {
        let u = make_builtin("uniform01", &[]).unwrap().one_d().unwrap();
        assert_eq!(u.mean(), 0.5);
        let n = make_builtin("normal", &[0.0, 1.0]).unwrap().one_d().unwrap();
        assert!((n.first_moment(0.0) + 0.398_942_280_401_432_7).abs() < 1e-15);
        let nd = make_builtin("normal_nd", &[2.0]).unwrap();
        assert_eq!(nd.dim(), 2);
    }

    #[test]
    fn unknown_name_lists_catalogue() {
        let err = make_builtin("cauchy", &[]).unwrap_err().to_string();
        assert!(err.contains("uniform01") && err.contains("normal_nd"), "{err}");
    }

    #[test]
    fn spec_grammar() {
        assert_eq!(parse_spec("normal(0, 1)").unwrap(), ("normal".into(), vec![0.0, 1.0]));
        assert_eq!(parse_spec("uniform01").unwrap(), ("uniform01".into(), vec![]));
        assert_eq!(parse_spec("normal_nd(2)").unwrap(), ("normal_nd".into(), vec![2.0]));
        assert!(parse_spec("normal(0,1").is_err());
        assert!(parse_spec("normal(a)").is_err());
        assert!(from_spec("normal(0,-1)").is_err());
    }

    #[test]
    fn closed_form_matches_quadrature_for_p2() {
        let cases = [
            (0.3, 0.1, 0.9),
            (0.0, f64::NEG_INFINITY, f64::INFINITY),
            (1.2, 0.4, f64::INFINITY),
            (-0.7, f64::NEG_INFINITY, 0.2),
        ];
        for d in catalogue_1d() {
            for (c, l, r) in cases {
                let closed = cell_inertia_p(d.as_ref(), c, l, r, 2.0).unwrap();
                let quad = cell_inertia_quadrature(d.as_ref(), c, l, r, 2.0).unwrap();
                assert!((closed - quad).abs() < 1e-10, "{}: {closed} vs {quad} on ({c},{l},{r})", d.name());
                let m = d.partial_moments(l, r);
                let via_moments = m.second - 2.0 * c * m.first + c * c * m.mass;
                assert!((closed - via_moments).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn p1_closed_form_matches_quadrature() {
        for d in catalogue_1d() {
            let closed = d.power_moment(0.4, -0.5, 2.0, 1.0).unwrap();
            let quad = cell_inertia_quadrature(d.as_ref(), 0.4, -0.5, 2.0, 1.0).unwrap();
            assert!((closed - quad).abs() < 1e-10, "{}", d.name());
        }
    }

    #[test]
    fn general_p_needs_finite_moments() {
        #[derive(Debug)]
        struct ThreeMoments;
        impl Distribution1D for ThreeMoments {
            fn name(&self) -> String {
                "three".into()
            }
            fn support(&self) -> (f64, f64) {
                (1.0, f64::INFINITY)
            }
            // Pareto(4): density 4 x^-5
            fn pdf(&self, x: f64) -> f64 {
                if x >= 1.0 {
                    4.0 * x.powi(-5)
                } else {
                    0.0
                }
            }
            fn cdf(&self, x: f64) -> f64 {
                if x >= 1.0 {
                    1.0 - x.powi(-4)
                } else {
                    0.0
                }
            }
            fn first_moment(&self, x: f64) -> f64 {
                if x >= 1.0 {
                    4.0 / 3.0 * (1.0 - x.powi(-3))
                } else {
                    0.0
                }
            }
            fn second_moment(&self, x: f64) -> f64 {
                if x >= 1.0 {
                    2.0 * (1.0 - x.powi(-2))
                } else {
                    0.0
                }
            }
            fn quantile(&self, u: f64) -> f64 {
                (1.0 - u).powf(-0.25)
            }
            fn upper_quantile(&self, s: f64) -> f64 {
                s.powf(-0.25)
            }
            fn mean(&self) -> f64 {
                4.0 / 3.0
            }
            fn strongly_unimodal(&self) -> bool {
                false
            }
            fn moment_order(&self) -> f64 {
                4.0
            }
            fn scale(&self) -> f64 {
                1.0
            }
        }
        let d = ThreeMoments;
        assert!(matches!(cell_inertia_p(&d, 2.0, 1.0, f64::INFINITY, 4.5), Err(Error::MomentOverflow { .. })));
        assert!(cell_inertia_p(&d, 2.0, 1.0, 10.0, 4.5).is_ok());
        assert!(cell_inertia_p(&d, 2.0, 1.0, f64::INFINITY, 2.5).is_ok());
    }

    #[test]
    fn halfnormal_cdf_is_folded_normal() {
        let h = from_spec("halfnormal").unwrap().one_d().unwrap();
        for i in 0..=400 {
            let x = 0.02 * i as f64;
            let want = 2.0 * std_normal_cdf(x) - 1.0;
            assert!((h.cdf(x) - want).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn cumulative_functions_at_infinity() {
        for d in catalogue_1d() {
            assert_eq!(d.cdf(f64::NEG_INFINITY), 0.0);
            assert!((d.cdf(f64::INFINITY) - 1.0).abs() < 1e-15);
            assert!((d.first_moment(f64::INFINITY) - d.mean()).abs() < 1e-14, "{}", d.name());
            assert!(d.second_moment(f64::INFINITY).is_finite());
        }
    }

    #[test]
    fn quantile_inverts_cdf_in_the_interior() {
        for d in catalogue_1d() {
            for i in 1..200 {
                let u = i as f64 / 200.0;
                let x = d.quantile(u);
                let back = d.quantile(d.cdf(x));
                assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0), "{}: {x} -> {back}", d.name());
            }
        }
    }

    proptest! {
        #[test]
        fn centroid_lies_in_interval(i in 0usize..6, a in -4.0f64..4.0, w in 1e-6f64..5.0) {
            let d = &catalogue_1d()[i];
            let (l, r) = (a, a + w);
            if d.mass(l, r) > 0.0 {
                let c = restricted_centroid(d.as_ref(), l, r).unwrap();
                prop_assert!(c >= l && c <= r);
            }
        }

        #[test]
        fn cdf_is_monotone(i in 0usize..6, a in -6.0f64..6.0, w in 0.0f64..3.0) {
            let d = &catalogue_1d()[i];
            prop_assert!(d.cdf(a) <= d.cdf(a + w));
        }
    }
}
