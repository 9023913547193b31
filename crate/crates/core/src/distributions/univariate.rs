use std::sync::Arc;

use super::{Distribution1D, PartialMoments};
use crate::error::{Error, Result};
use crate::special::{
    std_normal_cdf, std_normal_isf, std_normal_ln_pdf, std_normal_pdf, std_normal_quantile, std_normal_sf,
};

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

/// Uniform law on `[a, b]`. Every cell functional is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    a: f64,
    b: f64,
}

impl Uniform {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let (a, b) = (finite("uniform lower bound", a)?, finite("uniform upper bound", b)?);
        if !(b > a) {
            return Err(Error::InvalidParameter(format!("uniform needs a < b, got [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }

    fn width(&self) -> f64 {
        self.b - self.a
    }
}

impl Distribution1D for Uniform {
    fn name(&self) -> String {
        if self.a == 0.0 && self.b == 1.0 {
            "uniform01".into()
        } else {
            format!("uniform({},{})", self.a, self.b)
        }
    }

    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn pdf(&self, x: f64) -> f64 {
        if x >= self.a && x <= self.b {
            1.0 / self.width()
        } else {
            0.0
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        ((x - self.a) / self.width()).clamp(0.0, 1.0)
    }

    fn sf(&self, x: f64) -> f64 {
        ((self.b - x) / self.width()).clamp(0.0, 1.0)
    }

    fn first_moment(&self, x: f64) -> f64 {
        self.partial_moments(self.a, x).first
    }

    fn upper_first_moment(&self, x: f64) -> f64 {
        self.partial_moments(x, self.b).first
    }

    fn second_moment(&self, x: f64) -> f64 {
        self.partial_moments(self.a, x).second
    }

    fn upper_second_moment(&self, x: f64) -> f64 {
        self.partial_moments(x, self.b).second
    }

    fn quantile(&self, u: f64) -> f64 {
        self.a + u * self.width()
    }

    fn upper_quantile(&self, s: f64) -> f64 {
        self.b - s * self.width()
    }

    fn mean(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    fn median(&self) -> f64 {
        self.mean()
    }

    fn strongly_unimodal(&self) -> bool {
        true
    }

    fn scale(&self) -> f64 {
        self.width()
    }

    fn partial_moments(&self, l: f64, r: f64) -> PartialMoments {
        let (l, r) = self.clamp_to_support(l, r);
        if !(r > l) {
            return PartialMoments::default();
        }
        let w = self.width();
        let d = r - l;
        PartialMoments { mass: d / w, first: d * (l + r) / (2.0 * w), second: d * (r * r + r * l + l * l) / (3.0 * w) }
    }

    fn conditional_mean(&self, l: f64, r: f64) -> Option<f64> {
        let (l, r) = self.clamp_to_support(l, r);
        (r > l).then_some(0.5 * (l + r))
    }

    fn centered_second_moment(&self, c: f64, l: f64, r: f64) -> f64 {
        let (l, r) = self.clamp_to_support(l, r);
        if !(r > l) {
            return 0.0;
        }
        let (u, v) = (l - c, r - c);
        (r - l) * (u * u + u * v + v * v) / (3.0 * self.width())
    }

    fn power_moment(&self, c: f64, l: f64, r: f64, p: f64) -> Result<f64> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("exponent p must be positive and finite, got {p}")));
        }
        if p == 2.0 {
            return Ok(self.centered_second_moment(c, l, r));
        }
        let (l, r) = self.clamp_to_support(l, r);
        if !(r > l) {
            return Ok(0.0);
        }
        let q = p + 1.0;
        let mut v = 0.0;
        if c > l {
            let top = c.min(r);
            v += (c - l).powf(q) - (c - top).powf(q);
        }
        if r > c {
            let bottom = c.max(l);
            v += (r - c).powf(q) - (bottom - c).powf(q);
        }
        Ok(v / (q * self.width()))
    }
}

/// Normal law with mean `m` and standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal {
    m: f64,
    sigma: f64,
}

impl Normal {
    pub fn new(m: f64, sigma: f64) -> Result<Self> {
        let m = finite("normal mean", m)?;
        let sigma = finite("normal standard deviation", sigma)?;
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("normal standard deviation must be positive, got {sigma}")));
        }
        Ok(Self { m, sigma })
    }

    pub fn standard() -> Self {
        Self { m: 0.0, sigma: 1.0 }
    }

    fn z(&self, x: f64) -> f64 {
        (x - self.m) / self.sigma
    }
}

// z * phi(z), taken as 0 at infinity
fn z_phi(z: f64) -> f64 {
    if z.is_finite() {
        z * std_normal_pdf(z)
    } else {
        0.0
    }
}

impl Distribution1D for Normal {
    fn name(&self) -> String {
        format!("normal({},{})", self.m, self.sigma)
    }

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn pdf(&self, x: f64) -> f64 {
        std_normal_pdf(self.z(x)) / self.sigma
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        std_normal_ln_pdf(self.z(x)) - self.sigma.ln()
    }

    fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf(self.z(x))
    }

    fn sf(&self, x: f64) -> f64 {
        std_normal_sf(self.z(x))
    }

    fn first_moment(&self, x: f64) -> f64 {
        let z = self.z(x);
        self.m * std_normal_cdf(z) - self.sigma * std_normal_pdf(z)
    }

    fn upper_first_moment(&self, x: f64) -> f64 {
        let z = self.z(x);
        self.m * std_normal_sf(z) + self.sigma * std_normal_pdf(z)
    }

    fn second_moment(&self, x: f64) -> f64 {
        let z = self.z(x);
        let (cdf, pdf) = (std_normal_cdf(z), std_normal_pdf(z));
        let (m, s) = (self.m, self.sigma);
        m * m * cdf - 2.0 * m * s * pdf + s * s * (cdf - z_phi(z))
    }

    fn upper_second_moment(&self, x: f64) -> f64 {
        let z = self.z(x);
        let (sf, pdf) = (std_normal_sf(z), std_normal_pdf(z));
        let (m, s) = (self.m, self.sigma);
        m * m * sf + 2.0 * m * s * pdf + s * s * (sf + z_phi(z))
    }

    fn quantile(&self, u: f64) -> f64 {
        self.m + self.sigma * std_normal_quantile(u)
    }

    fn upper_quantile(&self, s: f64) -> f64 {
        self.m + self.sigma * std_normal_isf(s)
    }

    fn mean(&self) -> f64 {
        self.m
    }

    fn median(&self) -> f64 {
        self.m
    }

    fn strongly_unimodal(&self) -> bool {
        true
    }

    fn scale(&self) -> f64 {
        self.sigma
    }
}

/// Exponential law with rate `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    lambda: f64,
}

impl Exponential {
    pub fn new(lambda: f64) -> Result<Self> {
        let lambda = finite("exponential rate", lambda)?;
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("exponential rate must be positive, got {lambda}")));
        }
        Ok(Self { lambda })
    }
}

impl Distribution1D for Exponential {
    fn name(&self) -> String {
        format!("exponential({})", self.lambda)
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn pdf(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.lambda * (-self.lambda * x).exp()
        } else {
            0.0
        }
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.lambda.ln() - self.lambda * x
        } else {
            f64::NEG_INFINITY
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x > 0.0 {
            -(-self.lambda * x).exp_m1()
        } else {
            0.0
        }
    }

    fn sf(&self, x: f64) -> f64 {
        if x > 0.0 {
            (-self.lambda * x).exp()
        } else {
            1.0
        }
    }

    fn first_moment(&self, x: f64) -> f64 {
        self.mean() - self.upper_first_moment(x)
    }

    fn upper_first_moment(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return 0.0;
        }
        let x = x.max(0.0);
        (x + 1.0 / self.lambda) * self.sf(x)
    }

    fn second_moment(&self, x: f64) -> f64 {
        2.0 / (self.lambda * self.lambda) - self.upper_second_moment(x)
    }

    fn upper_second_moment(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return 0.0;
        }
        let x = x.max(0.0);
        let il = 1.0 / self.lambda;
        (x * x + 2.0 * x * il + 2.0 * il * il) * self.sf(x)
    }

    fn quantile(&self, u: f64) -> f64 {
        -(-u).ln_1p() / self.lambda
    }

    fn upper_quantile(&self, s: f64) -> f64 {
        -s.ln() / self.lambda
    }

    fn mean(&self) -> f64 {
        1.0 / self.lambda
    }

    fn median(&self) -> f64 {
        std::f64::consts::LN_2 / self.lambda
    }

    fn strongly_unimodal(&self) -> bool {
        true
    }

    fn scale(&self) -> f64 {
        1.0 / self.lambda
    }
}

/// A law restricted to `[lo, hi]` and renormalised.
#[derive(Debug, Clone)]
pub struct Conditioned {
    base: Arc<dyn Distribution1D>,
    lo: f64,
    hi: f64,
    z: f64,
    name: String,
}

impl Conditioned {
    pub fn new(base: Arc<dyn Distribution1D>, lo: f64, hi: f64) -> Result<Self> {
        let (blo, bhi) = base.support();
        let (lo, hi) = (lo.max(blo), hi.min(bhi));
        let z = base.mass(lo, hi);
        if !(z > 0.0) {
            return Err(Error::InvalidParameter(format!("conditioning interval [{lo}, {hi}] has no mass")));
        }
        let name = if lo == 0.0 && hi == f64::INFINITY && base.mean() == 0.0 && base.name().starts_with("normal") {
            if base.scale() == 1.0 {
                "halfnormal".to_string()
            } else {
                format!("halfnormal({})", base.scale())
            }
        } else {
            format!("{}|[{lo},{hi}]", base.name())
        };
        Ok(Self { base, lo, hi, z, name })
    }

    fn upper_side(&self) -> bool {
        self.lo >= self.base.median()
    }

    fn clip(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

impl Distribution1D for Conditioned {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn pdf(&self, x: f64) -> f64 {
        if x >= self.lo && x <= self.hi {
            self.base.pdf(x) / self.z
        } else {
            0.0
        }
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        if x >= self.lo && x <= self.hi {
            self.base.ln_pdf(x) - self.z.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn has_density(&self) -> bool {
        self.base.has_density()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let v = if self.upper_side() {
            self.base.sf(self.lo) - self.base.sf(x)
        } else {
            self.base.cdf(x) - self.base.cdf(self.lo)
        };
        (v / self.z).clamp(0.0, 1.0)
    }

    fn sf(&self, x: f64) -> f64 {
        if x < self.lo {
            return 1.0;
        }
        if x >= self.hi {
            return 0.0;
        }
        let v = if x >= self.base.median() {
            self.base.sf(x) - self.base.sf(self.hi)
        } else {
            self.base.cdf(self.hi) - self.base.cdf(x)
        };
        (v / self.z).clamp(0.0, 1.0)
    }

    fn first_moment(&self, x: f64) -> f64 {
        let x = self.clip(x);
        let v = if self.upper_side() {
            self.base.upper_first_moment(self.lo) - self.base.upper_first_moment(x)
        } else {
            self.base.first_moment(x) - self.base.first_moment(self.lo)
        };
        v / self.z
    }

    fn upper_first_moment(&self, x: f64) -> f64 {
        let x = self.clip(x);
        let v = if x >= self.base.median() {
            self.base.upper_first_moment(x) - self.base.upper_first_moment(self.hi)
        } else {
            self.base.first_moment(self.hi) - self.base.first_moment(x)
        };
        v / self.z
    }

    fn second_moment(&self, x: f64) -> f64 {
        let x = self.clip(x);
        let v = if self.upper_side() {
            self.base.upper_second_moment(self.lo) - self.base.upper_second_moment(x)
        } else {
            self.base.second_moment(x) - self.base.second_moment(self.lo)
        };
        v / self.z
    }

    fn upper_second_moment(&self, x: f64) -> f64 {
        let x = self.clip(x);
        let v = if x >= self.base.median() {
            self.base.upper_second_moment(x) - self.base.upper_second_moment(self.hi)
        } else {
            self.base.second_moment(self.hi) - self.base.second_moment(x)
        };
        v / self.z
    }

    fn quantile(&self, u: f64) -> f64 {
        let x = if self.upper_side() {
            self.base.upper_quantile(self.base.sf(self.lo) - u * self.z)
        } else {
            self.base.quantile(self.base.cdf(self.lo) + u * self.z)
        };
        self.clip(x)
    }

    fn upper_quantile(&self, s: f64) -> f64 {
        let x = if self.upper_side() {
            self.base.upper_quantile(self.base.sf(self.hi) + s * self.z)
        } else {
            self.base.quantile(self.base.cdf(self.hi) - s * self.z)
        };
        self.clip(x)
    }

    fn mean(&self) -> f64 {
        self.first_moment(self.hi)
    }

    fn strongly_unimodal(&self) -> bool {
        self.base.strongly_unimodal()
    }

    fn moment_order(&self) -> f64 {
        self.base.moment_order()
    }

    fn scale(&self) -> f64 {
        let w = self.hi - self.lo;
        if w.is_finite() {
            self.base.scale().min(w)
        } else {
            self.base.scale()
        }
    }
}

/// Point mass at `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dirac {
    c: f64,
}

impl Dirac {
    pub fn new(c: f64) -> Result<Self> {
        Ok(Self { c: finite("dirac location", c)? })
    }

    fn inside(&self, l: f64, r: f64) -> bool {
        l <= self.c && self.c <= r
    }
}

impl Distribution1D for Dirac {
    fn name(&self) -> String {
        format!("dirac({})", self.c)
    }

    fn support(&self) -> (f64, f64) {
        (self.c, self.c)
    }

    fn pdf(&self, _x: f64) -> f64 {
        0.0
    }

    fn has_density(&self) -> bool {
        false
    }

    fn cdf(&self, x: f64) -> f64 {
        if x >= self.c {
            1.0
        } else {
            0.0
        }
    }

    fn first_moment(&self, x: f64) -> f64 {
        self.cdf(x) * self.c
    }

    fn second_moment(&self, x: f64) -> f64 {
        self.cdf(x) * self.c * self.c
    }

    fn quantile(&self, _u: f64) -> f64 {
        self.c
    }

    fn mean(&self) -> f64 {
        self.c
    }

    fn median(&self) -> f64 {
        self.c
    }

    fn strongly_unimodal(&self) -> bool {
        false
    }

    fn scale(&self) -> f64 {
        1.0
    }

    fn partial_moments(&self, l: f64, r: f64) -> PartialMoments {
        if self.inside(l, r) {
            PartialMoments { mass: 1.0, first: self.c, second: self.c * self.c }
        } else {
            PartialMoments::default()
        }
    }

    fn conditional_mean(&self, l: f64, r: f64) -> Option<f64> {
        self.inside(l, r).then_some(self.c)
    }

    fn centered_second_moment(&self, c: f64, l: f64, r: f64) -> f64 {
        if self.inside(l, r) {
            (self.c - c).powi(2)
        } else {
            0.0
        }
    }

    fn power_moment(&self, c: f64, l: f64, r: f64, p: f64) -> Result<f64> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("exponent p must be positive and finite, got {p}")));
        }
        Ok(if self.inside(l, r) { (self.c - c).abs().powf(p) } else { 0.0 })
    }
}
