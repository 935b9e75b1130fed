//! The Marchenko-Pastur family `F_{c, sigma^2}` and the retention limits
//! built from it.
//!
//! Every quantity is evaluated through a unit-scale kernel in the variable
//! `x / sigma^2`, so `F_{c, sigma^2}(x) = F_{c, 1}(x / sigma^2)` holds
//! bit-for-bit, and likewise for the normalized first-moment function `G`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::extended::ExtReal;

/// Upper bound on the width of the bracket returned by the bisections in
/// this module. In practice they run until the bracket cannot shrink.
pub const BISECTION_ARG_TOL: f64 = 1e-10;
/// Iteration cap for the bisections in this module.
pub const BISECTION_MAX_ITER: usize = 200;

/// A Marchenko-Pastur law with index `c` (the limit of `p/n`) and scale
/// `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpLaw {
    c: f64,
    sigma2: f64,
}

impl MpLaw {
    pub fn new(c: f64, sigma2: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "index c must be positive, got {c}"
            )));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale sigma2 must be positive, got {sigma2}"
            )));
        }
        Ok(MpLaw { c, sigma2 })
    }

    /// The unit-scale law `F_{c, 1}`.
    pub fn standard(c: f64) -> Result<Self> {
        Self::new(c, 1.0)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Lower support edge `sigma2 (1 - sqrt c)^2`.
    pub fn lower_edge(&self) -> f64 {
        self.sigma2 * unit_edges(self.c).0
    }

    /// Upper support edge `sigma2 (1 + sqrt c)^2`.
    pub fn upper_edge(&self) -> f64 {
        self.sigma2 * unit_edges(self.c).1
    }

    /// Probability mass at zero, `max(0, 1 - 1/c)`.
    pub fn point_mass(&self) -> f64 {
        point_mass(self.c)
    }

    /// Density of the continuous part. The atom at zero is not included.
    pub fn pdf(&self, x: f64) -> f64 {
        unit_pdf(self.c, x / self.sigma2) / self.sigma2
    }

    /// Right-continuous distribution function, atom included.
    pub fn cdf(&self, x: f64) -> f64 {
        unit_cdf(self.c, x / self.sigma2)
    }

    /// Generalized inverse `inf { x : F(x) >= u }` for `u` in `[0, 1]`.
    ///
    /// Levels at or below the atom map to 0. For `c <= 1`, `u = 0` maps to
    /// the lower support edge.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidParameter(format!(
                "quantile level must lie in [0, 1], got {u}"
            )));
        }
        let c = self.c;
        let (a, b) = unit_edges(c);
        let atom = point_mass(c);
        let y = if c > 1.0 && u <= atom {
            0.0
        } else if u == 0.0 {
            a
        } else if u == 1.0 {
            b
        } else {
            smallest_at_level(|y| unit_cdf(c, y), a, b, u)
        };
        Ok(self.sigma2 * y)
    }

    /// `G_{c, sigma^2}(x)`: the share of the mean `sigma2` carried by
    /// eigenvalues at most `x`. The atom at zero contributes nothing.
    pub fn tail_mass(&self, x: f64) -> f64 {
        unit_tail_mass(self.c, x / self.sigma2)
    }

    /// Generalized inverse of [`MpLaw::tail_mass`].
    ///
    /// Returns `NegInf` for `u <= 0` (no lower bound), `PosInf` for `u > 1`
    /// (empty level set), and otherwise the unique point of `(a, b]` where
    /// `G` reaches `u`.
    pub fn tail_mass_inverse(&self, u: f64) -> ExtReal {
        if u.is_nan() {
            // NaN compares false against every level; treat as empty.
            return ExtReal::PosInf;
        }
        if u <= 0.0 {
            return ExtReal::NegInf;
        }
        if u > 1.0 {
            return ExtReal::PosInf;
        }
        let c = self.c;
        let (a, b) = unit_edges(c);
        let y = if u == 1.0 {
            b
        } else {
            smallest_at_level(|y| unit_tail_mass(c, y), a, b, u)
        };
        ExtReal::Finite(self.sigma2 * y)
    }

    /// Generalized inverse of the defective function `k G_{c, sigma^2}`,
    /// using `(kG)^-(z) = G^-(z / k)`.
    pub fn scaled_tail_mass_inverse(&self, k: f64, z: f64) -> Result<ExtReal> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale k must be positive, got {k}"
            )));
        }
        Ok(self.tail_mass_inverse(z / k))
    }
}

fn point_mass(c: f64) -> f64 {
    (1.0 - 1.0 / c).max(0.0)
}

fn unit_edges(c: f64) -> (f64, f64) {
    let s = c.sqrt();
    ((1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s))
}

fn unit_pdf(c: f64, y: f64) -> f64 {
    let (a, b) = unit_edges(c);
    if y <= a || y >= b || y <= 0.0 {
        return 0.0;
    }
    ((b - y) * (y - a)).sqrt() / (2.0 * PI * c * y)
}

fn unit_cdf(c: f64, y: f64) -> f64 {
    if y.is_nan() {
        return f64::NAN;
    }
    if y < 0.0 {
        return 0.0;
    }
    let (a, b) = unit_edges(c);
    let atom = point_mass(c);
    // Right-continuous at the lower edge: no continuous mass has accrued.
    if y <= a {
        return atom;
    }
    if y >= b {
        return 1.0;
    }
    // Closed form with r(y) = sqrt((b - y) / (y - a)). Both arctangents are
    // written as atan2 with a positive second argument after multiplying
    // through by (y - a), which keeps r out of the computation entirely.
    let below = y - a;
    let above = b - y;
    let root = (above * below).sqrt();
    let mut acc = PI * c + root - (1.0 + c) * (above - below).atan2(2.0 * root);
    if c != 1.0 {
        let gap = 1.0 - c;
        let num = a * above - b * below;
        acc += gap * (num * gap.signum()).atan2(2.0 * gap.abs() * root);
    }
    let mut value = acc / (2.0 * PI * c);
    if c > 1.0 {
        value += (c - 1.0) / (2.0 * c);
    }
    value.clamp(atom, 1.0)
}

fn unit_tail_mass(c: f64, y: f64) -> f64 {
    if y.is_nan() {
        return f64::NAN;
    }
    let (a, b) = unit_edges(c);
    if y <= a {
        return 0.0;
    }
    if y >= b {
        return 1.0;
    }
    // lambda * density is a semicircle of radius 2 sqrt(c) centred at 1 + c.
    let radius = 2.0 * c.sqrt();
    let offset = y - (1.0 + c);
    let root = ((b - y) * (y - a)).sqrt();
    let area = 0.5 * offset * root
        + 0.5 * radius * radius * ((offset / radius).clamp(-1.0, 1.0).asin() + 0.5 * PI);
    (area / (2.0 * PI * c)).clamp(0.0, 1.0)
}

/// Smallest `y` in `(lo, hi]` with `f(y) >= level`, for nondecreasing `f`
/// with `f(lo) < level <= f(hi)`.
fn smallest_at_level<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, level: f64) -> f64 {
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    debug_assert!(hi - lo <= BISECTION_ARG_TOL);
    hi
}

/// Parameters of the limiting retention fractions: index `c`, equi-correlation
/// `rho` in `[0, 1)` and, for CPV queries, a threshold `t` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitParams {
    pub c: f64,
    pub rho: f64,
    pub t: Option<f64>,
}

impl LimitParams {
    pub fn new(c: f64, rho: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "index c must be positive, got {c}"
            )));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in [0, 1), got {rho}"
            )));
        }
        Ok(LimitParams { c, rho, t: None })
    }

    pub fn with_t(mut self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold t must lie in (0, 1), got {t}"
            )));
        }
        self.t = Some(t);
        Ok(self)
    }

    /// `GK_{c, rho} = 1 - F_{c,1}(1 / (1 - rho))`.
    pub fn gk(&self) -> f64 {
        1.0 - unit_cdf(self.c, 1.0 / (1.0 - self.rho))
    }

    /// `CP_{c, rho}(t) = 1 - F_{c,1}(G_{c,1}^-((1 - t) / (1 - rho)))`.
    pub fn cpv(&self) -> Result<f64> {
        let t = self
            .t
            .ok_or_else(|| Error::InvalidParameter("CPV limit needs a threshold t".into()))?;
        let law = MpLaw {
            c: self.c,
            sigma2: 1.0,
        };
        let level = (1.0 - t) / (1.0 - self.rho);
        let threshold = law.tail_mass_inverse(level);
        Ok(1.0 - threshold.map_monotone(|x| law.cdf(x), 0.0, 1.0))
    }
}

/// Limiting Guttman-Kaiser retention fraction `GK_{c, rho}`.
pub fn gk_limit(c: f64, rho: f64) -> Result<f64> {
    Ok(LimitParams::new(c, rho)?.gk())
}

/// Limiting CPV retention fraction `CP_{c, rho}(t)`.
pub fn cpv_limit(c: f64, rho: f64, t: f64) -> Result<f64> {
    LimitParams::new(c, rho)?.with_t(t)?.cpv()
}

/// Smallest index at which `GK_{c, rho} = 1/c`: `(1/sqrt(1 - rho) + 1)^2`.
pub fn gk_saturation_index(rho: f64) -> f64 {
    let s = 1.0 / (1.0 - rho).sqrt() + 1.0;
    s * s
}
