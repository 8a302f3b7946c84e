//! Scalar test fields.

use crate::geometry::{dist, DomainSpec, Point};
use crate::profile::{Asymptotic, RadialProfile};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random field sampled on a uniform lattice over a bounding box and
/// interpolated multilinearly.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField {
    dim: usize,
    lo: Point,
    hi: Point,
    cells: usize,
    seed: u64,
    values: Vec<f64>,
}

impl LatticeField {
    /// Values uniform in `[0.5, 1.5]` at the `(cells+1)^n` lattice points.
    pub fn random(dom: &DomainSpec, cells: usize, seed: u64) -> Result<LatticeField> {
        if cells == 0 || cells > 512 {
            return Err(Error::InvalidField(format!("lattice cells must be in 1..=512, got {cells}")));
        }
        let dim = dom.dim();
        let (lo, hi) = dom.bounding_box();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = (cells + 1).pow(dim as u32);
        let values = (0..count).map(|_| rng.gen_range(0.5..1.5)).collect();
        Ok(LatticeField { dim, lo, hi, cells, seed, values })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn value(&self, x: &Point) -> f64 {
        let m = self.cells;
        let mut idx = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..self.dim {
            let t = ((x[a] - self.lo[a]) / (self.hi[a] - self.lo[a]) * m as f64).clamp(0.0, m as f64);
            let i = (t.floor() as usize).min(m - 1);
            idx[a] = i;
            frac[a] = t - i as f64;
        }
        let mut v = 0.0;
        for corner in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for a in (0..self.dim).rev() {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                flat = flat * (m + 1) + idx[a] + bit;
            }
            v += w * self.values[flat];
        }
        v
    }
}

/// A scalar function on the domain.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    /// `profile(|x - center|)`
    Radial { center: Point, profile: RadialProfile },
    /// `value` on `B(center, radius)`, zero elsewhere.
    Indicator { center: Point, radius: f64, value: f64 },
    /// `x_axis - origin_axis`
    Coordinate { axis: usize, origin: Point },
    Lattice(LatticeField),
    Scaled(f64, Box<ScalarField>),
    Sum(Vec<ScalarField>),
    Product(Box<ScalarField>, Box<ScalarField>),
}

/// Exact radial description `profile(r)·[r < cutoff]` about a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialView {
    pub profile: RadialProfile,
    pub cutoff: f64,
}

impl RadialView {
    pub fn abs(&self, r: f64) -> f64 {
        if r < self.cutoff {
            self.profile.value(r).abs()
        } else {
            0.0
        }
    }

    /// `ln|f|` at `r = e^{-u}`.
    pub fn ln_abs_u(&self, u: f64) -> f64 {
        if (-u).exp() < self.cutoff {
            self.profile.ln_abs_u(u)
        } else {
            f64::NEG_INFINITY
        }
    }

    fn mul(&self, o: &RadialView) -> Option<RadialView> {
        Some(RadialView { profile: self.profile.mul(&o.profile)?, cutoff: self.cutoff.min(o.cutoff) })
    }
}

impl ScalarField {
    /// `|x - center|^s`
    pub fn power(center: Point, s: f64) -> ScalarField {
        ScalarField::Radial { center, profile: RadialProfile::power(s) }
    }

    pub fn radial(center: Point, profile: RadialProfile) -> ScalarField {
        ScalarField::Radial { center, profile }
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Radial { center, profile } => profile.value(dist(x, center)),
            ScalarField::Indicator { center, radius, value } => {
                if dist(x, center) < *radius {
                    *value
                } else {
                    0.0
                }
            }
            ScalarField::Coordinate { axis, origin } => x[*axis] - origin[*axis],
            ScalarField::Lattice(l) => l.value(x),
            ScalarField::Scaled(c, f) => c * f.value(x),
            ScalarField::Sum(fs) => fs.iter().map(|f| f.value(x)).sum(),
            ScalarField::Product(a, b) => a.value(x) * b.value(x),
        }
    }

    /// `ln|f(x)|`, computed without overflow for radial profiles.
    pub fn ln_abs(&self, x: &Point) -> f64 {
        match self {
            ScalarField::Radial { center, profile } => {
                let r = dist(x, center);
                profile.ln_abs_u(-r.ln())
            }
            ScalarField::Scaled(c, f) => c.abs().ln() + f.ln_abs(x),
            ScalarField::Product(a, b) => a.ln_abs(x) + b.ln_abs(x),
            _ => self.value(x).abs().ln(),
        }
    }

    /// Exact radial description about `x0`, valid on the whole domain.
    pub fn radial_view(&self, x0: &Point) -> Option<RadialView> {
        self.view(x0, f64::INFINITY)
    }

    /// Exact radial description about `x0`, valid on `B(x0, r)`.
    pub fn core_view(&self, x0: &Point, r: f64) -> Option<RadialView> {
        self.view(x0, r)
    }

    fn view(&self, x0: &Point, r: f64) -> Option<RadialView> {
        const SAME: f64 = 1e-14;
        match self {
            ScalarField::Constant(c) => Some(RadialView { profile: RadialProfile::constant(*c), cutoff: f64::INFINITY }),
            ScalarField::Radial { center, profile } if dist(center, x0) <= SAME => {
                Some(RadialView { profile: *profile, cutoff: f64::INFINITY })
            }
            ScalarField::Indicator { center, radius, value } => {
                let d = dist(center, x0);
                if d <= SAME {
                    Some(RadialView { profile: RadialProfile::constant(*value), cutoff: *radius })
                } else if d + r <= *radius {
                    Some(RadialView { profile: RadialProfile::constant(*value), cutoff: f64::INFINITY })
                } else if d >= radius + r {
                    Some(RadialView { profile: RadialProfile::constant(0.0), cutoff: f64::INFINITY })
                } else {
                    None
                }
            }
            ScalarField::Scaled(c, f) => f.view(x0, r).map(|v| RadialView { profile: v.profile.scaled(*c), ..v }),
            ScalarField::Product(a, b) => a.view(x0, r)?.mul(&b.view(x0, r)?),
            ScalarField::Sum(fs) if fs.len() == 1 => fs[0].view(x0, r),
            _ => None,
        }
    }

    /// Growth of `|f|` as `x → x0`; `None` when `f` vanishes near `x0`.
    pub fn local_growth(&self, x0: &Point) -> Option<Asymptotic> {
        match self {
            ScalarField::Constant(c) => (*c != 0.0).then_some(Asymptotic::BOUNDED),
            ScalarField::Radial { center, profile } => {
                if profile.coef == 0.0 {
                    None
                } else if dist(center, x0) <= 1e-14 {
                    Some(profile.asymptotic())
                } else {
                    Some(Asymptotic::BOUNDED)
                }
            }
            ScalarField::Indicator { center, radius, value } => {
                (dist(center, x0) < *radius && *value != 0.0).then_some(Asymptotic::BOUNDED)
            }
            ScalarField::Coordinate { .. } | ScalarField::Lattice(_) => Some(Asymptotic::BOUNDED),
            ScalarField::Scaled(c, f) => {
                if *c == 0.0 {
                    None
                } else {
                    f.local_growth(x0)
                }
            }
            ScalarField::Sum(fs) => fs.iter().filter_map(|f| f.local_growth(x0)).reduce(|a, b| {
                let ka = (a.power, a.log, a.loglog);
                let kb = (b.power, b.log, b.loglog);
                if ka.partial_cmp(&kb) == Some(std::cmp::Ordering::Less) {
                    b
                } else {
                    a
                }
            }),
            ScalarField::Product(a, b) => Some(a.local_growth(x0)?.times(&b.local_growth(x0)?)),
        }
    }
}
