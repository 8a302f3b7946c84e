//! Variable exponent and order fields.
//!
//! An [`ExponentField`] couples a closed-form expression with its attained
//! bounds over a fine polar grid. Log-Hölder continuity is certified by a
//! seeded sampler that tracks the worst increment across dyadic scales.

use crate::geometry::{axpy, dist, norm, scale, DomainSpec, Point, QuadratureGrid, RadialLadder};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Closed-form exponent expressions; `r` is the distance to `x0`.
#[derive(Clone, Debug, PartialEq)]
pub enum ExponentExpr {
    Constant(f64),
    /// `a + b·r`
    RadialAffine { a: f64, b: f64 },
    /// `a + b / ln(c / r)`
    RadialLog { a: f64, b: f64, c: f64 },
    /// `a + b·cos(c·r)`
    RadialCos { a: f64, b: f64, c: f64 },
    /// `base + amp·r^power` on the half-space `x_1 > x0_1`, `base` elsewhere.
    HalfSpaceJump { base: f64, amp: f64, power: f64 },
    /// `p / (p - 1)`
    Conjugate(Box<ExponentExpr>),
    /// `n·p / (n - α·p)`
    Sobolev { p: Box<ExponentExpr>, alpha: Box<ExponentExpr>, n: usize },
}

impl ExponentExpr {
    fn eval(&self, x: &Point, x0: &Point, r: f64) -> f64 {
        match self {
            ExponentExpr::Constant(a) => *a,
            ExponentExpr::RadialAffine { a, b } => a + b * r,
            ExponentExpr::RadialLog { a, b, c } => a + b / (c / r).ln(),
            ExponentExpr::RadialCos { a, b, c } => a + b * (c * r).cos(),
            ExponentExpr::HalfSpaceJump { base, amp, power } => {
                if x[0] > x0[0] {
                    base + amp * r.powf(*power)
                } else {
                    *base
                }
            }
            ExponentExpr::Conjugate(p) => {
                let v = p.eval(x, x0, r);
                v / (v - 1.0)
            }
            ExponentExpr::Sobolev { p, alpha, n } => {
                let (pv, av) = (p.eval(x, x0, r), alpha.eval(x, x0, r));
                *n as f64 * pv / (*n as f64 - av * pv)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ExponentExpr::Constant(_) => true,
            ExponentExpr::RadialAffine { b, .. } | ExponentExpr::RadialLog { b, .. } | ExponentExpr::RadialCos { b, .. } => *b == 0.0,
            ExponentExpr::HalfSpaceJump { amp, .. } => *amp == 0.0,
            ExponentExpr::Conjugate(p) => p.is_constant(),
            ExponentExpr::Sobolev { p, alpha, .. } => p.is_constant() && alpha.is_constant(),
        }
    }

    pub fn is_radial(&self) -> bool {
        match self {
            ExponentExpr::HalfSpaceJump { amp, .. } => *amp == 0.0,
            ExponentExpr::Conjugate(p) => p.is_radial(),
            ExponentExpr::Sobolev { p, alpha, .. } => p.is_radial() && alpha.is_radial(),
            _ => true,
        }
    }

    fn check_scale(&self, r_max: f64) -> Result<()> {
        match self {
            ExponentExpr::RadialLog { b, c, .. } if *b != 0.0 && !(*c > r_max) => {
                Err(Error::InvalidExponent(format!("log scale {c} must exceed {r_max}")))
            }
            ExponentExpr::Conjugate(p) => p.check_scale(r_max),
            ExponentExpr::Sobolev { p, alpha, .. } => {
                p.check_scale(r_max)?;
                alpha.check_scale(r_max)
            }
            _ => Ok(()),
        }
    }
}

/// What a field is used for; decides the admissible range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExponentRole {
    /// Integrability exponent: `1 < p₋ <= p₊ < ∞`, or constant `p >= 1`.
    Lebesgue,
    /// Fractional order: `0 < α₋ <= α₊ < n`.
    Order,
}

/// A validated exponent or order field on a domain.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentField {
    expr: ExponentExpr,
    x0: Point,
    dim: usize,
    minus: f64,
    plus: f64,
    role: ExponentRole,
}

/// Depth of the grid used to locate the attained bounds.
const BOUNDS_DEPTH: usize = 24;

impl ExponentField {
    pub fn new(expr: ExponentExpr, dom: &DomainSpec, role: ExponentRole) -> Result<ExponentField> {
        let x0 = dom.x0();
        expr.check_scale(dom.max_distance_from(&x0))?;
        let (minus, plus) = if expr.is_constant() {
            let v = expr.eval(&x0, &x0, 0.0);
            (v, v)
        } else {
            let ladder = RadialLadder::for_domain(dom, BOUNDS_DEPTH)?;
            let grid = QuadratureGrid::fine(dom, &ladder)?;
            let mut lo = expr.eval(&x0, &x0, 0.0);
            let mut hi = lo;
            let boundary = grid.rays().iter().map(|r| (axpy(&x0, r.exit, &r.dir), r.exit));
            for (x, r) in grid.nodes().iter().map(|n| (n.x, n.r)).chain(boundary) {
                let v = expr.eval(&x, &x0, r);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (lo, hi)
        };
        if !(minus.is_finite() && plus.is_finite()) {
            return Err(Error::InvalidExponent("exponent is not finite on the domain".into()));
        }
        let field = ExponentField { expr, x0, dim: dom.dim(), minus, plus, role };
        match role {
            ExponentRole::Lebesgue => {
                let ok = if field.expr.is_constant() { minus >= 1.0 } else { minus > 1.0 };
                if !ok {
                    return Err(Error::InvalidExponent(format!("need p₋ > 1 (or constant p >= 1), got p₋ = {minus}")));
                }
            }
            ExponentRole::Order => {
                if !(minus > 0.0 && plus < dom.dim() as f64) {
                    return Err(Error::InvalidExponent(format!("need 0 < α₋ and α₊ < n, got [{minus}, {plus}]")));
                }
            }
        }
        Ok(field)
    }

    pub fn lebesgue(expr: ExponentExpr, dom: &DomainSpec) -> Result<ExponentField> {
        ExponentField::new(expr, dom, ExponentRole::Lebesgue)
    }

    pub fn order(expr: ExponentExpr, dom: &DomainSpec) -> Result<ExponentField> {
        ExponentField::new(expr, dom, ExponentRole::Order)
    }

    pub fn constant(p: f64, dom: &DomainSpec) -> Result<ExponentField> {
        ExponentField::lebesgue(ExponentExpr::Constant(p), dom)
    }

    pub fn expr(&self) -> &ExponentExpr {
        &self.expr
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.expr.eval(x, &self.x0, dist(x, &self.x0))
    }

    /// Value at distance `r` from `x0`, when the field is radial.
    pub fn eval_radial(&self, r: f64) -> Option<f64> {
        self.expr.is_radial().then(|| self.expr.eval(&self.x0, &self.x0, r))
    }

    pub fn at_x0(&self) -> f64 {
        self.expr.eval(&self.x0, &self.x0, 0.0)
    }

    pub fn minus(&self) -> f64 {
        self.minus
    }

    pub fn plus(&self) -> f64 {
        self.plus
    }

    pub fn is_constant(&self) -> bool {
        self.expr.is_constant()
    }

    pub fn is_radial(&self) -> bool {
        self.expr.is_radial()
    }

    pub fn role(&self) -> ExponentRole {
        self.role
    }

    /// `p' = p/(p-1)`; requires `p₋ > 1`.
    pub fn conjugate(&self, dom: &DomainSpec) -> Result<ExponentField> {
        if self.role != ExponentRole::Lebesgue || self.minus <= 1.0 {
            return Err(Error::InvalidExponent(format!("conjugate needs p₋ > 1, got {}", self.minus)));
        }
        ExponentField::lebesgue(ExponentExpr::Conjugate(Box::new(self.expr.clone())), dom)
    }

    /// Conjugate value at `x0`, infinite when `p(x0) = 1`.
    pub fn conjugate_at_x0(&self) -> f64 {
        let p = self.at_x0();
        if p == 1.0 {
            f64::INFINITY
        } else {
            p / (p - 1.0)
        }
    }

    /// `q = n·p/(n - α·p)`; requires `sup α·p < n`.
    pub fn sobolev(p: &ExponentField, alpha: &ExponentField, dom: &DomainSpec) -> Result<ExponentField> {
        if alpha.role != ExponentRole::Order || p.role != ExponentRole::Lebesgue {
            return Err(Error::InvalidExponent("sobolev exponent needs a Lebesgue p and an order α".into()));
        }
        let n = dom.dim() as f64;
        if alpha.plus * p.plus >= n {
            let ladder = RadialLadder::for_domain(dom, BOUNDS_DEPTH)?;
            let grid = QuadratureGrid::fine(dom, &ladder)?;
            let worst = grid
                .nodes()
                .iter()
                .map(|nd| alpha.eval(&nd.x) * p.eval(&nd.x))
                .fold(alpha.at_x0() * p.at_x0(), f64::max);
            if worst >= n {
                return Err(Error::InvalidExponent(format!("need α·p < n, got sup α·p = {worst}")));
            }
        }
        ExponentField::lebesgue(
            ExponentExpr::Sobolev { p: Box::new(p.expr.clone()), alpha: Box::new(alpha.expr.clone()), n: dom.dim() },
            dom,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Result of the log-Hölder check.
#[derive(Clone, Debug, PartialEq)]
pub struct LogHolderCertificate {
    /// Largest observed `|p(x) - p(y)|·ln(1/|x - y|)` over pairs with `|x - y| <= 1/2`.
    pub constant: f64,
    /// The observed constant at each dyadic scale.
    pub levels: Vec<f64>,
    pub pairs_checked: usize,
    pub worst_pair: (Point, Point),
    /// Whether the constant stays bounded as the scale shrinks.
    pub log_holder: bool,
}

fn sample_point<R: Rng>(dom: &DomainSpec, rng: &mut R, near_x0: bool) -> Point {
    let n = dom.dim();
    let (lo, hi) = dom.bounding_box();
    let x0 = dom.x0();
    loop {
        let mut p = [0.0; 3];
        if near_x0 {
            let mut v = [0.0; 3];
            for a in 0..n {
                v[a] = rng.gen_range(-1.0..1.0);
            }
            let len = norm(&v);
            if len == 0.0 || len > 1.0 {
                continue;
            }
            let rho = dom.ell() * 2f64.powf(-rng.gen_range(0.0..30.0));
            p = axpy(&x0, rho / len, &v);
        } else {
            for a in 0..n {
                p[a] = rng.gen_range(lo[a]..hi[a]);
            }
        }
        if dom.contains(&p) {
            return p;
        }
    }
}

fn unit_vector<R: Rng>(n: usize, rng: &mut R) -> Point {
    loop {
        let mut v = [0.0; 3];
        for a in 0..n {
            v[a] = rng.gen_range(-1.0..1.0);
        }
        let len = norm(&v);
        if len > 1e-3 && len <= 1.0 {
            return scale(&v, 1.0 / len);
        }
    }
}

/// Number of dyadic scales examined by [`check_log_holder`].
pub const LOG_HOLDER_SCALES: usize = 40;

/// Candidate pairs carried from one scale to the next.
const CARRIED: usize = 32;

/// Scale-resolved log-Hölder check.
///
/// For each distance `d_j = d_0·2^{-j}` the largest increment `M_j` of `p`
/// over pairs at that distance is estimated from `samples` seeded pairs
/// (half of them anchored at `x0`) plus the two halves of the worst pairs
/// of the previous scale. `levels[j] = M_j·ln(1/d_j)`. The field is
/// accepted when the fitted growth of `levels` over the finer half of the
/// scales is small against its size: a jump gives linear growth, a
/// log-Hölder modulus flattens out.
pub fn check_log_holder(p: &ExponentField, dom: &DomainSpec, samples: usize, seed: u64) -> LogHolderCertificate {
    let n = dom.dim();
    let x0 = dom.x0();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d0 = (0.25 * dom.ell()).min(0.5);
    let jump = |x: &Point, y: &Point| (p.eval(x) - p.eval(y)).abs();
    let mut carried: Vec<(Point, Point)> = Vec::new();
    let mut levels = Vec::with_capacity(LOG_HOLDER_SCALES + 1);
    let mut best = (0.0, x0, x0);
    let mut checked = 0;
    for j in 0..=LOG_HOLDER_SCALES {
        let d = d0 * 0.5f64.powi(j as i32);
        let mut pairs: Vec<(Point, Point)> = Vec::with_capacity(samples + 2 * carried.len());
        for (x, y) in &carried {
            let m = scale(&crate::geometry::add(x, y), 0.5);
            pairs.push((*x, m));
            pairs.push((m, *y));
        }
        let mut tries = 0;
        let mut fresh = 0;
        while fresh < samples.max(8) && tries < 100 * samples.max(8) {
            tries += 1;
            let x = match fresh % 4 {
                0 => x0,
                1 => sample_point(dom, &mut rng, true),
                _ => sample_point(dom, &mut rng, false),
            };
            let y = axpy(&x, d, &unit_vector(n, &mut rng));
            if dom.contains(&y) {
                pairs.push((x, y));
                fresh += 1;
            }
        }
        checked += pairs.len();
        let mut scored: Vec<(f64, usize)> = pairs.iter().enumerate().map(|(i, (x, y))| (jump(x, y), i)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let m = scored.first().map_or(0.0, |s| s.0);
        let score = m * (1.0 / d).ln();
        if score > best.0 {
            let (x, y) = pairs[scored[0].1];
            best = (score, x, y);
        }
        levels.push(score);
        carried = scored.iter().take(CARRIED).filter(|s| s.0 > 0.0).map(|s| pairs[s.1]).collect();
    }
    let half = LOG_HOLDER_SCALES / 2;
    let js: Vec<f64> = (half..=LOG_HOLDER_SCALES).map(|j| j as f64).collect();
    let slope = crate::trend::ols(&js, &levels[half..]).slope;
    let last = levels[LOG_HOLDER_SCALES];
    let log_holder = last <= 1e-12 || slope * LOG_HOLDER_SCALES as f64 / last < 0.5;
    LogHolderCertificate { constant: best.0, levels, pairs_checked: checked, worst_pair: (best.1, best.2), log_holder }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball() -> DomainSpec {
        DomainSpec::unit_ball(2)
    }

    #[test]
    fn bounds_of_radial_affine() {
        let p = ExponentField::lebesgue(ExponentExpr::RadialAffine { a: 2.0, b: 0.5 }, &ball()).unwrap();
        assert_eq!(p.minus(), 2.0);
        assert!((p.plus() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(ExponentField::lebesgue(ExponentExpr::RadialAffine { a: 1.0, b: 0.5 }, &ball()).is_err());
        assert!(ExponentField::constant(1.0, &ball()).is_ok());
        assert!(ExponentField::constant(0.9, &ball()).is_err());
        assert!(ExponentField::order(ExponentExpr::Constant(2.0), &ball()).is_err());
        let p = ExponentField::constant(1.0, &ball()).unwrap();
        assert!(p.conjugate(&ball()).is_err());
        let p = ExponentField::constant(2.0, &ball()).unwrap();
        let a = ExponentField::order(ExponentExpr::Constant(1.0), &ball()).unwrap();
        assert!(ExponentField::sobolev(&p, &a, &ball()).is_err());
    }

    #[test]
    fn sobolev_and_conjugate_values() {
        let dom = ball();
        let p = ExponentField::constant(2.0, &dom).unwrap();
        let a = ExponentField::order(ExponentExpr::Constant(0.5), &dom).unwrap();
        let q = ExponentField::sobolev(&p, &a, &dom).unwrap();
        assert!((q.at_x0() - 4.0).abs() < 1e-14);
        let p = ExponentField::constant(1.5, &dom).unwrap();
        let q = ExponentField::sobolev(&p, &a, &dom).unwrap();
        assert!((q.at_x0() - 2.4).abs() < 1e-14);
        let pc = p.conjugate(&dom).unwrap();
        assert!((pc.at_x0() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn log_holder_classification() {
        let dom = ball();
        let good = [
            ExponentExpr::Constant(2.0),
            ExponentExpr::RadialAffine { a: 2.0, b: 0.5 },
            ExponentExpr::RadialLog { a: 2.0, b: 1.0, c: std::f64::consts::E.powi(2) * 2.0 },
            ExponentExpr::RadialCos { a: 2.0, b: 0.3, c: 4.0 },
        ];
        for e in good {
            let p = ExponentField::lebesgue(e.clone(), &dom).unwrap();
            let c = check_log_holder(&p, &dom, 2000, 1);
            assert!(c.log_holder, "{e:?}: {:?}", c.levels);
        }
        let jump = ExponentField::lebesgue(ExponentExpr::HalfSpaceJump { base: 2.0, amp: 0.5, power: 0.0 }, &dom).unwrap();
        let c = check_log_holder(&jump, &dom, 2000, 1);
        assert!(!c.log_holder, "{:?}", c.levels);
    }
}
