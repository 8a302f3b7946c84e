//! Maximal, fractional maximal, Riesz potential and singular integral
//! operators evaluated pointwise by polar quadrature.
//!
//! Integrals near `x0` use rays from `x0`, so the singularity of the test
//! fields sits at the ray origins. Integrals near the evaluation point `z`
//! use rays from `z`. Balls and cones are intersected with rays analytically.

use crate::exec::Exec;
use crate::exponents::ExponentField;
use crate::field::{RadialView, ScalarField};
use crate::geometry::{
    axpy, ball_volume, dist, rays, scale, split_bands, sub, DirectionSet, DomainSpec, GridResolution, Point, QuadratureGrid,
    RadialLadder, Ray, Region,
};
use crate::quadrature::{improper, Rule, RuleKind, Tail};
use crate::Result;

/// Resolution of the operator quadratures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorSettings {
    /// Uniform directions from `x0`.
    pub angular: usize,
    /// Directions from the evaluation point.
    pub z_angular: usize,
    /// Gauss points per cone or cone complement panel.
    pub cone_res: usize,
    pub rule: RuleKind,
    /// Ball radii per octave for the maximal functions.
    pub radii_per_octave: usize,
    /// Dyadic bands inside `B(z, |z - x0|/2)`.
    pub inner_depth: usize,
    /// Number of truncation levels for singular integrals.
    pub eps_levels: usize,
}

impl OperatorSettings {
    pub fn default_for(dim: usize) -> OperatorSettings {
        let (angular, cone_res) = match dim {
            1 => (2, 1),
            2 => (32, 12),
            _ => (12, 6),
        };
        OperatorSettings {
            angular,
            z_angular: angular,
            cone_res,
            rule: RuleKind::Kronrod15,
            radii_per_octave: 2,
            inner_depth: 12,
            eps_levels: 10,
        }
    }

    /// Higher resolution used for pointwise reference values.
    pub fn reference(dim: usize) -> OperatorSettings {
        let base = OperatorSettings::default_for(dim);
        OperatorSettings {
            angular: base.angular * 4,
            z_angular: base.z_angular * 4,
            cone_res: base.cone_res * 3,
            radii_per_octave: 16,
            inner_depth: 20,
            eps_levels: 14,
            ..base
        }
    }
}

/// Odd kernels of Calderón–Zygmund type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    /// `(z - y)_j / |z - y|^{n+1}`
    RieszTransform { component: usize },
    /// `θ_j^k / |z - y|^n` with `θ = (z - y)/|z - y|` and odd `k`.
    OddPower { component: usize, power: i32 },
}

impl Kernel {
    pub fn eval(&self, z: &Point, y: &Point, n: usize) -> f64 {
        let d = sub(z, y);
        let len = crate::geometry::norm(&d);
        match *self {
            Kernel::RieszTransform { component } => d[component] / len.powi(n as i32 + 1),
            Kernel::OddPower { component, power } => (d[component] / len).powi(power) / len.powi(n as i32),
        }
    }

    pub fn is_odd(&self) -> bool {
        match *self {
            Kernel::RieszTransform { .. } => true,
            Kernel::OddPower { power, .. } => power % 2 != 0,
        }
    }
}

/// A pointwise operator value with its quadrature error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorValue {
    pub value: f64,
    pub error: f64,
}

/// Truncated singular integrals and their limit.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularValue {
    pub epsilons: Vec<f64>,
    pub truncated: Vec<f64>,
    /// Richardson extrapolation of the last two levels; `None` when the
    /// increments do not decrease.
    pub value: Option<f64>,
    pub error: f64,
    pub converged: bool,
}

/// A field prepared for repeated operator evaluation.
#[derive(Clone, Debug)]
pub struct PreparedField {
    field: ScalarField,
    view: Option<RadialView>,
    /// `∫_{B(x0, r_k) ∩ Ω} |f|` for every ladder radius, high and low rule.
    inner_abs: Vec<[f64; 2]>,
}

/// Shared state for operator evaluation on one domain.
#[derive(Clone, Debug)]
pub struct OperatorContext {
    dom: DomainSpec,
    ladder: RadialLadder,
    settings: OperatorSettings,
    exec: Exec,
    rule: Rule,
    x0_rays: Vec<Ray>,
    z_dirs: DirectionSet,
    source_grid: QuadratureGrid,
}

type Pair = [f64; 2];

fn add2(a: &mut Pair, b: Pair) {
    a[0] += b[0];
    a[1] += b[1];
}

impl OperatorContext {
    pub fn new(dom: &DomainSpec, ladder: &RadialLadder, settings: OperatorSettings, exec: Exec) -> Result<OperatorContext> {
        let x0 = dom.x0();
        let x0_rays = rays(dom, &x0, &DirectionSet::uniform(dom.dim(), settings.angular));
        let res = GridResolution { angular: settings.angular.max(GridResolution::fine(dom.dim()).angular), rule: settings.rule };
        let source_grid = QuadratureGrid::build(dom, ladder, res, Region::Domain, exec)?;
        Ok(OperatorContext {
            dom: dom.clone(),
            ladder: ladder.clone(),
            settings,
            exec,
            rule: Rule::new(settings.rule),
            x0_rays,
            z_dirs: DirectionSet::uniform(dom.dim(), settings.z_angular),
            source_grid,
        })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.dom
    }

    pub fn ladder(&self) -> &RadialLadder {
        &self.ladder
    }

    pub fn settings(&self) -> &OperatorSettings {
        &self.settings
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    /// Precomputes the `|f|` integrals over the ladder balls about `x0`.
    pub fn prepare(&self, f: &ScalarField) -> PreparedField {
        let x0 = self.dom.x0();
        let grid = &self.source_grid;
        let view = f.core_view(&x0, self.ladder.r_min());
        let k_max = self.ladder.depth();
        let nodes = grid.nodes();
        let band_sums: Vec<Pair> = (0..=k_max)
            .map(|j| {
                let (a, b) = (grid.band_offset(j), grid.band_offset(j + 1));
                let hi = self.exec.sum(a..b, |i| nodes[i].w * f.value(&nodes[i].x).abs());
                let lo = self.exec.sum(a..b, |i| nodes[i].w_lo * f.value(&nodes[i].x).abs());
                [hi, lo]
            })
            .collect();
        let mut pf = PreparedField { field: f.clone(), view, inner_abs: vec![[0.0; 2]; k_max + 1] };
        let core = self.core_abs(&pf, self.ladder.r_min()) * crate::geometry::sphere_surface_measure(self.dom.dim());
        let mut acc = [core, core];
        for k in (0..=k_max).rev() {
            add2(&mut acc, band_sums[k]);
            pf.inner_abs[k] = acc;
        }
        pf
    }

    /// `∫_0^ρ |f|(s)·s^{n-1} ds` per unit solid angle, zero without a radial core.
    fn core_abs(&self, pf: &PreparedField, rho: f64) -> f64 {
        self.core_moment(pf, rho, self.dom.dim() as f64 - 1.0, true)
    }

    /// `∫_0^ρ f(s)·s^{e} ds` (or `|f|`) for a field radial near `x0`.
    fn core_moment(&self, pf: &PreparedField, rho: f64, e: f64, abs: bool) -> f64 {
        let Some(view) = pf.view else {
            return 0.0;
        };
        if rho <= 0.0 {
            return 0.0;
        }
        let g = |u: f64| {
            let lf = view.ln_abs_u(u);
            if lf == f64::NEG_INFINITY {
                0.0
            } else {
                (lf - (e + 1.0) * u).exp()
            }
        };
        let v = match improper(&g, -rho.ln()) {
            Tail::Converged { value, .. } => value,
            Tail::Divergent { .. } => f64::INFINITY,
        };
        if abs {
            v
        } else {
            v * view.profile.coef.signum()
        }
    }

    /// Integrates `g(s, y)` along a ray from `origin` over `[a, b]`, banded at `top·2^{-k}`.
    fn ray_integral<G: Fn(f64, &Point) -> f64>(&self, origin: &Point, dir: &Point, a: f64, b: f64, top: f64, depth: usize, g: &G) -> Pair {
        let mut out = [0.0; 2];
        let n1 = self.dom.dim() as i32 - 1;
        split_bands(a, b, top, depth, |s0, s1, _| {
            for q in 0..self.rule.len() {
                let s = s0 + (s1 - s0) * self.rule.nodes[q];
                let y = axpy(origin, s, dir);
                let v = g(s, &y) * s.powi(n1) * (s1 - s0);
                out[0] += self.rule.weights[q] * v;
                out[1] += self.rule.weights_lo[q] * v;
            }
        });
        out
    }

    fn deep_depth(&self, rho: f64) -> usize {
        let need = (self.ladder.scale() / rho).log2().ceil().max(0.0) as usize;
        self.ladder.depth().max(need) + 1
    }

    /// `∫_{B(z, r) ∩ Ω} |f|`, high and low rule.
    pub fn ball_integral(&self, pf: &PreparedField, z: &Point, r: f64) -> Pair {
        let x0 = self.dom.x0();
        let d = dist(z, &x0);
        let n = self.dom.dim();
        let absf = |_s: f64, y: &Point| pf.field.value(y).abs();
        let top = self.ladder.scale();
        if r > d {
            let gap = r - d;
            let (rho, mut acc) = match self.ladder.index_at_or_below(gap) {
                Some(k) => (self.ladder.radius(k), pf.inner_abs[k]),
                None => {
                    let c = self.core_abs(pf, gap) * crate::geometry::sphere_surface_measure(n);
                    (gap, [c, c])
                }
            };
            let depth = self.deep_depth(rho);
            let w = sub(z, &x0);
            for ray in &self.x0_rays {
                let b = crate::geometry::dot(&ray.dir, &w);
                let s2 = b + (b * b - d * d + r * r).max(0.0).sqrt();
                let hi = s2.min(ray.exit);
                if hi > rho {
                    let v = self.ray_integral(&x0, &ray.dir, rho, hi, top, depth, &absf);
                    acc[0] += ray.w * v[0];
                    acc[1] += ray.w * v[1];
                }
            }
            acc
        } else {
            let axis = scale(&sub(z, &x0), 1.0 / d);
            let beta = (r / d).min(1.0).asin();
            let set = DirectionSet::cone(n, &axis, beta, self.settings.cone_res);
            let rho = self.ladder.r_min().min(0.25 * d);
            let depth = self.deep_depth(rho);
            let mut acc = [0.0; 2];
            for dir in &set.dirs {
                let b = d * crate::geometry::dot(&dir.v, &axis);
                let disc = (b * b - d * d + r * r).max(0.0).sqrt();
                let s1 = (b - disc).max(rho);
                let s2 = (b + disc).min(self.dom.exit_distance(&x0, &dir.v));
                if s2 > s1 {
                    let v = self.ray_integral(&x0, &dir.v, s1, s2, top, depth, &absf);
                    acc[0] += dir.w * v[0];
                    acc[1] += dir.w * v[1];
                }
            }
            acc
        }
    }

    /// Ball radii examined by the maximal functions at distance `d` from `x0`.
    pub fn maximal_radii(&self, z: &Point) -> Vec<f64> {
        let d = dist(z, &self.dom.x0());
        let m = self.settings.radii_per_octave.max(1) as f64;
        let ell = self.ladder.scale();
        let far = self.dom.max_distance_from(z);
        let mut out = Vec::new();
        if d > 0.0 {
            for j in 0..=(3 * m as usize) {
                out.push(d * 2f64.powf(-(j as f64) / m));
            }
        }
        let floor = if d > 0.0 { d / 8.0 } else { self.ladder.r_min() };
        let mut i = 0usize;
        loop {
            let gap = ell * 2f64.powf(-(i as f64) / m);
            if gap < floor * (1.0 - 1e-12) {
                break;
            }
            if d + gap <= far * 2.0 {
                out.push(d + gap);
            }
            i += 1;
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn maximal_generic(&self, pf: &PreparedField, z: &Point, alpha: Option<f64>) -> OperatorValue {
        let n = self.dom.dim();
        let mut best = match alpha {
            None => pf.field.value(z).abs(),
            Some(_) => 0.0,
        };
        let mut err = 0.0;
        if !best.is_finite() {
            best = 0.0;
        }
        for r in self.maximal_radii(z) {
            let v = self.ball_integral(pf, z, r);
            let vol = ball_volume(n, r);
            let factor = match alpha {
                None => 1.0 / vol,
                Some(a) => vol.powf(a / n as f64 - 1.0),
            };
            let avg = factor * v[0];
            if avg > best {
                best = avg;
                err = factor * (v[0] - v[1]).abs();
            }
        }
        OperatorValue { value: best, error: err }
    }

    /// Hardy–Littlewood maximal function `sup_r |B(z,r)|^{-1} ∫_{B(z,r)∩Ω} |f|`.
    pub fn maximal(&self, pf: &PreparedField, z: &Point) -> OperatorValue {
        self.maximal_generic(pf, z, None)
    }

    /// `sup_r |B(z,r)|^{α(z)/n - 1} ∫_{B(z,r)∩Ω} |f|`.
    pub fn fractional_maximal(&self, pf: &PreparedField, alpha: &ExponentField, z: &Point) -> OperatorValue {
        self.maximal_generic(pf, z, Some(alpha.eval(z)))
    }

    /// `∫_{Ω \ B(z, d/2)} f(y)·k(y) dy` on rays from `x0`, with the core folded in via `k(x0)`.
    fn outer_integral<K: Fn(&Point) -> f64>(&self, pf: &PreparedField, z: &Point, d: f64, k: &K) -> Pair {
        let x0 = self.dom.x0();
        let n = self.dom.dim();
        let h = 0.5 * d;
        let axis = scale(&sub(z, &x0), 1.0 / d);
        let beta = (h / d).asin();
        let rho = self.ladder.r_min().min(0.25 * d);
        let depth = self.deep_depth(rho);
        let top = self.ladder.scale();
        let g = |_s: f64, y: &Point| pf.field.value(y) * k(y);
        let mut acc = [0.0; 2];
        let cone = DirectionSet::cone(n, &axis, beta, self.settings.cone_res);
        let rest = DirectionSet::cone_complement(n, &axis, beta, self.settings.cone_res);
        for (set, in_cone) in [(&cone, true), (&rest, false)] {
            for dir in &set.dirs {
                let exit = self.dom.exit_distance(&x0, &dir.v);
                let mut pieces = Vec::with_capacity(2);
                if in_cone {
                    let b = d * crate::geometry::dot(&dir.v, &axis);
                    let disc = (b * b - d * d + h * h).max(0.0).sqrt();
                    pieces.push((rho, (b - disc).min(exit)));
                    pieces.push(((b + disc).max(rho), exit));
                } else {
                    pieces.push((rho, exit));
                }
                for (a, b) in pieces {
                    if b > a {
                        let v = self.ray_integral(&x0, &dir.v, a, b, top, depth, &g);
                        acc[0] += dir.w * v[0];
                        acc[1] += dir.w * v[1];
                    }
                }
            }
        }
        let core = self.core_moment(pf, rho, n as f64 - 1.0, false) * crate::geometry::sphere_surface_measure(n) * k(&x0);
        acc[0] += core;
        acc[1] += core;
        acc
    }

    /// Riesz potential `∫_Ω f(y)·|z - y|^{α(z) - n} dy`.
    pub fn riesz_potential(&self, pf: &PreparedField, alpha: &ExponentField, z: &Point) -> OperatorValue {
        let x0 = self.dom.x0();
        let n = self.dom.dim();
        let a = alpha.eval(z);
        let d = dist(z, &x0);
        let kern = |y: &Point| dist(z, y).powf(a - n as f64);
        if d == 0.0 {
            let rho = self.ladder.r_min();
            let depth = self.ladder.depth();
            let mut acc = [0.0; 2];
            for ray in &self.x0_rays {
                let v = self.ray_integral(&x0, &ray.dir, rho, ray.exit, self.ladder.scale(), depth, &|s, y| pf.field.value(y) * s.powf(a - n as f64));
                acc[0] += ray.w * v[0];
                acc[1] += ray.w * v[1];
            }
            let core = self.core_moment(pf, rho, a - 1.0, false) * crate::geometry::sphere_surface_measure(n);
            return OperatorValue { value: acc[0] + core, error: (acc[0] - acc[1]).abs() };
        }
        let mut acc = self.outer_integral(pf, z, d, &kern);
        let h = 0.5 * d;
        let depth = self.settings.inner_depth;
        let eps = h * 0.5f64.powi(depth as i32);
        let fz = pf.field.value(z);
        for dir in &self.z_dirs.dirs {
            let exit = self.dom.exit_distance(z, &dir.v);
            let top = h.min(exit);
            let v = self.ray_integral(z, &dir.v, eps.min(top), top, h, depth, &|s, y| pf.field.value(y) * s.powf(a - n as f64));
            acc[0] += dir.w * v[0];
            acc[1] += dir.w * v[1];
            let c = fz * eps.min(top).powf(a) / a;
            acc[0] += dir.w * c;
            acc[1] += dir.w * c;
        }
        OperatorValue { value: acc[0], error: (acc[0] - acc[1]).abs() }
    }

    /// Default truncation radii for the singular integral at `z`.
    pub fn default_epsilons(&self, z: &Point) -> Vec<f64> {
        let d = dist(z, &self.dom.x0());
        let top = if d > 0.0 { 0.5 * d } else { 0.5 * self.ladder.scale() };
        (1..=self.settings.eps_levels).map(|k| top * 0.5f64.powi(k as i32)).collect()
    }

    /// Principal value `lim_{ε→0} ∫_{Ω \ B(z, ε)} K(z, y) f(y) dy`.
    ///
    /// `epsilons` must be decreasing and below `|z - x0|/2` (or below `ℓ/2`
    /// when `z = x0`).
    pub fn singular(&self, pf: &PreparedField, kernel: &Kernel, z: &Point, epsilons: &[f64]) -> SingularValue {
        let x0 = self.dom.x0();
        let n = self.dom.dim();
        let d = dist(z, &x0);
        let kv = |y: &Point| kernel.eval(z, y, n);
        let g = |_s: f64, y: &Point| pf.field.value(y) * kv(y);
        let (origin, base, top, dirs): (Point, Pair, f64, &DirectionSet) = if d == 0.0 {
            (x0, [0.0; 2], 0.5 * self.ladder.scale(), &self.z_dirs)
        } else {
            (*z, self.outer_integral(pf, z, d, &kv), 0.5 * d, &self.z_dirs)
        };
        let ray_list = rays(&self.dom, &origin, dirs);
        let mut truncated = Vec::with_capacity(epsilons.len());
        let mut acc = base;
        let mut upper = if d == 0.0 { f64::INFINITY } else { top };
        let mut err_lo = 0.0;
        for &eps in epsilons {
            for ray in &ray_list {
                let hi = upper.min(ray.exit);
                if hi > eps {
                    let v = self.ray_integral(&origin, &ray.dir, eps, hi, top, 60, &g);
                    acc[0] += ray.w * v[0];
                    acc[1] += ray.w * v[1];
                }
            }
            upper = eps;
            truncated.push(acc[0]);
            err_lo = (acc[0] - acc[1]).abs();
        }
        let m = truncated.len();
        let incs: Vec<f64> = truncated.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let scale_ref = truncated.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
        let converged = incs.len() >= 3 && {
            let k = incs.len();
            (k - 3..k - 1).all(|i| incs[i + 1] <= incs[i] * 1.05 + 1e-12 * scale_ref)
        };
        let (value, error) = if m >= 2 && converged {
            let q = epsilons[m - 2] / epsilons[m - 1];
            let rich = (q * truncated[m - 1] - truncated[m - 2]) / (q - 1.0);
            (Some(rich), (rich - truncated[m - 1]).abs() + err_lo)
        } else {
            (None, incs.last().copied().unwrap_or(f64::INFINITY))
        };
        SingularValue { epsilons: epsilons.to_vec(), truncated, value, error, converged }
    }
}

/// `|z - y| >= |y - x0|/2` whenever `|z - x0| <= |y - x0|/2`.
pub fn kernel_separation_holds(z: &Point, y: &Point, x0: &Point) -> bool {
    let ry = dist(y, x0);
    if dist(z, x0) > 0.5 * ry {
        return true;
    }
    dist(z, y) >= 0.5 * ry * (1.0 - 1e-12)
}

/// `|B(z, r)|` for reporting maximal averages.
pub fn ball_measure(n: usize, r: f64) -> f64 {
    ball_volume(n, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ctx(dom: &DomainSpec, depth: usize, reference: bool) -> OperatorContext {
        let ladder = RadialLadder::for_domain(dom, depth).unwrap();
        let s = if reference { OperatorSettings::reference(dom.dim()) } else { OperatorSettings::default_for(dom.dim()) };
        OperatorContext::new(dom, &ladder, s, Exec::default()).unwrap()
    }

    #[test]
    fn maximal_of_constant_is_one_inside() {
        let dom = DomainSpec::unit_ball(2);
        let c = ctx(&dom, 12, false);
        let pf = c.prepare(&ScalarField::Constant(1.0));
        for z in [[0.3, 0.1, 0.0], [0.0, 0.7, 0.0], [0.01, 0.0, 0.0]] {
            let v = c.maximal(&pf, &z);
            assert!((v.value - 1.0).abs() < 1e-9, "{z:?}: {v:?}");
        }
    }

    #[test]
    fn ball_integral_of_constant_matches_lens_area() {
        let dom = DomainSpec::unit_ball(2);
        let c = ctx(&dom, 14, false);
        let pf = c.prepare(&ScalarField::Constant(1.0));
        for (z, r) in [([0.3, 0.0, 0.0], 0.2), ([0.3, 0.0, 0.0], 0.5), ([0.5, 0.2, 0.0], 0.8), ([0.6, 0.0, 0.0], 0.6)] {
            let v = c.ball_integral(&pf, &z, r)[0];
            let exact = crate::geometry::truncated_ball_measure(&dom, &z, r);
            assert!((v - exact).abs() < 2e-3 * exact, "z={z:?} r={r}: {v} vs {exact}");
        }
    }

    #[test]
    fn potential_at_center_of_constant() {
        let dom = DomainSpec::unit_ball(2);
        let c = ctx(&dom, 16, false);
        let a = ExponentField::order(crate::exponents::ExponentExpr::Constant(0.5), &dom).unwrap();
        let pf = c.prepare(&ScalarField::Constant(1.0));
        let v = c.riesz_potential(&pf, &a, &[0.0; 3]);
        assert!((v.value - 4.0 * PI).abs() < 1e-7, "{v:?}");
    }

    #[test]
    fn riesz_transform_of_coordinate_at_center() {
        let dom = DomainSpec::unit_ball(2);
        let c = ctx(&dom, 12, false);
        let pf = c.prepare(&ScalarField::Coordinate { axis: 0, origin: [0.0; 3] });
        let k = Kernel::RieszTransform { component: 0 };
        let eps = c.default_epsilons(&[0.0; 3]);
        let v = c.singular(&pf, &k, &[0.0; 3], &eps);
        assert!(v.converged);
        assert!((v.value.unwrap() + PI).abs() < 1e-8, "{v:?}");
    }

    #[test]
    fn separation_on_samples() {
        let x0 = [0.0; 3];
        for i in 0..200 {
            let t = i as f64 * 0.1;
            let y = [t.cos(), t.sin() * 0.7, 0.0];
            let z = [0.4 * (1.3 * t).cos(), 0.2 * (0.7 * t).sin(), 0.0];
            assert!(kernel_separation_holds(&z, &y, &x0));
        }
    }
}
