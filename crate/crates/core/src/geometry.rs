//! Domains, dyadic ladders, direction sets and polar quadrature grids.
//!
//! Every grid is polar about a centre point: a set of weighted directions,
//! each carrying its exit distance from the domain, and a radial rule applied
//! band by band between consecutive ladder radii.

use crate::exec::Exec;
use crate::quadrature::{gauss_legendre, Rule, RuleKind};
use crate::{Error, Result};
use std::f64::consts::PI;

/// A point of `R^n`, `n <= 3`; unused coordinates are zero.
pub type Point = [f64; 3];

pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `a + s·v`
pub fn axpy(a: &Point, s: f64, v: &Point) -> Point {
    [a[0] + s * v[0], a[1] + s * v[1], a[2] + s * v[2]]
}

pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Point) -> f64 {
    let s = dot(a, a);
    if s > 1e-280 || s == 0.0 && a.iter().all(|c| *c == 0.0) {
        return s.sqrt();
    }
    let m = a.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let b = scale(a, 1.0 / m);
    m * dot(&b, &b).sqrt()
}

pub fn dist(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

/// Builds a point from up to three coordinates.
pub fn point(coords: &[f64]) -> Point {
    let mut p = [0.0; 3];
    for (i, c) in coords.iter().take(3).enumerate() {
        p[i] = *c;
    }
    p
}

/// Surface measure of the unit sphere `S^{n-1}`.
pub fn sphere_surface_measure(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / statrs::function::gamma::gamma(h)
}

/// Volume of the ball of radius `r` in `R^n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    sphere_surface_measure(n) / n as f64 * r.powi(n as i32)
}

/// Shape of a bounded domain.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Ball { center: Point, radius: f64 },
    Box { lo: Point, hi: Point },
}

/// A bounded domain with a distinguished interior point `x0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    shape: Shape,
    dim: usize,
    x0: Point,
    ell: f64,
}

impl DomainSpec {
    pub fn ball(dim: usize, center: &[f64], radius: f64, x0: &[f64]) -> Result<DomainSpec> {
        check_dim(dim)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidDomain(format!("radius must be positive, got {radius}")));
        }
        Self::finish(Shape::Ball { center: point(center), radius }, dim, point(x0))
    }

    pub fn boxed(dim: usize, lo: &[f64], hi: &[f64], x0: &[f64]) -> Result<DomainSpec> {
        check_dim(dim)?;
        let (lo, hi) = (point(lo), point(hi));
        for a in 0..dim {
            if !(hi[a] > lo[a]) {
                return Err(Error::InvalidDomain(format!("empty box along axis {a}")));
            }
        }
        Self::finish(Shape::Box { lo, hi }, dim, point(x0))
    }

    /// The unit ball centred at the origin with `x0` at the origin.
    pub fn unit_ball(dim: usize) -> DomainSpec {
        DomainSpec::ball(dim, &[0.0; 3], 1.0, &[0.0; 3]).expect("valid unit ball")
    }

    fn finish(shape: Shape, dim: usize, x0: Point) -> Result<DomainSpec> {
        let mut d = DomainSpec { shape, dim, x0, ell: 0.0 };
        for c in d.x0.iter().skip(dim) {
            if *c != 0.0 {
                return Err(Error::InvalidDomain("x0 has coordinates beyond the dimension".into()));
            }
        }
        if d.boundary_distance(&x0) <= 0.0 {
            return Err(Error::InvalidDomain("x0 must be an interior point".into()));
        }
        d.ell = d.diameter();
        Ok(d)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x0(&self) -> Point {
        self.x0
    }

    /// Ladder scale, the diameter of the domain.
    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Same domain with a different distinguished point.
    pub fn with_x0(&self, x0: &[f64]) -> Result<DomainSpec> {
        Self::finish(self.shape.clone(), self.dim, point(x0))
    }

    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius, .. } => 2.0 * radius,
            Shape::Box { lo, hi } => (0..self.dim).map(|a| (hi[a] - lo[a]).powi(2)).sum::<f64>().sqrt(),
        }
    }

    pub fn volume(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius, .. } => ball_volume(self.dim, *radius),
            Shape::Box { lo, hi } => (0..self.dim).map(|a| hi[a] - lo[a]).product(),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.boundary_distance(p) > 0.0
    }

    /// Signed distance to the boundary, positive inside.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        match &self.shape {
            Shape::Ball { center, radius } => radius - dist(p, center),
            Shape::Box { lo, hi } => (0..self.dim)
                .map(|a| (p[a] - lo[a]).min(hi[a] - p[a]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Distance from interior point `c` to the boundary along unit direction `v`.
    pub fn exit_distance(&self, c: &Point, v: &Point) -> f64 {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let w = sub(c, center);
                let b = dot(v, &w);
                let q = dot(&w, &w) - radius * radius;
                -b + (b * b - q).max(0.0).sqrt()
            }
            Shape::Box { lo, hi } => {
                let mut s = f64::INFINITY;
                for a in 0..self.dim {
                    if v[a] > 0.0 {
                        s = s.min((hi[a] - c[a]) / v[a]);
                    } else if v[a] < 0.0 {
                        s = s.min((lo[a] - c[a]) / v[a]);
                    }
                }
                s
            }
        }
    }

    /// Largest distance from `p` to a point of the closed domain.
    pub fn max_distance_from(&self, p: &Point) -> f64 {
        match &self.shape {
            Shape::Ball { center, radius } => dist(p, center) + radius,
            Shape::Box { lo, hi } => (0..self.dim)
                .map(|a| (p[a] - lo[a]).abs().max((hi[a] - p[a]).abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let mut lo = *center;
                let mut hi = *center;
                for a in 0..self.dim {
                    lo[a] -= radius;
                    hi[a] += radius;
                }
                (lo, hi)
            }
            Shape::Box { lo, hi } => (*lo, *hi),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidDomain(format!("dimension must be 1, 2 or 3, got {dim}")))
    }
}

/// Dyadic radii `r_k = scale·2^{-k}`, `k = 0..=depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialLadder {
    scale: f64,
    depth: usize,
}

impl RadialLadder {
    pub fn new(scale: f64, depth: usize) -> Result<RadialLadder> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument("ladder scale must be positive".into()));
        }
        if depth == 0 || depth > 60 {
            return Err(Error::InvalidArgument(format!("ladder depth must be in 1..=60, got {depth}")));
        }
        Ok(RadialLadder { scale, depth })
    }

    /// Ladder with scale equal to the domain diameter.
    pub fn for_domain(dom: &DomainSpec, depth: usize) -> Result<RadialLadder> {
        RadialLadder::new(dom.ell(), depth)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn radius(&self, k: usize) -> f64 {
        self.scale * 0.5f64.powi(k as i32)
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..=self.depth).map(|k| self.radius(k)).collect()
    }

    /// Innermost ladder radius.
    pub fn r_min(&self) -> f64 {
        self.radius(self.depth)
    }

    /// Largest `k` with `r_k <= r`, or `None` if `r < r_min`.
    pub fn index_at_or_below(&self, r: f64) -> Option<usize> {
        (0..=self.depth).find(|&k| self.radius(k) <= r * (1.0 + 1e-12))
    }
}

/// A weighted unit direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    pub v: Point,
    pub w: f64,
}

/// A quadrature rule on the unit sphere, possibly tailored to a domain.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    pub dirs: Vec<Direction>,
}

impl DirectionSet {
    /// Rotation-invariant rule; antipodally symmetric.
    ///
    /// `n = 1`: `±e1`. `n = 2`: `res` (rounded up to even) equispaced angles.
    /// `n = 3`: Gauss–Legendre in `cos θ` times `res` equispaced azimuths.
    pub fn uniform(dim: usize, res: usize) -> DirectionSet {
        let mut dirs = Vec::new();
        match dim {
            1 => {
                dirs.push(Direction { v: [1.0, 0.0, 0.0], w: 1.0 });
                dirs.push(Direction { v: [-1.0, 0.0, 0.0], w: 1.0 });
            }
            2 => {
                let m = res.max(2).div_ceil(2) * 2;
                for j in 0..m {
                    let t = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                    dirs.push(Direction { v: [t.cos(), t.sin(), 0.0], w: 2.0 * PI / m as f64 });
                }
            }
            _ => {
                let mphi = res.max(4).div_ceil(2) * 2;
                let (ct, wt) = gauss_legendre((mphi / 2).max(2));
                for (c, w) in ct.iter().zip(&wt) {
                    let s = (1.0 - c * c).sqrt();
                    for j in 0..mphi {
                        let phi = 2.0 * PI * (j as f64 + 0.5) / mphi as f64;
                        dirs.push(Direction {
                            v: [s * phi.cos(), s * phi.sin(), *c],
                            w: w * 2.0 * PI / mphi as f64,
                        });
                    }
                }
            }
        }
        DirectionSet { dirs }
    }

    /// Face-pyramid rule for a box seen from interior point `c`.
    ///
    /// Each face is split at the foot of the perpendicular from `c` and graded
    /// geometrically towards it; `split_radius` adds breakpoints where the
    /// sphere of that radius meets the face.
    pub fn box_faces(c: &Point, lo: &Point, hi: &Point, dim: usize, per_panel: usize, split_radius: Option<f64>) -> DirectionSet {
        let mut dirs = Vec::new();
        if dim == 1 {
            dirs.push(Direction { v: [1.0, 0.0, 0.0], w: 1.0 });
            dirs.push(Direction { v: [-1.0, 0.0, 0.0], w: 1.0 });
            return DirectionSet { dirs };
        }
        let (gx, gw) = gauss_legendre(per_panel.max(2));
        for axis in 0..dim {
            for (plane, sign) in [(hi[axis], 1.0), (lo[axis], -1.0)] {
                let h = (plane - c[axis]).abs();
                let others: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
                let panels: Vec<Vec<(f64, f64)>> = others
                    .iter()
                    .map(|&b| face_panels(lo[b], hi[b], c[b], h, split_radius))
                    .collect();
                let mut emit = |coords: &[(f64, f64)]| {
                    let mut y = *c;
                    y[axis] = c[axis] + sign * h;
                    let mut jac = 1.0;
                    for (k, &b) in others.iter().enumerate() {
                        y[b] = coords[k].0;
                        jac *= coords[k].1;
                    }
                    let d = sub(&y, c);
                    let len = norm(&d);
                    dirs.push(Direction { v: scale(&d, 1.0 / len), w: jac * h / len.powi(dim as i32) });
                };
                let nodes_1d: Vec<Vec<(f64, f64)>> = panels
                    .iter()
                    .map(|ps| {
                        let mut out = Vec::new();
                        for &(a, b) in ps {
                            for (x, w) in gx.iter().zip(&gw) {
                                out.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w));
                            }
                        }
                        out
                    })
                    .collect();
                if dim == 2 {
                    for &p in &nodes_1d[0] {
                        emit(&[p]);
                    }
                } else {
                    for &p in &nodes_1d[0] {
                        for &q in &nodes_1d[1] {
                            emit(&[p, q]);
                        }
                    }
                }
            }
        }
        DirectionSet { dirs }
    }

    /// Default rule seen from `c` inside `dom`.
    pub fn for_domain(dom: &DomainSpec, c: &Point, res: usize, split_radius: Option<f64>) -> DirectionSet {
        match dom.shape() {
            Shape::Ball { .. } => DirectionSet::uniform(dom.dim(), res),
            Shape::Box { lo, hi } => {
                let per_panel = match dom.dim() {
                    1 => 1,
                    2 => (res / 8).max(3),
                    _ => (res / 6).max(3),
                };
                DirectionSet::box_faces(c, lo, hi, dom.dim(), per_panel, split_radius)
            }
        }
    }

    /// Directions within angle `beta` of unit vector `axis`.
    ///
    /// Uses the substitution `ψ = β·sin(πt/2)`, which removes square-root
    /// behaviour at the rim of the cone.
    pub fn cone(dim: usize, axis: &Point, beta: f64, res: usize) -> DirectionSet {
        let mut dirs = Vec::new();
        match dim {
            1 => dirs.push(Direction { v: *axis, w: 1.0 }),
            2 => {
                let phi = axis[1].atan2(axis[0]);
                for (t, wt) in panel_rule(-1.0, 1.0, res) {
                    let s = (0.5 * PI * t).sin();
                    let th = phi + beta * s;
                    let jac = beta * 0.5 * PI * (0.5 * PI * t).cos();
                    dirs.push(Direction { v: [th.cos(), th.sin(), 0.0], w: wt * jac });
                }
            }
            _ => {
                let (e1, e2) = orthonormal_complement(axis);
                let mphi = (2 * res).max(4);
                for (tt, wt) in panel_rule(0.0, 1.0, res) {
                    let psi = beta * (0.5 * PI * tt).sin();
                    let jac = wt * beta * 0.5 * PI * (0.5 * PI * tt).cos() * psi.sin();
                    push_ring(&mut dirs, axis, &e1, &e2, psi, jac, mphi);
                }
            }
        }
        DirectionSet { dirs }
    }

    /// Directions at angle more than `beta` from `axis`.
    pub fn cone_complement(dim: usize, axis: &Point, beta: f64, res: usize) -> DirectionSet {
        let mut dirs = Vec::new();
        match dim {
            1 => dirs.push(Direction { v: scale(axis, -1.0), w: 1.0 }),
            2 => {
                let phi = axis[1].atan2(axis[0]);
                let (x, w) = gauss_legendre(res.max(2));
                let (a, b) = (phi + beta, phi + 2.0 * PI - beta);
                let mid = 0.5 * (a + b);
                for (lo, hi) in [(a, mid), (mid, b)] {
                    for (t, wt) in x.iter().zip(&w) {
                        let th = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
                        dirs.push(Direction { v: [th.cos(), th.sin(), 0.0], w: 0.5 * (hi - lo) * wt });
                    }
                }
            }
            _ => {
                let (e1, e2) = orthonormal_complement(axis);
                let (x, w) = gauss_legendre(res.max(2));
                let mphi = (2 * res).max(4);
                let mid = 0.5 * (beta + PI);
                for (lo, hi) in [(beta, mid), (mid, PI)] {
                    for (t, wt) in x.iter().zip(&w) {
                        let psi = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
                        let jac = 0.5 * (hi - lo) * wt * psi.sin();
                        push_ring(&mut dirs, axis, &e1, &e2, psi, jac, mphi);
                    }
                }
            }
        }
        DirectionSet { dirs }
    }

    pub fn total_weight(&self) -> f64 {
        self.dirs.iter().map(|d| d.w).sum()
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }
}

/// Composite Gauss rule on `[a, b]`: four equal panels of `res` points.
fn panel_rule(a: f64, b: f64, res: usize) -> Vec<(f64, f64)> {
    const PANELS: usize = 4;
    let (x, w) = gauss_legendre(res.max(2));
    let h = (b - a) / PANELS as f64;
    let mut out = Vec::with_capacity(PANELS * x.len());
    for p in 0..PANELS {
        let lo = a + p as f64 * h;
        for (t, wt) in x.iter().zip(&w) {
            out.push((lo + 0.5 * h * (1.0 + t), 0.5 * h * wt));
        }
    }
    out
}

fn push_ring(dirs: &mut Vec<Direction>, axis: &Point, e1: &Point, e2: &Point, psi: f64, jac: f64, mphi: usize) {
    let (sp, cp) = psi.sin_cos();
    for j in 0..mphi {
        let phi = 2.0 * PI * (j as f64 + 0.5) / mphi as f64;
        let v = add(&add(&scale(axis, cp), &scale(e1, sp * phi.cos())), &scale(e2, sp * phi.sin()));
        dirs.push(Direction { v, w: jac * 2.0 * PI / mphi as f64 });
    }
}

fn orthonormal_complement(a: &Point) -> (Point, Point) {
    let t = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = sub(&t, &scale(a, dot(&t, a)));
    let e1 = scale(&e1, 1.0 / norm(&e1));
    let e2 = [a[1] * e1[2] - a[2] * e1[1], a[2] * e1[0] - a[0] * e1[2], a[0] * e1[1] - a[1] * e1[0]];
    (e1, e2)
}

fn face_panels(lo: f64, hi: f64, foot: f64, h: f64, split_radius: Option<f64>) -> Vec<(f64, f64)> {
    let mut breaks = vec![lo, hi];
    let foot_in = foot > lo && foot < hi;
    if foot_in {
        breaks.push(foot);
    }
    let f = foot.clamp(lo, hi);
    for edge in [lo, hi] {
        let span = (edge - f).abs();
        if span <= 0.0 {
            continue;
        }
        let levels = ((span / h.max(1e-300)).log2().ceil() as i32).clamp(0, 14);
        for i in 1..=levels {
            breaks.push(f + (edge - f) * 0.5f64.powi(i));
        }
    }
    if let Some(r) = split_radius {
        if r > h {
            let s = (r * r - h * h).sqrt();
            for b in [foot - s, foot + s] {
                if b > lo && b < hi {
                    breaks.push(b);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (hi - lo));
    breaks.windows(2).map(|w| (w[0], w[1])).collect()
}

/// A weighted direction together with its exit distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub dir: Point,
    pub w: f64,
    pub exit: f64,
}

/// Rays from `c` for every direction of `set`.
pub fn rays(dom: &DomainSpec, c: &Point, set: &DirectionSet) -> Vec<Ray> {
    set.dirs
        .iter()
        .map(|d| Ray { dir: d.v, w: d.w, exit: dom.exit_distance(c, &d.v) })
        .collect()
}

/// Splits `[a, b]` at the radii `top·2^{-k}`, `k = 0..=depth`.
///
/// Calls `emit(lo, hi, band)` for each piece, band `j` covering
/// `[top·2^{-j-1}, top·2^{-j}]`; pieces below `top·2^{-depth}` get band `depth`.
pub fn split_bands<F: FnMut(f64, f64, usize)>(a: f64, b: f64, top: f64, depth: usize, mut emit: F) {
    if !(b > a) {
        return;
    }
    let mut hi = b;
    let mut j = 0usize;
    while j < depth && top * 0.5f64.powi(j as i32 + 1) >= hi {
        j += 1;
    }
    while j < depth {
        let r_next = top * 0.5f64.powi(j as i32 + 1);
        let lo = a.max(r_next);
        if hi > lo {
            emit(lo, hi, j);
        }
        if lo <= a {
            return;
        }
        hi = lo;
        j += 1;
    }
    if hi > a {
        emit(a, hi, depth);
    }
}

/// Radial region of a grid, in terms of distance from its centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Domain,
    /// `|y - x0| > r`
    Exterior(f64),
    /// `r_in < |y - x0| < r_out`
    Annulus(f64, f64),
    /// `|y - x0| < r`
    Ball(f64),
}

impl Region {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Region::Domain => (0.0, f64::INFINITY),
            Region::Exterior(r) => (r, f64::INFINITY),
            Region::Annulus(a, b) => (a, b),
            Region::Ball(r) => (0.0, r),
        }
    }
}

/// Angular and radial resolution of a polar grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridResolution {
    pub angular: usize,
    pub rule: RuleKind,
}

impl GridResolution {
    /// Resolution used for norms of closed-form fields.
    pub fn fine(dim: usize) -> GridResolution {
        let angular = match dim {
            1 => 2,
            2 => 64,
            _ => 24,
        };
        GridResolution { angular, rule: RuleKind::Kronrod15 }
    }

    /// Resolution used for evaluating operator outputs.
    pub fn coarse(dim: usize) -> GridResolution {
        let angular = match dim {
            1 => 2,
            2 => 16,
            _ => 8,
        };
        GridResolution { angular, rule: RuleKind::Gauss(4) }
    }
}

/// A quadrature node of a polar grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub x: Point,
    /// Distance from the grid centre.
    pub r: f64,
    pub w: f64,
    /// Weight under the embedded lower-order rule.
    pub w_lo: f64,
    pub band: usize,
}

/// The ball `B(x0, r_min)` left out of the node set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Core {
    pub radius: f64,
    pub solid_angle: f64,
}

/// Polar quadrature grid about `x0`, nodes ordered outermost band first.
///
/// The exterior of ladder radius `r_k` is the node prefix `..band_offset(k)`;
/// the part inside `r_k` is the remaining suffix plus the core.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    dom: DomainSpec,
    ladder: RadialLadder,
    region: Region,
    nodes: Vec<Node>,
    offsets: Vec<usize>,
    core: Option<Core>,
    rays: Vec<Ray>,
    exec: Exec,
}

impl QuadratureGrid {
    pub fn build(dom: &DomainSpec, ladder: &RadialLadder, res: GridResolution, region: Region, exec: Exec) -> Result<QuadratureGrid> {
        let (r_in, r_out) = region.bounds();
        if !(r_in >= 0.0 && r_out > r_in) {
            return Err(Error::InvalidArgument(format!("empty region {region:?}")));
        }
        let x0 = dom.x0();
        let set = DirectionSet::for_domain(dom, &x0, res.angular, None);
        let ray_list = rays(dom, &x0, &set);
        let rule = Rule::new(res.rule);
        let depth = ladder.depth();
        let r_min = ladder.r_min();
        let mut per_ray: Vec<Vec<Node>> = exec.map(ray_list.len(), |i| {
            let ray = ray_list[i];
            let mut out = Vec::new();
            let lo = r_in;
            let hi = r_out.min(ray.exit);
            let a = if lo == 0.0 { r_min.min(hi) } else { lo };
            split_bands(a, hi, ladder.scale(), depth, |s0, s1, band| {
                for q in 0..rule.len() {
                    let s = s0 + (s1 - s0) * rule.nodes[q];
                    let jac = (s1 - s0) * s.powi(dom.dim() as i32 - 1) * ray.w;
                    out.push(Node {
                        x: axpy(&x0, s, &ray.dir),
                        r: s,
                        w: rule.weights[q] * jac,
                        w_lo: rule.weights_lo[q] * jac,
                        band,
                    });
                }
            });
            out
        });
        let mut nodes: Vec<Node> = per_ray.drain(..).flatten().collect();
        nodes.sort_by_key(|n| n.band);
        let mut offsets = vec![0usize; depth + 2];
        for k in 0..=depth + 1 {
            offsets[k] = nodes.partition_point(|n| n.band < k);
        }
        let core = if r_in == 0.0 && r_out >= r_min && dom.boundary_distance(&x0) >= r_min {
            Some(Core { radius: r_min, solid_angle: sphere_surface_measure(dom.dim()) })
        } else {
            None
        };
        Ok(QuadratureGrid { dom: dom.clone(), ladder: ladder.clone(), region, nodes, offsets, core, rays: ray_list, exec })
    }

    /// Fine grid over the whole domain.
    pub fn fine(dom: &DomainSpec, ladder: &RadialLadder) -> Result<QuadratureGrid> {
        QuadratureGrid::build(dom, ladder, GridResolution::fine(dom.dim()), Region::Domain, Exec::default())
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.dom
    }

    pub fn ladder(&self) -> &RadialLadder {
        &self.ladder
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn core(&self) -> Option<Core> {
        self.core
    }

    /// Rays from `x0` the grid was built on.
    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    /// Radial extent `(r_in, r_out)` of the region.
    pub fn radial_bounds(&self) -> (f64, f64) {
        self.region.bounds()
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    pub fn with_exec(mut self, exec: Exec) -> QuadratureGrid {
        self.exec = exec;
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of nodes farther than ladder radius `r_k` from `x0`.
    pub fn band_offset(&self, k: usize) -> usize {
        self.offsets[k.min(self.offsets.len() - 1)]
    }

    /// Sum of `g(node)·w` over the nodes (core excluded).
    pub fn integrate<G: Fn(&Node) -> f64 + Sync + Send>(&self, g: G) -> f64 {
        self.exec.sum(0..self.nodes.len(), |i| {
            let n = &self.nodes[i];
            g(n) * n.w
        })
    }

    /// Volume of the core ball, if present.
    pub fn core_volume(&self) -> f64 {
        self.core.map_or(0.0, |c| c.solid_angle * c.radius.powi(self.dom.dim() as i32) / self.dom.dim() as f64)
    }
}

/// `|B(x, r) ∩ Ω|`.
pub fn truncated_ball_measure(dom: &DomainSpec, x: &Point, r: f64) -> f64 {
    let n = dom.dim();
    if dom.boundary_distance(x) >= r {
        return ball_volume(n, r);
    }
    let res = match n {
        1 => 2,
        2 => 512,
        _ => 96,
    };
    let set = DirectionSet::for_domain(dom, x, res, Some(r));
    rays(dom, x, &set)
        .iter()
        .map(|ray| ray.w * ray.exit.min(r).powi(n as i32) / n as f64)
        .sum()
}

/// `∫_{r_in<|y-x0|<r_out, y∈Ω} g(y) dy` on a fine grid (core excluded).
pub fn integrate_annulus<G: Fn(&Point) -> f64 + Sync + Send>(dom: &DomainSpec, ladder: &RadialLadder, g: G, r_in: f64, r_out: f64) -> Result<f64> {
    let grid = QuadratureGrid::build(dom, ladder, GridResolution::fine(dom.dim()), Region::Annulus(r_in, r_out), Exec::default())?;
    Ok(grid.integrate(|n| g(&n.x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_measures() {
        assert!((sphere_surface_measure(1) - 2.0).abs() < 1e-14);
        assert!((sphere_surface_measure(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_surface_measure(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn split_bands_covers_interval() {
        let mut pieces = Vec::new();
        split_bands(0.01, 0.9, 2.0, 10, |a, b, j| pieces.push((a, b, j)));
        assert_eq!(pieces.first().unwrap().1, 0.9);
        assert_eq!(pieces.last().unwrap().0, 0.01);
        for w in pieces.windows(2) {
            assert_eq!(w[0].0, w[1].1);
            assert_eq!(w[0].2 + 1, w[1].2);
        }
        assert_eq!(pieces[0].2, 1);
    }

    #[test]
    fn uniform_sets_are_antipodal_and_normalised() {
        for n in 1..=3 {
            let s = DirectionSet::uniform(n, 12);
            assert!((s.total_weight() - sphere_surface_measure(n)).abs() < 1e-12);
            for d in &s.dirs {
                let neg = scale(&d.v, -1.0);
                assert!(s.dirs.iter().any(|e| dist(&e.v, &neg) < 1e-12 && (e.w - d.w).abs() < 1e-15));
            }
        }
    }

    #[test]
    fn cone_and_complement_partition_the_sphere() {
        for n in 2..=3 {
            let axis = if n == 2 { [0.6, 0.8, 0.0] } else { [0.0, 0.6, 0.8] };
            let c = DirectionSet::cone(n, &axis, 0.5, 16);
            let o = DirectionSet::cone_complement(n, &axis, 0.5, 16);
            let total = c.total_weight() + o.total_weight();
            assert!((total - sphere_surface_measure(n)).abs() < 1e-10, "n={n} total={total}");
            let cap = if n == 2 { 1.0 } else { 2.0 * PI * (1.0 - 0.5f64.cos()) };
            assert!((c.total_weight() - cap).abs() < 1e-10);
        }
    }

    #[test]
    fn box_face_rules_integrate_the_sphere() {
        let lo = [-1.0, -0.5, -2.0];
        let hi = [1.0, 1.5, 1.0];
        for n in 2..=3 {
            let s = DirectionSet::box_faces(&[0.3, -0.2, 0.1], &lo, &hi, n, 6, None);
            let err = (s.total_weight() - sphere_surface_measure(n)).abs();
            assert!(err < 1e-7, "n={n} err={err}");
        }
    }

    #[test]
    fn grid_weights_sum_to_domain_volume() {
        let doms = [
            DomainSpec::unit_ball(2),
            DomainSpec::ball(2, &[0.0, 0.0], 1.0, &[0.4, -0.3]).unwrap(),
            DomainSpec::boxed(2, &[-1.0, -1.0], &[1.0, 2.0], &[0.2, 0.5]).unwrap(),
            DomainSpec::unit_ball(3),
            DomainSpec::boxed(3, &[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0], &[0.1, 0.2, -0.3]).unwrap(),
            DomainSpec::boxed(1, &[-1.0], &[2.0], &[0.5]).unwrap(),
        ];
        for dom in &doms {
            let ladder = RadialLadder::for_domain(dom, 16).unwrap();
            let grid = QuadratureGrid::fine(dom, &ladder).unwrap();
            let total = grid.integrate(|_| 1.0) + grid.core_volume();
            let rel = (total - dom.volume()).abs() / dom.volume();
            assert!(rel < 1e-6, "{dom:?}: {total} vs {}", dom.volume());
        }
    }

    #[test]
    fn exterior_prefix_matches_region_grid() {
        let dom = DomainSpec::unit_ball(2);
        let ladder = RadialLadder::for_domain(&dom, 12).unwrap();
        let grid = QuadratureGrid::fine(&dom, &ladder).unwrap();
        let k = 3;
        let prefix: f64 = grid.nodes()[..grid.band_offset(k)].iter().map(|n| n.w).sum();
        let r = ladder.radius(k);
        assert!((prefix - PI * (1.0 - r * r)).abs() < 1e-12);
    }

    #[test]
    fn annulus_integral() {
        let dom = DomainSpec::unit_ball(2);
        let ladder = RadialLadder::for_domain(&dom, 12).unwrap();
        let v = integrate_annulus(&dom, &ladder, |_| 1.0, 0.5, 1.0).unwrap();
        assert!((v - 2.356_194_490_192_345).abs() < 1e-12);
    }

    #[test]
    fn truncated_ball_in_box_matches_lens_geometry() {
        let dom = DomainSpec::boxed(2, &[0.0, 0.0], &[1.0, 1.0], &[0.5, 0.5]).unwrap();
        let m = truncated_ball_measure(&dom, &[0.0, 0.0, 0.0], 0.5);
        assert!((m - PI * 0.25 / 4.0).abs() < 1e-10);
        let m = truncated_ball_measure(&dom, &[0.5, 0.1, 0.0], 0.3);
        let h: f64 = 0.1;
        let theta = (h / 0.3).acos();
        let seg = 0.09 * (theta - theta.sin() * theta.cos());
        assert!((m - (PI * 0.09 - seg)).abs() < 1e-8, "m={m}");
    }

    #[test]
    fn exit_distance_ball() {
        let dom = DomainSpec::unit_ball(3);
        assert!((dom.exit_distance(&[0.5, 0.0, 0.0], &[1.0, 0.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!((dom.exit_distance(&[0.5, 0.0, 0.0], &[-1.0, 0.0, 0.0]) - 1.5).abs() < 1e-15);
    }
}
