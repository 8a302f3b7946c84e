//! Luxemburg, complementary Morrey, weighted Lebesgue, weak and classical
//! Morrey norms on polar quadrature grids.
//!
//! All norms work on [`FieldSamples`]: `ln|f|` at the grid nodes, plus an
//! exact radial description of `f` on the core ball when one exists. Core
//! contributions are improper integrals in `u = ln(1/r)`; without a radial
//! description the core is truncated and the truncation radius is reported.

use crate::conditions::WeightFunction;
use crate::exponents::ExponentField;
use crate::field::{RadialView, ScalarField};
use crate::geometry::{Point, QuadratureGrid, Region};
use crate::profile::RadialProfile;
use crate::quadrature::{improper, Tail};
use crate::trend::{detect_divergence, ols, WINDOW};
use crate::{Error, Result};
use std::ops::Range;

/// Relative width at which the Luxemburg bisection stops.
pub const BISECTION_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Modular,
    Luxemburg,
    ComplementaryMorrey,
    WeightedLebesgue,
    WeakWeighted,
    ClassicalMorrey,
}

impl NormKind {
    pub fn name(&self) -> &'static str {
        match self {
            NormKind::Modular => "modular",
            NormKind::Luxemburg => "luxemburg",
            NormKind::ComplementaryMorrey => "complementary_morrey",
            NormKind::WeightedLebesgue => "weighted_lebesgue",
            NormKind::WeakWeighted => "weak_weighted",
            NormKind::ClassicalMorrey => "classical_morrey",
        }
    }
}

/// Outcome of a norm evaluation.
///
/// `value` is always the resolved value; when `divergent` is set the true
/// norm is infinite and `value` is the truncated or ladder maximum.
/// For modulars and weighted norms `growth_slope` is the slope of the
/// modular against `ln(1/r)`; for ladder norms it is the slope of `ln v`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub kind: NormKind,
    pub value: f64,
    pub argmax_radius: Option<f64>,
    pub error: f64,
    pub truncation_radius: Option<f64>,
    pub divergent: bool,
    pub growth_slope: Option<f64>,
}

impl NormReport {
    /// The norm, with `∞` for divergent results.
    pub fn effective(&self) -> f64 {
        if self.divergent {
            f64::INFINITY
        } else {
            self.value
        }
    }
}

/// `ln|f|` at the nodes of a grid, plus the exact core description.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSamples {
    pub ln_abs: Vec<f64>,
    pub core: Option<RadialView>,
}

impl FieldSamples {
    pub fn of_field(grid: &QuadratureGrid, f: &ScalarField) -> FieldSamples {
        let nodes = grid.nodes();
        let ln_abs = grid.exec().map(nodes.len(), |i| f.ln_abs(&nodes[i].x));
        let core = grid.core().and_then(|c| f.core_view(&grid.domain().x0(), c.radius));
        FieldSamples { ln_abs, core }
    }

    /// Samples from raw nodal values; the core is treated as unresolved.
    pub fn from_values(grid: &QuadratureGrid, values: &[f64]) -> Result<FieldSamples> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        Ok(FieldSamples { ln_abs: values.iter().map(|v| v.abs().ln()).collect(), core: None })
    }
}

struct Lux {
    value: f64,
    error: f64,
    core_divergent: bool,
    truncated: bool,
}

/// Shared modular evaluation for a field, exponent and optional radial weight.
struct Engine<'a> {
    grid: &'a QuadratureGrid,
    lf: &'a [f64],
    p: Vec<f64>,
    lw: Option<Vec<f64>>,
    p_field: &'a ExponentField,
    core_view: Option<RadialView>,
    weight: Option<RadialProfile>,
    const_core: Option<Tail>,
}

type Mask<'m> = Option<&'m (dyn Fn(usize) -> bool + Sync)>;

impl<'a> Engine<'a> {
    fn new(grid: &'a QuadratureGrid, s: &'a FieldSamples, p: &'a ExponentField, weight: Option<&RadialProfile>) -> Engine<'a> {
        let nodes = grid.nodes();
        let pv = if p.is_constant() {
            vec![p.at_x0(); nodes.len()]
        } else {
            grid.exec().map(nodes.len(), |i| p.eval(&nodes[i].x))
        };
        let lw = weight.map(|w| nodes.iter().map(|n| w.ln_abs_u(-n.r.ln())).collect());
        let core_view = if grid.core().is_some() && p.is_radial() { s.core } else { None };
        let mut e = Engine { grid, lf: &s.ln_abs, p: pv, lw, p_field: p, core_view, weight: weight.copied(), const_core: None };
        if p.is_constant() && e.core_view.is_some() {
            e.const_core = e.core_tail(0.0);
        }
        e
    }

    fn has_core(&self) -> bool {
        self.core_view.is_some()
    }

    fn core_tail(&self, ln_eta: f64) -> Option<Tail> {
        let view = self.core_view?;
        let core = self.grid.core()?;
        let n = self.grid.domain().dim() as f64;
        let u_min = -core.radius.ln();
        let weight = self.weight;
        let p = self.p_field;
        let p0 = p.at_x0();
        let (sf, sw) = (view.profile.power, weight.map_or(0.0, |w| w.power));
        // Linear parts are combined first so they cancel exactly for large u.
        let lin = -(p0 * sf + sw + n);
        let g = |u: f64| {
            let r = (-u).exp();
            if r >= view.cutoff {
                return 0.0;
            }
            let pu = p.eval_radial(r).unwrap_or(p0);
            let rf = view.profile.ln_abs_rest_u(u);
            if rf == f64::NEG_INFINITY {
                return 0.0;
            }
            let rw = weight.map_or(0.0, |w| w.ln_abs_rest_u(u));
            (lin * u + pu * (rf - ln_eta) - (pu - p0) * sf * u + rw).exp()
        };
        let t = improper(&g, u_min);
        Some(match t {
            Tail::Converged { value, error } => Tail::Converged { value: value * core.solid_angle, error: error * core.solid_angle },
            Tail::Divergent { partial, last_ratio } => Tail::Divergent { partial: partial * core.solid_angle, last_ratio },
        })
    }

    fn core_at(&self, ln_eta: f64) -> Option<Tail> {
        match self.const_core {
            Some(Tail::Converged { value, error }) => {
                let s = (-self.p_field.at_x0() * ln_eta).exp();
                Some(Tail::Converged { value: value * s, error: error * s })
            }
            Some(t) => Some(t),
            None => self.core_tail(ln_eta),
        }
    }

    fn nodes_sum(&self, range: Range<usize>, mask: Mask, ln_eta: f64, lo: bool) -> f64 {
        let nodes = self.grid.nodes();
        self.grid.exec().sum(range, |i| {
            if let Some(m) = mask {
                if !m(i) {
                    return 0.0;
                }
            }
            let lf = self.lf[i];
            if lf == f64::NEG_INFINITY {
                return 0.0;
            }
            let lw = self.lw.as_ref().map_or(0.0, |v| v[i]);
            let w = if lo { nodes[i].w_lo } else { nodes[i].w };
            w * (self.p[i] * (lf - ln_eta) + lw).exp()
        })
    }

    fn luxemburg(&self, range: Range<usize>, mask: Mask, with_core: bool) -> Lux {
        let mut use_core = with_core && self.has_core();
        let mut core_divergent = false;
        if use_core {
            if let Some(Tail::Divergent { .. }) = self.core_at(0.0) {
                core_divergent = true;
                use_core = false;
            }
        }
        let truncated = with_core && !use_core;
        let core_val = |ln_eta: f64| -> f64 {
            if use_core {
                self.core_at(ln_eta).and_then(|t| t.value()).unwrap_or(0.0)
            } else {
                0.0
            }
        };
        let solve = |lo_rule: bool| -> f64 {
            let rho = |ln_eta: f64| self.nodes_sum(range.clone(), mask, ln_eta, lo_rule) + core_val(ln_eta);
            let r0 = rho(0.0);
            if r0 == 0.0 || !r0.is_finite() {
                return if r0 == 0.0 { 0.0 } else { f64::INFINITY };
            }
            let pm = self.p_field.minus().max(1.0);
            let step = 64.0 * std::f64::consts::LN_2;
            let mut hi = r0.max(1.0).ln() / pm;
            let mut guard = 0;
            while rho(hi) > 1.0 && guard < 40 {
                hi += step;
                guard += 1;
            }
            let mut lo = hi - step;
            guard = 0;
            while rho(lo) <= 1.0 && guard < 40 {
                hi = lo;
                lo -= step;
                guard += 1;
            }
            while hi - lo > BISECTION_TOL {
                let mid = 0.5 * (lo + hi);
                if rho(mid) > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (0.5 * (lo + hi)).exp()
        };
        let value = solve(false);
        let value_lo = solve(true);
        let core_err = if use_core {
            match self.core_at(value.ln()) {
                Some(Tail::Converged { error, .. }) => error * value / self.p_field.minus(),
                _ => 0.0,
            }
        } else {
            0.0
        };
        Lux { value, error: (value - value_lo).abs() + BISECTION_TOL * value + core_err, core_divergent, truncated }
    }

    /// Modular with `η = 1` over a node range, plus the core.
    fn modular(&self, range: Range<usize>, with_core: bool) -> (f64, f64, Option<Tail>) {
        let v = self.nodes_sum(range.clone(), None, 0.0, false);
        let vlo = self.nodes_sum(range, None, 0.0, true);
        let core = if with_core { self.core_at(0.0) } else { None };
        (v, (v - vlo).abs(), core)
    }
}

fn require_domain_grid(grid: &QuadratureGrid) -> Result<()> {
    if grid.region() != Region::Domain {
        return Err(Error::InvalidArgument("ladder norms need a grid over the whole domain".into()));
    }
    Ok(())
}

/// Slope of the truncated modular `M(r_k)` against `ln(1/r_k)` over the innermost window.
fn modular_growth(engine: &Engine) -> f64 {
    let grid = engine.grid;
    let ladder = grid.ladder();
    let k_max = ladder.depth();
    let k_min = k_max.saturating_sub(WINDOW - 1).max(1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in k_min..=k_max {
        xs.push(-ladder.radius(k).ln());
        ys.push(engine.nodes_sum(0..grid.band_offset(k), None, 0.0, false));
    }
    if xs.len() < 2 {
        return 0.0;
    }
    ols(&xs, &ys).slope
}

/// Band contributions that fail to decay towards `x0`.
fn band_divergence(engine: &Engine) -> bool {
    let grid = engine.grid;
    let k = grid.ladder().depth();
    if k < WINDOW + 1 {
        return false;
    }
    let c: Vec<f64> = ((k - WINDOW)..k)
        .map(|j| engine.nodes_sum(grid.band_offset(j)..grid.band_offset(j + 1), None, 0.0, false))
        .collect();
    if c.iter().any(|v| *v <= 0.0) {
        return false;
    }
    let mean_ratio = c.windows(2).map(|w| w[1] / w[0]).sum::<f64>() / (c.len() - 1) as f64;
    mean_ratio >= 0.97
}

/// `∫_Ω |f|^{p(x)} dx` over the grid's region.
pub fn modular(grid: &QuadratureGrid, f: &ScalarField, p: &ExponentField) -> Result<NormReport> {
    let s = FieldSamples::of_field(grid, f);
    Ok(modular_report(grid, &s, p, None, NormKind::Modular))
}

fn modular_report(grid: &QuadratureGrid, s: &FieldSamples, p: &ExponentField, weight: Option<&RadialProfile>, kind: NormKind) -> NormReport {
    let e = Engine::new(grid, s, p, weight);
    let (v, err, core) = e.modular(0..grid.len(), true);
    let core_region = grid.core().is_some();
    let (value, error, divergent, truncation) = match core {
        Some(Tail::Converged { value, error }) => (v + value, err + error, false, None),
        Some(Tail::Divergent { .. }) => (v, err, true, grid.core().map(|c| c.radius)),
        None => {
            let trunc = if core_region { grid.core().map(|c| c.radius) } else { None };
            let div = core_region && band_divergence(&e);
            (v, err, div, trunc)
        }
    };
    let growth_slope = divergent.then(|| modular_growth(&e));
    NormReport { kind, value, argmax_radius: None, error, truncation_radius: truncation, divergent, growth_slope }
}

/// Luxemburg norm `inf{η > 0 : ∫ |f/η|^{p(x)} <= 1}` over the grid's region.
pub fn luxemburg_norm(grid: &QuadratureGrid, f: &ScalarField, p: &ExponentField) -> Result<NormReport> {
    let s = FieldSamples::of_field(grid, f);
    Ok(luxemburg_from_samples(grid, &s, p))
}

pub fn luxemburg_from_samples(grid: &QuadratureGrid, s: &FieldSamples, p: &ExponentField) -> NormReport {
    let e = Engine::new(grid, s, p, None);
    let l = e.luxemburg(0..grid.len(), None, true);
    let core_region = grid.core().is_some();
    let divergent = l.core_divergent || (l.truncated && core_region && band_divergence(&e));
    NormReport {
        kind: NormKind::Luxemburg,
        value: l.value,
        argmax_radius: None,
        error: l.error,
        truncation_radius: (l.truncated && core_region).then(|| grid.core().map(|c| c.radius)).flatten(),
        divergent,
        growth_slope: divergent.then(|| modular_growth(&e)),
    }
}

/// Luxemburg norms of `f` on `Ω \ B(x0, r_k)` along the ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct ExteriorProfile {
    pub radii: Vec<f64>,
    pub norms: Vec<f64>,
    pub errors: Vec<f64>,
}

pub fn exterior_profile(grid: &QuadratureGrid, s: &FieldSamples, p: &ExponentField) -> Result<ExteriorProfile> {
    require_domain_grid(grid)?;
    let e = Engine::new(grid, s, p, None);
    let ladder = grid.ladder();
    let res: Vec<(f64, f64)> = grid.exec().map(ladder.depth() + 1, |k| {
        let end = grid.band_offset(k);
        if end == 0 {
            return (0.0, 0.0);
        }
        let l = e.luxemburg(0..end, None, false);
        (l.value, l.error)
    });
    Ok(ExteriorProfile {
        radii: ladder.radii(),
        norms: res.iter().map(|r| r.0).collect(),
        errors: res.iter().map(|r| r.1).collect(),
    })
}

/// Ladder values `r^{n/p'(x0)}/ω(r)·‖f‖_{L^p(Ω∖B(x0,r))}` and their maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplementaryProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub exterior: ExteriorProfile,
    pub report: NormReport,
}

pub fn complementary_morrey_norm(grid: &QuadratureGrid, f: &ScalarField, p: &ExponentField, omega: &WeightFunction) -> Result<NormReport> {
    let s = FieldSamples::of_field(grid, f);
    Ok(complementary_profile(grid, &s, p, omega)?.report)
}

pub fn complementary_profile(grid: &QuadratureGrid, s: &FieldSamples, p: &ExponentField, omega: &WeightFunction) -> Result<ComplementaryProfile> {
    let ext = exterior_profile(grid, s, p)?;
    let n = grid.domain().dim() as f64;
    let pc = p.conjugate_at_x0();
    let expo = if pc.is_infinite() { 0.0 } else { n / pc };
    let factor = |r: f64| r.powf(expo) / omega.eval(r);
    let values: Vec<f64> = ext.radii.iter().zip(&ext.norms).map(|(r, v)| factor(*r) * v).collect();
    let (mut best, mut arg) = (0usize, 0.0);
    for (k, v) in values.iter().enumerate() {
        if *v > arg {
            arg = *v;
            best = k;
        }
    }
    let diag = detect_divergence(&ext.radii[1..], &values[1..]);
    let report = NormReport {
        kind: NormKind::ComplementaryMorrey,
        value: values[best],
        argmax_radius: Some(ext.radii[best]),
        error: factor(ext.radii[best]) * ext.errors[best],
        truncation_radius: Some(grid.ladder().r_min()),
        divergent: diag.divergent,
        growth_slope: Some(diag.slope),
    };
    Ok(ComplementaryProfile { radii: ext.radii.clone(), values, exterior: ext, report })
}

/// `(∫ |f|^p w(|y - x0|) dy)^{1/p}` for a radial weight `w`.
pub fn weighted_lebesgue_norm(grid: &QuadratureGrid, f: &ScalarField, p: f64, weight: &RadialProfile) -> Result<NormReport> {
    let pf = ExponentField::constant(p, grid.domain())?;
    let s = FieldSamples::of_field(grid, f);
    let m = modular_report(grid, &s, &pf, Some(weight), NormKind::WeightedLebesgue);
    let value = m.value.powf(1.0 / p);
    let error = if m.value > 0.0 { value * m.error / (p * m.value) } else { 0.0 };
    Ok(NormReport { value, error, ..m })
}

/// Weighted modular `∫ |f|^p w(|y - x0|) dy` with the same divergence handling.
pub fn weighted_modular(grid: &QuadratureGrid, f: &ScalarField, p: f64, weight: &RadialProfile) -> Result<NormReport> {
    let pf = ExponentField::constant(p, grid.domain())?;
    let s = FieldSamples::of_field(grid, f);
    Ok(modular_report(grid, &s, &pf, Some(weight), NormKind::Modular))
}

/// Weak norm `sup_t t·μ({|f| > t})^{1/p}` with `dμ = |y - x0|^ν dy`.
///
/// Level sets of fields that are radial about `x0` are found along each ray
/// by bisection on the profile; other fields use the discrete node measure.
pub fn weak_weighted_norm(grid: &QuadratureGrid, f: &ScalarField, p: f64, nu: f64) -> Result<NormReport> {
    let n = grid.domain().dim() as f64;
    if nu + n <= 0.0 {
        return Err(Error::InvalidWeight(format!("weight exponent {nu} is not locally integrable")));
    }
    if p < 1.0 {
        return Err(Error::InvalidExponent(format!("weak norm needs p >= 1, got {p}")));
    }
    let x0 = grid.domain().x0();
    match f.radial_view(&x0) {
        Some(view) => Ok(weak_radial(grid, &view, p, nu)),
        None => Ok(weak_nodes(grid, f, p, nu)),
    }
}

fn weak_radial(grid: &QuadratureGrid, view: &RadialView, p: f64, nu: f64) -> NormReport {
    let n = grid.domain().dim() as f64;
    let m = nu + n;
    let (r_in, r_out) = grid.radial_bounds();
    let rays = grid.rays();
    let r_top = rays.iter().map(|r| r.exit.min(r_out)).fold(0.0, f64::max);
    let per_octave = 8usize;
    let count = per_octave * (grid.ladder().depth() + 40);
    let rs: Vec<f64> = (0..=count).map(|i| r_top * 2f64.powf(-(i as f64) / per_octave as f64)).collect();
    let lf: Vec<f64> = rs.iter().map(|r| view.ln_abs_u(-r.ln())).collect();
    let finite: Vec<f64> = lf.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return NormReport { kind: NormKind::WeakWeighted, value: 0.0, argmax_radius: None, error: 0.0, truncation_radius: None, divergent: false, growth_slope: None };
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step = std::f64::consts::LN_2 / 4.0;
    let mut levels: Vec<f64> = Vec::new();
    let mut t = lo - step;
    while t < hi {
        levels.push(t);
        t += step;
    }
    levels.push(hi - 1e-12 * hi.abs().max(1.0));
    let crossing = |a: usize, b: usize, lt: f64| -> f64 {
        let (mut x, mut y) = (rs[a].ln(), rs[b].ln());
        let above_at_x = lf[a] > lt;
        for _ in 0..60 {
            let mid = 0.5 * (x + y);
            if (view.ln_abs_u(-mid) > lt) == above_at_x {
                x = mid;
            } else {
                y = mid;
            }
        }
        (0.5 * (x + y)).exp()
    };
    let vals = grid.exec().map(levels.len(), |li| {
        let lt = levels[li];
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        let mut start: Option<f64> = if lf[count] > lt { Some(0.0) } else { None };
        for i in (0..count).rev() {
            let above = lf[i] > lt;
            let prev_above = lf[i + 1] > lt;
            if above && !prev_above {
                start = Some(crossing(i + 1, i, lt));
            } else if !above && prev_above {
                intervals.push((start.take().unwrap_or(0.0), crossing(i + 1, i, lt)));
            }
        }
        if let Some(s0) = start {
            intervals.push((s0, f64::INFINITY));
        }
        let mut mu = 0.0;
        for ray in rays {
            let top = ray.exit.min(r_out);
            for &(a, b) in &intervals {
                let a = a.max(r_in);
                let b = b.min(top);
                if b > a {
                    mu += ray.w * (b.powf(m) - a.powf(m)) / m;
                }
            }
        }
        lt.exp() * mu.powf(1.0 / p)
    });
    let value = vals.iter().copied().fold(0.0, f64::max);
    NormReport { kind: NormKind::WeakWeighted, value, argmax_radius: None, error: 1e-10 * value, truncation_radius: None, divergent: false, growth_slope: None }
}

fn weak_nodes(grid: &QuadratureGrid, f: &ScalarField, p: f64, nu: f64) -> NormReport {
    let nodes = grid.nodes();
    let mut items: Vec<(f64, f64)> = nodes.iter().map(|nd| (f.value(&nd.x).abs(), nd.w * nd.r.powf(nu))).collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut cum = 0.0;
    let mut best: f64 = 0.0;
    let mut i = 0;
    while i < items.len() {
        let v = items[i].0;
        while i < items.len() && items[i].0 == v {
            cum += items[i].1;
            i += 1;
        }
        best = best.max(v * cum.powf(1.0 / p));
    }
    NormReport {
        kind: NormKind::WeakWeighted,
        value: best,
        argmax_radius: None,
        error: 0.0,
        truncation_radius: grid.core().map(|c| c.radius),
        divergent: false,
        growth_slope: None,
    }
}

/// Classical Morrey norm `sup_t t^{-λ/p(x0)}·‖f‖_{L^p(B(x, t) ∩ Ω)}`.
///
/// The supremum runs over ladder radii `t` and over `x0` together with any
/// extra `centers`; balls about extra centres are resolved by masking nodes.
pub fn classical_morrey_norm(grid: &QuadratureGrid, f: &ScalarField, p: &ExponentField, lambda: f64, centers: &[Point]) -> Result<NormReport> {
    require_domain_grid(grid)?;
    let s = FieldSamples::of_field(grid, f);
    let e = Engine::new(grid, &s, p, None);
    let ladder = grid.ladder();
    let expo = lambda / p.at_x0();
    let local: Vec<(f64, f64, bool)> = (0..=ladder.depth())
        .map(|k| {
            let t = ladder.radius(k);
            let l = e.luxemburg(grid.band_offset(k)..grid.len(), None, true);
            (t.powf(-expo) * l.value, t, l.core_divergent)
        })
        .collect();
    let mut best = local.iter().fold((0.0, 0.0), |b, v| if v.0 > b.0 { (v.0, v.1) } else { b });
    let mut divergent = local.iter().any(|v| v.2);
    let x0 = grid.domain().x0();
    let r_min = ladder.r_min();
    for c in centers {
        let d0 = crate::geometry::dist(c, &x0);
        for k in 0..=ladder.depth() {
            let t = ladder.radius(k);
            let nodes = grid.nodes();
            let mask = |i: usize| crate::geometry::dist(&nodes[i].x, c) < t;
            let l = e.luxemburg(0..grid.len(), Some(&mask), d0 + r_min <= t);
            divergent |= l.core_divergent;
            let v = t.powf(-expo) * l.value;
            if v > best.0 {
                best = (v, t);
            }
        }
    }
    let values: Vec<f64> = local.iter().map(|v| v.0).collect();
    let diag = detect_divergence(&ladder.radii(), &values);
    Ok(NormReport {
        kind: NormKind::ClassicalMorrey,
        value: best.0,
        argmax_radius: Some(best.1),
        error: BISECTION_TOL * best.0,
        truncation_radius: None,
        divergent: divergent || diag.divergent,
        growth_slope: Some(diag.slope),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, RadialLadder};
    use std::f64::consts::PI;

    fn setup(depth: usize) -> (DomainSpec, QuadratureGrid) {
        let dom = DomainSpec::unit_ball(2);
        let ladder = RadialLadder::for_domain(&dom, depth).unwrap();
        let grid = QuadratureGrid::fine(&dom, &ladder).unwrap();
        (dom, grid)
    }

    #[test]
    fn lebesgue_norm_of_constant() {
        let (dom, grid) = setup(16);
        let p = ExponentField::constant(3.0, &dom).unwrap();
        let r = luxemburg_norm(&grid, &ScalarField::Constant(2.0), &p).unwrap();
        assert!((r.value - 2.0 * PI.powf(1.0 / 3.0)).abs() < 1e-7, "{r:?}");
    }

    #[test]
    fn lebesgue_norm_of_singular_power_uses_core_integral() {
        let (dom, grid) = setup(12);
        let p = ExponentField::constant(2.0, &dom).unwrap();
        let f = ScalarField::power([0.0; 3], -0.5);
        let r = luxemburg_norm(&grid, &f, &p).unwrap();
        assert!(!r.divergent);
        assert!((r.value - (2.0 * PI).sqrt()).abs() < 1e-7, "{r:?}");
        let f = ScalarField::power([0.0; 3], -1.0);
        let r = luxemburg_norm(&grid, &f, &p).unwrap();
        assert!(r.divergent);
    }

    #[test]
    fn weak_norm_of_power() {
        let (_, grid) = setup(16);
        let f = ScalarField::power([0.0; 3], -1.0);
        let r = weak_weighted_norm(&grid, &f, 2.0, 0.0).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn weak_norm_of_indicator_hits_plateau() {
        let (_, grid) = setup(16);
        let f = ScalarField::Indicator { center: [0.0; 3], radius: 0.5, value: 1.0 };
        let r = weak_weighted_norm(&grid, &f, 1.0, 0.0).unwrap();
        assert!((r.value - PI * 0.25).abs() < 1e-8, "{r:?}");
    }
}
