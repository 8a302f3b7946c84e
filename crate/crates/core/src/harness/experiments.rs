//! Embedding, counterexample, exponent-law, weak-embedding and Zygmund
//! experiments, plus the single-shot `norm`, `op` and `check` commands.

use super::config::{ExperimentConfig, OperatorKind};
use super::family::{counterexamples, g_scale, test_family, TestField};
use super::report::{norm_table, num, operator_table, opt, verdict_row, verdict_table, Check, Outcome, Table, VERDICT_HEADER};
use crate::conditions::{
    check_dini, check_nontriviality, check_weighted_embedding, check_zygmund_pair, complementary_membership, ConditionVerdict,
    Evaluation, WeightFunction,
};
use crate::exec::Exec;
use crate::exponents::{check_log_holder, ExponentField, LogHolderCertificate};
use crate::field::ScalarField;
use crate::geometry::{ball_volume, sphere_surface_measure, DomainSpec, GridResolution, Point, QuadratureGrid, RadialLadder, Region};
use crate::norms::{
    classical_morrey_norm, complementary_profile, luxemburg_norm, modular, weak_weighted_norm, weighted_lebesgue_norm, weighted_modular,
    FieldSamples, NormReport,
};
use crate::operators::{OperatorContext, OperatorSettings, OperatorValue};
use crate::profile::RadialProfile;
use crate::trend::{detect_divergence, ols, GrowthDiagnostic};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::E;

/// Execution switches shared by all experiments.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub exec: Exec,
    /// Run boundedness experiments even when their hypotheses fail.
    pub force: bool,
}

/// Relative slack for comparisons between independently computed norms.
const REL_SLACK: f64 = 1e-6;

fn fine_grid(dom: &DomainSpec, depth: usize, exec: Exec) -> Result<QuadratureGrid> {
    let ladder = RadialLadder::for_domain(dom, depth)?;
    QuadratureGrid::build(dom, &ladder, GridResolution::fine(dom.dim()), Region::Domain, exec)
}

fn constant_p(cfg: &ExperimentConfig, what: &str) -> Result<f64> {
    match cfg.p {
        crate::exponents::ExponentExpr::Constant(p) if p >= 1.0 => Ok(p),
        _ => Err(Error::Precondition(format!("{what} needs a constant exponent p >= 1"))),
    }
}

fn conj(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// `ω(r) = r^{(n-λ)/p'}`, the weight of the power-type complementary space.
pub fn lambda_weight(n: usize, p: f64, lambda: f64) -> WeightFunction {
    let pc = conj(p);
    WeightFunction::power(if pc.is_infinite() { 0.0 } else { (n as f64 - lambda) / pc })
}

/// The log-damped weight `r^ν·ln(A/r)^{-1-ε}` with `A = e·ℓ`.
pub fn damped_weight(dom: &DomainSpec, nu: f64, eps: f64) -> RadialProfile {
    RadialProfile::power_log(nu, -1.0 - eps, E * dom.ell())
}

/// Embedding constant `C_ε` with `‖f‖_{damped} <= C_ε·‖f‖_{complementary}`.
pub fn damped_constant(dom: &DomainSpec, p: f64, nu: f64, eps: f64) -> f64 {
    let l = (E * dom.ell() / dom.ell()).ln();
    (nu / (eps * l.powf(eps)) + 1.0 / l.powf(1.0 + eps)).powf(1.0 / p)
}

/// `(|B(x0,δ)|/|Ω \ B(x0,δ)|)^{1/p}` with `δ = dist(x0, ∂Ω)`.
pub fn weak_constant(dom: &DomainSpec, p: f64) -> f64 {
    let delta = dom.boundary_distance(&dom.x0());
    let inner = ball_volume(dom.dim(), delta);
    let outer = dom.volume() - inner;
    if outer <= 1e-12 * dom.volume() {
        return f64::INFINITY;
    }
    (inner / outer).powf(1.0 / p)
}

/// Weak-embedding data for one field.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakRow {
    pub name: String,
    pub weak: NormReport,
    pub complementary: f64,
    pub member: bool,
    pub exterior_weak: f64,
    pub bound: f64,
    pub holds: bool,
}

fn weak_row(
    grid: &QuadratureGrid,
    ext_grid: Option<&QuadratureGrid>,
    t: &TestField,
    p: f64,
    nu: f64,
    comp: f64,
    member: bool,
    c_delta: f64,
) -> Result<WeakRow> {
    let weak = weak_weighted_norm(grid, &t.field, p, nu)?;
    let exterior_weak = match ext_grid {
        Some(g) => weak_weighted_norm(g, &t.field, p, nu)?.value,
        None => 0.0,
    };
    let bound = if member && c_delta.is_finite() {
        ((c_delta * comp).powf(p) + exterior_weak.powf(p)).powf(1.0 / p)
    } else {
        f64::INFINITY
    };
    let holds = weak.value <= bound * (1.0 + REL_SLACK) + weak.error;
    Ok(WeakRow { name: t.name.to_string(), weak, complementary: comp, member, exterior_weak, bound, holds })
}

/// Norms of one field along the embedding chain.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbedRow {
    pub name: String,
    pub weighted: NormReport,
    pub complementary: NormReport,
    pub member: bool,
    /// `(ε, damped norm, C_ε·complementary)`
    pub damped: Vec<(f64, NormReport, f64)>,
    pub weak: Option<WeakRow>,
    pub left_holds: bool,
    pub right_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbedChainResult {
    pub p: f64,
    pub lambda: f64,
    pub rows: Vec<EmbedRow>,
}

fn membership_of(t: &TestField, dom: &DomainSpec, p: f64, omega: &WeightFunction) -> bool {
    complementary_membership(t.field.local_growth(&dom.x0()), p, dom.dim(), omega)
}

/// Weighted Lebesgue, complementary, log-damped and weak norms of the test
/// family and both counterexamples, with the ordering checked row by row.
pub fn run_embed_chain(cfg: &ExperimentConfig, opts: RunOptions) -> Result<EmbedChainResult> {
    let p = constant_p(cfg, "embed_chain")?;
    let dom = &cfg.domain;
    let lambda = cfg.lambda.unwrap_or(1.0);
    let nu = lambda * (p - 1.0);
    let omega = lambda_weight(dom.dim(), p, lambda);
    let grid = fine_grid(dom, cfg.ladder_depth, opts.exec)?;
    let pf = ExponentField::constant(p, dom)?;
    let delta = dom.boundary_distance(&dom.x0());
    let c_delta = weak_constant(dom, p);
    let ext_grid = if c_delta.is_finite() {
        Some(QuadratureGrid::build(dom, grid.ladder(), GridResolution::fine(dom.dim()), Region::Exterior(delta), opts.exec)?)
    } else {
        None
    };
    let mut fields = test_family(dom, cfg.seed)?;
    let (f, g) = counterexamples(dom, p, lambda);
    fields.push(f);
    fields.push(g);
    let mut rows = Vec::new();
    for t in &fields {
        let weighted = weighted_lebesgue_norm(&grid, &t.field, p, &RadialProfile::power(nu))?;
        let s = FieldSamples::of_field(&grid, &t.field);
        let complementary = complementary_profile(&grid, &s, &pf, &omega)?.report;
        let member = membership_of(t, dom, p, &omega);
        let comp = if member { complementary.value } else { f64::INFINITY };
        let mut damped = Vec::new();
        let mut right_holds = true;
        for &eps in &cfg.epsilons {
            let d = weighted_lebesgue_norm(&grid, &t.field, p, &damped_weight(dom, nu, eps))?;
            let bound = damped_constant(dom, p, nu, eps) * comp;
            if member {
                right_holds &= !d.divergent && d.value <= bound * (1.0 + REL_SLACK) + d.error;
            }
            damped.push((eps, d, bound));
        }
        let left_holds = weighted.divergent || comp <= weighted.value * (1.0 + REL_SLACK) + weighted.error;
        let weak = match &ext_grid {
            Some(eg) => Some(weak_row(&grid, Some(eg), t, p, nu, comp, member, c_delta)?),
            None => None,
        };
        rows.push(EmbedRow { name: t.name.to_string(), weighted, complementary, member, damped, weak, left_holds, right_holds });
    }
    Ok(EmbedChainResult { p, lambda, rows })
}

impl EmbedChainResult {
    pub fn outcome(&self) -> Outcome {
        let mut o = Outcome::new("embed_chain");
        let mut summary =
            Table::new("embed_chain_summary", &["field", "weighted", "complementary", "member", "epsilon", "damped", "damped_bound", "weak", "weak_bound"]);
        for r in &self.rows {
            let mut reports = vec![r.weighted.clone(), r.complementary.clone()];
            for (eps, d, bound) in &r.damped {
                reports.push(d.clone());
                summary.push(vec![
                    r.name.clone(),
                    num(r.weighted.effective()),
                    num(if r.member { r.complementary.value } else { f64::INFINITY }),
                    r.member.to_string(),
                    num(*eps),
                    num(d.effective()),
                    num(*bound),
                    opt(r.weak.as_ref().map(|w| w.weak.value)),
                    opt(r.weak.as_ref().map(|w| w.bound)),
                ]);
            }
            if let Some(w) = &r.weak {
                reports.push(w.weak.clone());
            }
            o.tables.push(norm_table(format!("embed_{}", r.name), &reports));
        }
        o.tables.push(summary);
        let left: Vec<&str> = self.rows.iter().filter(|r| !r.left_holds).map(|r| r.name.as_str()).collect();
        o.checks.push(Check::new("left_embedding", left.is_empty(), format!("violations: {left:?}")));
        let right: Vec<&str> = self.rows.iter().filter(|r| !r.right_holds).map(|r| r.name.as_str()).collect();
        o.checks.push(Check::new("damped_embedding", right.is_empty(), format!("violations: {right:?}")));
        let weak: Vec<&str> = self.rows.iter().filter(|r| r.weak.as_ref().is_some_and(|w| !w.holds)).map(|r| r.name.as_str()).collect();
        o.checks.push(Check::new("weak_embedding", weak.is_empty(), format!("violations: {weak:?}")));
        if let Some(f) = self.rows.iter().find(|r| r.name == "counterexample_f") {
            o.checks.push(Check::new(
                "f_strict",
                f.member && f.weighted.divergent,
                format!("complementary {} finite={}, weighted divergent={}", f.complementary.value, f.member, f.weighted.divergent),
            ));
        }
        if let Some(g) = self.rows.iter().find(|r| r.name == "counterexample_g") {
            let damped_finite = g.damped.iter().all(|(_, d, _)| !d.divergent);
            o.checks.push(Check::new(
                "g_strict",
                !g.member && g.complementary.divergent && damped_finite,
                format!("complementary divergent={}, damped finite={damped_finite}", g.complementary.divergent),
            ));
        }
        o
    }
}

/// Complementary norm of `f` at several depths and the weighted modular growth.
#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleFResult {
    pub depths: Vec<usize>,
    pub values: Vec<f64>,
    pub reports: Vec<NormReport>,
    /// Closed-form limit when `Ω` is a ball centred at `x0`.
    pub oracle: Option<f64>,
    pub weighted: NormReport,
    /// `|S^{n-1}|`, the slope of the weighted modular against `ln(1/r)`.
    pub slope_oracle: f64,
}

fn centred_ball_radius(dom: &DomainSpec) -> Option<f64> {
    match dom.shape() {
        crate::geometry::Shape::Ball { center, radius } if crate::geometry::dist(center, &dom.x0()) < 1e-14 => Some(*radius),
        _ => None,
    }
}

pub fn run_counterexample_f(cfg: &ExperimentConfig, opts: RunOptions) -> Result<CounterexampleFResult> {
    let p = constant_p(cfg, "counterexample_f")?;
    let dom = &cfg.domain;
    let n = dom.dim();
    let lambda = cfg.lambda.unwrap_or(1.0);
    let nu = lambda * (p - 1.0);
    if nu <= 0.0 {
        return Err(Error::Precondition("counterexample_f needs λ(p-1) > 0".into()));
    }
    let omega = lambda_weight(n, p, lambda);
    let pf = ExponentField::constant(p, dom)?;
    let (f, _) = counterexamples(dom, p, lambda);
    let depths: Vec<usize> = (0..3).map(|i| cfg.ladder_depth + 2 * i).collect();
    let mut values = Vec::new();
    let mut reports = Vec::new();
    let mut weighted = None;
    for &k in &depths {
        let grid = fine_grid(dom, k, opts.exec)?;
        let s = FieldSamples::of_field(&grid, &f.field);
        let r = complementary_profile(&grid, &s, &pf, &omega)?.report;
        values.push(r.value);
        reports.push(r);
        if k == cfg.ladder_depth {
            weighted = Some(weighted_modular(&grid, &f.field, p, &RadialProfile::power(nu))?);
        }
    }
    let oracle = centred_ball_radius(dom).map(|rad| (sphere_surface_measure(n) * rad.powf(nu) / nu).powf(1.0 / p));
    Ok(CounterexampleFResult {
        depths,
        values,
        reports,
        oracle,
        weighted: weighted.expect("first depth evaluated"),
        slope_oracle: sphere_surface_measure(n),
    })
}

impl CounterexampleFResult {
    pub fn outcome(&self) -> Outcome {
        let mut o = Outcome::new("counterexample_f");
        let mut t = Table::new("counterexample_f_depths", &["depth", "complementary", "oracle"]);
        for (k, v) in self.depths.iter().zip(&self.values) {
            t.push(vec![k.to_string(), num(*v), opt(self.oracle)]);
        }
        o.tables.push(t);
        let mut reports = self.reports.clone();
        reports.push(self.weighted.clone());
        o.tables.push(norm_table("counterexample_f_norms", &reports));
        let monotone = self.values.windows(2).all(|w| w[1] >= w[0] * (1.0 - REL_SLACK));
        o.checks.push(Check::new("complementary_nondecreasing_in_depth", monotone, format!("{:?}", self.values)));
        if let Some(lim) = self.oracle {
            let last = *self.values.last().unwrap();
            let rel = (last - lim).abs() / lim;
            o.checks.push(Check::new("complementary_limit", rel < 0.01, format!("{last} vs {lim} (rel {rel:.2e})")));
        }
        let slope = self.weighted.growth_slope.unwrap_or(0.0);
        let rel = (slope - self.slope_oracle).abs() / self.slope_oracle;
        o.checks.push(Check::new(
            "weighted_modular_growth",
            self.weighted.divergent && rel < 0.05,
            format!("slope {slope} vs {} (rel {rel:.2e}), divergent={}", self.slope_oracle, self.weighted.divergent),
        ));
        o
    }
}

/// Ladder values of the log-log counterexample and their growth fit.
#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleGResult {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub report: NormReport,
    pub diagnostic: GrowthDiagnostic,
    /// `c` in `v ≈ c·ln ln(B/(2r))` over the fit window.
    pub fit_c: f64,
    /// Total drift of the relative residuals across the fit window.
    pub residual_trend: f64,
    pub max_residual: f64,
    pub window: usize,
    pub damped: Vec<(f64, NormReport)>,
}

/// Number of innermost ladder radii used by the log-log fit.
pub const LOGLOG_WINDOW: usize = 12;

pub fn run_counterexample_g(cfg: &ExperimentConfig, opts: RunOptions) -> Result<CounterexampleGResult> {
    let p = constant_p(cfg, "counterexample_g")?;
    let dom = &cfg.domain;
    let lambda = cfg.lambda.unwrap_or(1.0);
    let nu = lambda * (p - 1.0);
    let omega = lambda_weight(dom.dim(), p, lambda);
    let pf = ExponentField::constant(p, dom)?;
    let (_, g) = counterexamples(dom, p, lambda);
    let grid = fine_grid(dom, cfg.ladder_depth, opts.exec)?;
    let s = FieldSamples::of_field(&grid, &g.field);
    let prof = complementary_profile(&grid, &s, &pf, &omega)?;
    let b = g_scale(dom);
    let m = prof.radii.len();
    let w = LOGLOG_WINDOW.min(m - 1);
    let idx: Vec<usize> = (m - w..m).collect();
    let ls: Vec<f64> = idx.iter().map(|&k| (b / (2.0 * prof.radii[k])).ln().ln()).collect();
    let vs: Vec<f64> = idx.iter().map(|&k| prof.values[k]).collect();
    let c = vs.iter().zip(&ls).map(|(v, l)| v * l).sum::<f64>() / ls.iter().map(|l| l * l).sum::<f64>();
    let resid: Vec<f64> = vs.iter().zip(&ls).map(|(v, l)| v / (c * l) - 1.0).collect();
    let pos: Vec<f64> = (0..w).map(|i| i as f64).collect();
    let residual_trend = (ols(&pos, &resid).slope * (w - 1) as f64).abs();
    let max_residual = resid.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let diagnostic = detect_divergence(&prof.radii[1..], &prof.values[1..]);
    let mut damped = Vec::new();
    for &eps in &cfg.epsilons {
        damped.push((eps, weighted_lebesgue_norm(&grid, &g.field, p, &damped_weight(dom, nu, eps))?));
    }
    Ok(CounterexampleGResult {
        radii: prof.radii,
        values: prof.values,
        report: prof.report,
        diagnostic,
        fit_c: c,
        residual_trend,
        max_residual,
        window: w,
        damped,
    })
}

impl CounterexampleGResult {
    pub fn outcome(&self) -> Outcome {
        let mut o = Outcome::new("counterexample_g");
        let mut t = Table::new("counterexample_g_ladder", &["radius", "value"]);
        for (r, v) in self.radii.iter().zip(&self.values) {
            t.push(vec![num(*r), num(*v)]);
        }
        o.tables.push(t);
        let mut reports = vec![self.report.clone()];
        reports.extend(self.damped.iter().map(|d| d.1.clone()));
        o.tables.push(norm_table("counterexample_g_norms", &reports));
        o.checks.push(Check::new(
            "loglog_fit",
            self.fit_c > 0.0 && self.residual_trend < 0.05,
            format!("c = {}, residual trend {:.3e}, max residual {:.3e}", self.fit_c, self.residual_trend, self.max_residual),
        ));
        o.checks.push(Check::new(
            "divergence_detected",
            self.report.divergent,
            format!("slope {:.4}, t = {:.2}", self.diagnostic.slope, self.diagnostic.t_stat),
        ));
        let finite: Vec<String> = self.damped.iter().map(|(e, d)| format!("eps {e}: {} divergent={}", d.value, d.divergent)).collect();
        o.checks.push(Check::new("damped_norms_finite", self.damped.iter().all(|d| !d.1.divergent), finite.join("; ")));
        o
    }
}

/// Exterior norms of `|x - x0|^ν` and their log-log slope.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentLawResult {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub expected: f64,
    pub prefactors: Vec<f64>,
    pub prefactor_diag: GrowthDiagnostic,
    pub certificate: Option<LogHolderCertificate>,
    pub conforming: bool,
}

/// Fit window for the exponent law.
pub const LAW_WINDOW: usize = 8;

pub fn run_exponent_law(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ExponentLawResult> {
    let dom = &cfg.domain;
    let n = dom.dim() as f64;
    let nu = cfg.nu.ok_or_else(|| Error::Precondition("exponent_law needs `nu` in [exponents]".into()))?;
    let p = ExponentField::lebesgue(cfg.p.clone(), dom)?;
    let worst = if nu < 0.0 { n + nu * p.minus() } else { n + nu * p.plus() };
    if worst >= 0.0 {
        return Err(Error::Precondition(format!("sup(n + ν·p(x)) = {worst} is not negative")));
    }
    let mut conforming = true;
    let certificate = if p.is_constant() {
        None
    } else {
        let c = check_log_holder(&p, dom, cfg.log_samples, cfg.seed);
        if !c.log_holder {
            if !opts.force {
                return Err(Error::Precondition(format!("exponent not certified log-Hölder (levels {:?})", c.levels)));
            }
            conforming = false;
        }
        Some(c)
    };
    let grid = fine_grid(dom, cfg.ladder_depth, opts.exec)?;
    let f = ScalarField::power(dom.x0(), nu);
    let s = FieldSamples::of_field(&grid, &f);
    let ext = crate::norms::exterior_profile(&grid, &s, &p)?;
    let m = ext.radii.len();
    let w = LAW_WINDOW.min(m - 1);
    let xs: Vec<f64> = ext.radii[m - w..].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = ext.norms[m - w..].iter().map(|v| v.ln()).collect();
    let slope = ols(&xs, &ys).slope;
    let expected = nu + n / p.at_x0();
    let prefactors: Vec<f64> = ext.radii.iter().zip(&ext.norms).map(|(r, v)| v / r.powf(expected)).collect();
    let prefactor_diag = detect_divergence(&ext.radii[1..], &prefactors[1..]);
    Ok(ExponentLawResult { radii: ext.radii, values: ext.norms, slope, expected, prefactors, prefactor_diag, certificate, conforming })
}

impl ExponentLawResult {
    pub fn relative_error(&self) -> f64 {
        (self.slope - self.expected).abs() / self.expected.abs()
    }

    pub fn outcome(&self) -> Outcome {
        let mut o = Outcome::new("exponent_law");
        o.conforming = self.conforming;
        let mut t = Table::new("exponent_law_ladder", &["radius", "exterior_norm", "prefactor"]);
        for i in 0..self.radii.len() {
            t.push(vec![num(self.radii[i]), num(self.values[i]), num(self.prefactors[i])]);
        }
        o.tables.push(t);
        o.checks.push(Check::new(
            "slope",
            self.relative_error() < 0.02,
            format!("fitted {} vs {} (rel {:.2e})", self.slope, self.expected, self.relative_error()),
        ));
        let max_pref = self.prefactors.iter().fold(0.0f64, |a, b| a.max(*b));
        o.checks.push(Check::new(
            "bounded_prefactor",
            max_pref.is_finite() && !self.prefactor_diag.divergent,
            format!("max prefactor {max_pref}, trend slope {:.3e}", self.prefactor_diag.slope),
        ));
        if let Some(c) = &self.certificate {
            o.checks.push(Check::new("log_holder", c.log_holder, format!("constant {} levels {:?}", c.constant, c.levels)));
        }
        o
    }
}

/// Weak-embedding check over the test family and both counterexamples.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakEmbedResult {
    pub constant: f64,
    pub rows: Vec<WeakRow>,
}

impl WeakEmbedResult {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.holds).count()
    }

    pub fn outcome(&self) -> Outcome {
        let mut o = Outcome::new("weak_embed");
        let mut t = Table::new("weak_embed", &["field", "weak", "complementary", "member", "exterior_weak", "bound", "holds"]);
        for r in &self.rows {
            t.push(vec![
                r.name.clone(),
                num(r.weak.value),
                num(r.complementary),
                r.member.to_string(),
                num(r.exterior_weak),
                num(r.bound),
                r.holds.to_string(),
            ]);
        }
        o.tables.push(t);
        o.tables.push(norm_table("weak_embed_norms", &self.rows.iter().map(|r| r.weak.clone()).collect::<Vec<_>>()));
        o.checks.push(Check::new("weak_embedding", self.violations() == 0, format!("{} violations, constant {}", self.violations(), self.constant)));
        o
    }
}

pub fn run_weak_embed(cfg: &ExperimentConfig, opts: RunOptions) -> Result<WeakEmbedResult> {
    let p = constant_p(cfg, "weak_embed")?;
    let dom = &cfg.domain;
    let lambda = cfg.lambda.unwrap_or(1.0);
    if !(lambda > 0.0) {
        return Err(Error::Precondition("weak_embed needs λ > 0".into()));
    }
    let nu = lambda * (p - 1.0);
    let c_delta = weak_constant(dom, p);
    if !c_delta.is_finite() {
        return Err(Error::Precondition("Ω \\ B(x0, δ) is empty; the weak-embedding constant is infinite".into()));
    }
    let omega = lambda_weight(dom.dim(), p, lambda);
    let pf = ExponentField::constant(p, dom)?;
    let grid = fine_grid(dom, cfg.ladder_depth, opts.exec)?;
    let delta = dom.boundary_distance(&dom.x0());
    let ext = QuadratureGrid::build(dom, grid.ladder(), GridResolution::fine(dom.dim()), Region::Exterior(delta), opts.exec)?;
    let mut fields = test_family(dom, cfg.seed)?;
    let (f, g) = counterexamples(dom, p, lambda);
    fields.push(f);
    fields.push(g);
    let mut rows = Vec::new();
    for t in &fields {
        let member = membership_of(t, dom, p, &omega);
        let comp = if member {
            let s = FieldSamples::of_field(&grid, &t.field);
            complementary_profile(&grid, &s, &pf, &omega)?.report.value
        } else {
            f64::INFINITY
        };
        rows.push(weak_row(&grid, Some(&ext), t, p, nu, comp, member, c_delta)?);
    }
    Ok(WeakEmbedResult { constant: c_delta, rows })
}

/// Closed-form and quadrature evaluation of one Zygmund pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ZygmundRow {
    pub label: String,
    pub alpha: f64,
    pub closed: ConditionVerdict,
    pub quadrature: ConditionVerdict,
}

impl ZygmundRow {
    pub fn relative_gap(&self) -> f64 {
        let (a, b) = (self.closed.best_constant, self.quadrature.best_constant);
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZygmundAuditResult {
    pub rows: Vec<ZygmundRow>,
    pub extra: Vec<ConditionVerdict>,
}

/// Standard pairs `(label, ω₁, ω₂, α)` checked by the audit.
pub fn zygmund_suite(ell: f64) -> Vec<(String, WeightFunction, WeightFunction, f64)> {
    let a = E * ell;
    let w = WeightFunction::power;
    let wl = WeightFunction::power_log;
    vec![
        ("r^1/2 | r^1/2".into(), w(0.5), w(0.5), 0.0),
        ("r^1/2 | r^1 | a=1/2".into(), w(0.5), w(1.0), 0.5),
        ("r^1/2 | r^1/2 | a=1/2".into(), w(0.5), w(0.5), 0.5),
        ("r^1/3 | r^5/6 | a=1/2".into(), w(1.0 / 3.0), w(5.0 / 6.0), 0.5),
        ("r^1 | r^1".into(), w(1.0), w(1.0), 0.0),
        ("ln^-2 | ln^-1".into(), wl(0.0, -2.0, a), wl(0.0, -1.0, a), 0.0),
        ("ln^-3 | ln^-2".into(), wl(0.0, -3.0, a), wl(0.0, -2.0, a), 0.0),
        ("r^1/2 ln | r^1/2 ln".into(), wl(0.5, 1.0, a), wl(0.5, 1.0, a), 0.0),
        ("r^1/4 ln^2 | r^1/4 ln^2".into(), wl(0.25, 2.0, a), wl(0.25, 2.0, a), 0.0),
        ("r^1/2 ln^-1/2 | r^1 | a=1/2".into(), wl(0.5, -0.5, a), w(1.0), 0.5),
        ("r^1/2 | r^1/2 ln^-1".into(), w(0.5), wl(0.5, -1.0, a), 0.0),
    ]
}

pub fn run_zygmund_audit(cfg: &ExperimentConfig, _opts: RunOptions) -> Result<ZygmundAuditResult> {
    let dom = &cfg.domain;
    let ladder = RadialLadder::for_domain(dom, cfg.ladder_depth.max(24))?;
    let mut suite = zygmund_suite(dom.ell());
    let alpha = match &cfg.alpha {
        Some(a) => ExponentField::order(a.clone(), dom)?.at_x0(),
        None => 0.0,
    };
    if let (Some(a), Some(b)) = (cfg.omega1, cfg.omega2) {
        suite.push(("config".into(), WeightFunction::new(a)?, WeightFunction::new(b)?, alpha));
    }
    let rows = suite
        .into_iter()
        .map(|(label, w1, w2, a)| ZygmundRow {
            label,
            alpha: a,
            closed: check_zygmund_pair(&w1, &w2, a, &ladder, Evaluation::Auto),
            quadrature: check_zygmund_pair(&w1, &w2, a, &ladder, Evaluation::Quadrature),
        })
        .collect();
    Ok(ZygmundAuditResult { rows, extra: condition_verdicts(cfg)?.into_iter().map(|v| v.1).collect() })
}

impl ZygmundAuditResult {
    pub fn outcome(&self) -> Outcome {
        let mut o = Outcome::new("zygmund_audit");
        let mut t = Table::new("zygmund_pairs", &["pair", "alpha", "holds", "closed_form", "quadrature", "relative_gap"]);
        let mut verdicts = Vec::new();
        for r in &self.rows {
            t.push(vec![
                r.label.clone(),
                num(r.alpha),
                r.closed.holds.to_string(),
                num(r.closed.best_constant),
                num(r.quadrature.best_constant),
                num(r.relative_gap()),
            ]);
            verdicts.push(r.closed.clone());
            verdicts.push(r.quadrature.clone());
        }
        o.tables.push(t);
        verdicts.extend(self.extra.iter().cloned());
        o.tables.push(verdict_table("zygmund_verdicts", &verdicts));
        let worst = self.rows.iter().fold(0.0f64, |a, r| a.max(r.relative_gap()));
        let agree = self.rows.iter().all(|r| r.closed.holds == r.quadrature.holds);
        o.checks.push(Check::new("closed_vs_quadrature", worst < 1e-6 && agree, format!("worst relative gap {worst:.2e}")));
        o
    }
}

/// Verdicts for the weights named in a config: nontriviality and Dini for
/// `ω`, `ω₁`, `ω₂`, the Zygmund pair `(ω₁, ω₂)` and, with `ρ`, the
/// weighted-embedding condition against `ω`.
pub fn condition_verdicts(cfg: &ExperimentConfig) -> Result<Vec<(&'static str, ConditionVerdict)>> {
    let dom = &cfg.domain;
    let n = dom.dim();
    let ladder = RadialLadder::for_domain(dom, cfg.ladder_depth.max(24))?;
    let p = ExponentField::lebesgue(cfg.p.clone(), dom)?;
    let alpha = match &cfg.alpha {
        Some(a) => Some(ExponentField::order(a.clone(), dom)?),
        None => None,
    };
    let a0 = alpha.as_ref().map_or(0.0, |a| a.at_x0());
    let q0 = match &alpha {
        Some(a) => ExponentField::sobolev(&p, a, dom)?.at_x0(),
        None => p.at_x0(),
    };
    let mut out = Vec::new();
    for (label, w, pe) in [("omega", cfg.omega, p.at_x0()), ("omega1", cfg.omega1, p.at_x0()), ("omega2", cfg.omega2, q0)] {
        if let Some(w) = w {
            let w = WeightFunction::new(w)?;
            out.push((label, check_nontriviality(&w, pe, n, &ladder)));
            out.push((label, check_dini(&w, dom.ell(), Evaluation::Auto)));
        }
    }
    if let (Some(a), Some(b)) = (cfg.omega1, cfg.omega2) {
        out.push(("omega1/omega2", check_zygmund_pair(&WeightFunction::new(a)?, &WeightFunction::new(b)?, a0, &ladder, Evaluation::Auto)));
    }
    if let (Some(rho), Some(w)) = (cfg.rho, cfg.omega) {
        if !p.is_constant() {
            return Err(Error::Precondition("the weighted-embedding condition needs a constant exponent".into()));
        }
        out.push(("rho/omega", check_weighted_embedding(&WeightFunction::new(rho)?, &WeightFunction::new(w)?, p.at_x0(), n, &ladder)));
    }
    Ok(out)
}

/// `check`: condition verdicts for the configured weights; passes when all hold.
pub fn run_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let v = condition_verdicts(cfg)?;
    if v.is_empty() {
        return Err(Error::InvalidArgument("no weights in [weights]".into()));
    }
    let mut o = Outcome::new("check");
    let mut header = vec!["weights"];
    header.extend(VERDICT_HEADER);
    let mut t = Table::new("verdicts", &header);
    for (label, x) in &v {
        let name = format!("{}({label})", x.condition.name());
        o.checks.push(Check::new(name, x.holds, format!("best constant {}", x.best_constant)));
        let mut row = vec![label.to_string()];
        row.extend(verdict_row(x));
        t.push(row);
    }
    o.tables.push(t);
    Ok(o)
}

/// `norm`: one norm of the configured field.
pub fn run_norm(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome> {
    let dom = &cfg.domain;
    let f = cfg.field.as_ref().ok_or_else(|| Error::InvalidArgument("`field` missing in [experiment]".into()))?;
    let kind = cfg.norm.as_deref().unwrap_or("luxemburg");
    let grid = fine_grid(dom, cfg.ladder_depth, opts.exec)?;
    let p = ExponentField::lebesgue(cfg.p.clone(), dom)?;
    let need_const = || constant_p(cfg, kind);
    let need_weight = |w: Option<RadialProfile>, key: &str| w.ok_or_else(|| Error::InvalidArgument(format!("`{key}` missing in [weights]")));
    let report = match kind {
        "modular" => modular(&grid, f, &p)?,
        "luxemburg" => luxemburg_norm(&grid, f, &p)?,
        "complementary_morrey" => {
            let w = WeightFunction::new(need_weight(cfg.omega, "omega")?)?;
            crate::norms::complementary_morrey_norm(&grid, f, &p, &w)?
        }
        "weighted_lebesgue" => {
            let pc = need_const()?;
            let rho = match (cfg.rho, cfg.lambda) {
                (Some(r), _) => r,
                (None, Some(l)) => RadialProfile::power(l * (pc - 1.0)),
                (None, None) => return Err(Error::InvalidArgument("`rho` or `lambda` needed".into())),
            };
            weighted_lebesgue_norm(&grid, f, pc, &rho)?
        }
        "weak_weighted" => {
            let pc = need_const()?;
            let nu = cfg.nu.or(cfg.lambda.map(|l| l * (pc - 1.0))).unwrap_or(0.0);
            weak_weighted_norm(&grid, f, pc, nu)?
        }
        _ => {
            let lambda = cfg.lambda.ok_or_else(|| Error::InvalidArgument("`lambda` needed".into()))?;
            classical_morrey_norm(&grid, f, &p, lambda, &[])?
        }
    };
    let mut o = Outcome::new("norm");
    o.checks.push(Check::new(kind, report.value.is_finite() && report.value >= 0.0, format!("value {} divergent={}", report.value, report.divergent)));
    o.tables.push(norm_table("norm", &[report]));
    Ok(o)
}

/// Probe points: explicit `points` first, then seeded random points in `Ω`
/// at distance at least `ℓ·2^{-12}` from `x0`.
pub fn probe_points(cfg: &ExperimentConfig) -> Vec<Point> {
    let dom = &cfg.domain;
    let mut pts = cfg.points.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9);
    let (lo, hi) = dom.bounding_box();
    let x0 = dom.x0();
    let min_d = dom.ell() * 2f64.powi(-12);
    while pts.len() < cfg.points.len() + cfg.probes {
        let mut p = [0.0; 3];
        for a in 0..dom.dim() {
            p[a] = rng.gen_range(lo[a]..hi[a]);
        }
        if dom.contains(&p) && crate::geometry::dist(&p, &x0) > min_d {
            pts.push(p);
        }
    }
    pts
}

/// `op`: an operator applied to the configured field at the probe points.
pub fn run_op(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome> {
    let dom = &cfg.domain;
    let f = cfg.field.as_ref().ok_or_else(|| Error::InvalidArgument("`field` missing in [experiment]".into()))?;
    let op = cfg.operator.unwrap_or(OperatorKind::Maximal);
    let ladder = RadialLadder::for_domain(dom, cfg.ladder_depth)?;
    let ctx = OperatorContext::new(dom, &ladder, OperatorSettings::default_for(dom.dim()), opts.exec)?;
    let pf = ctx.prepare(f);
    let alpha = match (&cfg.alpha, op) {
        (Some(a), _) => Some(ExponentField::order(a.clone(), dom)?),
        (None, OperatorKind::Fractional | OperatorKind::Potential) => {
            return Err(Error::InvalidArgument("`alpha` needed in [exponents]".into()))
        }
        _ => None,
    };
    let pts = probe_points(cfg);
    let samples: Vec<(Point, OperatorValue)> = opts.exec.map(pts.len(), |i| {
        let z = pts[i];
        let v = match op {
            OperatorKind::Maximal => ctx.maximal(&pf, &z),
            OperatorKind::Fractional => ctx.fractional_maximal(&pf, alpha.as_ref().unwrap(), &z),
            OperatorKind::Potential => ctx.riesz_potential(&pf, alpha.as_ref().unwrap(), &z),
            OperatorKind::Singular => {
                let s = ctx.singular(&pf, &cfg.kernel, &z, &ctx.default_epsilons(&z));
                OperatorValue { value: s.value.unwrap_or(f64::NAN), error: s.error }
            }
        };
        (z, v)
    });
    let mut o = Outcome::new("op");
    let bad = samples.iter().filter(|s| !s.1.value.is_finite()).count();
    o.checks.push(Check::new(op.name(), bad == 0, format!("{} probes, {bad} without a converged value", samples.len())));
    o.tables.push(operator_table(format!("op_{}", op.name()), dom.dim(), &samples));
    Ok(o)
}
