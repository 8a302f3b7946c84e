//! Empirical operator-norm ratios on the test family.
//!
//! For every family member in the source space the operator output is
//! sampled at the nodes of a coarse polar grid and its complementary norm
//! is computed from those samples. The largest ratio target/source is
//! tracked as the ladder deepens.

use super::config::{ExperimentConfig, OperatorKind};
use super::family::{test_family, TestField, FAMILY_VERSION};
use super::report::{num, verdict_table, Check, Outcome, Table};
use super::experiments::RunOptions;
use crate::conditions::{check_nontriviality, check_zygmund_pair, complementary_membership, ConditionVerdict, Evaluation, WeightFunction};
use crate::exponents::{check_log_holder, ExponentField};
use crate::geometry::{GridResolution, QuadratureGrid, RadialLadder, Region};
use crate::norms::{complementary_profile, FieldSamples};
use crate::operators::{OperatorContext, OperatorSettings};
use crate::{Error, Result};

/// Relative change of the maximal ratio that counts as drift.
pub const DRIFT_TOL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Inconclusive,
    Growing,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Bounded => "bounded",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Growing => "growing",
        }
    }
}

/// One family member at one ladder depth.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioRow {
    pub field: String,
    pub depth: usize,
    pub member: bool,
    pub source: f64,
    pub target: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundednessReport {
    pub operator: OperatorKind,
    pub verdict: Verdict,
    /// `(depth, max ratio, field attaining it)`
    pub max_ratios: Vec<(usize, f64, String)>,
    pub drifts: Vec<f64>,
    pub rows: Vec<RatioRow>,
    pub preconditions: Vec<ConditionVerdict>,
    pub log_holder: Option<bool>,
    /// False when failed hypotheses were bypassed with `force`.
    pub conforming: bool,
}

struct Setup {
    p: ExponentField,
    target_p: ExponentField,
    alpha: Option<ExponentField>,
    omega1: WeightFunction,
    omega2: WeightFunction,
}

fn setup(cfg: &ExperimentConfig, op: OperatorKind) -> Result<Setup> {
    let dom = &cfg.domain;
    let p = ExponentField::lebesgue(cfg.p.clone(), dom)?;
    let alpha = match op {
        OperatorKind::Fractional | OperatorKind::Potential => {
            let a = cfg.alpha.clone().ok_or_else(|| Error::InvalidArgument("`alpha` needed in [exponents]".into()))?;
            Some(ExponentField::order(a, dom)?)
        }
        _ => None,
    };
    let target_p = match &alpha {
        Some(a) => ExponentField::sobolev(&p, a, dom)?,
        None => p.clone(),
    };
    let weight = |w: Option<crate::profile::RadialProfile>, key: &str| -> Result<WeightFunction> {
        let w = w.ok_or_else(|| Error::InvalidArgument(format!("`{key}` missing in [weights]")))?;
        let w = WeightFunction::new(w)?;
        w.validate(dom.ell())?;
        Ok(w)
    };
    Ok(Setup { p, target_p, alpha, omega1: weight(cfg.omega1, "omega1")?, omega2: weight(cfg.omega2, "omega2")? })
}

fn max_ratio(rows: &[RatioRow], depth: usize) -> (f64, String) {
    rows.iter()
        .filter(|r| r.depth == depth && r.member)
        .fold((0.0, String::new()), |b, r| if r.ratio > b.0 { (r.ratio, r.field.clone()) } else { b })
}

fn ratios_at(cfg: &ExperimentConfig, op: OperatorKind, s: &Setup, fields: &[TestField], depth: usize, opts: RunOptions) -> Result<Vec<RatioRow>> {
    let dom = &cfg.domain;
    let n = dom.dim();
    let ladder = RadialLadder::for_domain(dom, depth)?;
    let fine = QuadratureGrid::build(dom, &ladder, GridResolution::fine(n), Region::Domain, opts.exec)?;
    let coarse = QuadratureGrid::build(dom, &ladder, GridResolution::coarse(n), Region::Domain, opts.exec)?;
    let ctx = OperatorContext::new(dom, &ladder, OperatorSettings::default_for(n), opts.exec)?;
    let p0 = s.p.at_x0();
    let mut rows = Vec::new();
    for t in fields {
        let member = complementary_membership(t.field.local_growth(&dom.x0()), p0, n, &s.omega1);
        if !member {
            rows.push(RatioRow { field: t.name.into(), depth, member, source: f64::INFINITY, target: f64::NAN, ratio: f64::NAN });
            continue;
        }
        let src = complementary_profile(&fine, &FieldSamples::of_field(&fine, &t.field), &s.p, &s.omega1)?.report.value;
        let pf = ctx.prepare(&t.field);
        let nodes = coarse.nodes();
        let values: Vec<f64> = opts.exec.map(nodes.len(), |i| {
            let z = nodes[i].x;
            match op {
                OperatorKind::Maximal => ctx.maximal(&pf, &z).value,
                OperatorKind::Fractional => ctx.fractional_maximal(&pf, s.alpha.as_ref().unwrap(), &z).value,
                OperatorKind::Potential => ctx.riesz_potential(&pf, s.alpha.as_ref().unwrap(), &z).value,
                OperatorKind::Singular => {
                    let v = ctx.singular(&pf, &cfg.kernel, &z, &ctx.default_epsilons(&z));
                    v.value.unwrap_or_else(|| v.truncated.last().copied().unwrap_or(0.0))
                }
            }
        });
        let samples = FieldSamples::from_values(&coarse, &values)?;
        let target = complementary_profile(&coarse, &samples, &s.target_p, &s.omega2)?.report.value;
        let ratio = if src > 0.0 { target / src } else { 0.0 };
        rows.push(RatioRow { field: t.name.into(), depth, member, source: src, target, ratio });
    }
    Ok(rows)
}

/// Ratios for an arbitrary list of fields at one depth, without the
/// hypothesis checks.
pub fn family_ratios(cfg: &ExperimentConfig, op: OperatorKind, fields: &[TestField], depth: usize, opts: RunOptions) -> Result<Vec<RatioRow>> {
    ratios_at(cfg, op, &setup(cfg, op)?, fields, depth, opts)
}

/// Hypotheses of the boundedness result for `op`: the Zygmund pair with
/// `α(x0)` (zero for the maximal and singular operators), nontriviality of
/// both weights and log-Hölder continuity of `p`.
pub fn preconditions(cfg: &ExperimentConfig, op: OperatorKind) -> Result<(Vec<ConditionVerdict>, Option<bool>)> {
    let s = setup(cfg, op)?;
    let dom = &cfg.domain;
    let ladder = RadialLadder::for_domain(dom, cfg.ladder_depth.max(24))?;
    let a0 = s.alpha.as_ref().map_or(0.0, |a| a.at_x0());
    let v = vec![
        check_zygmund_pair(&s.omega1, &s.omega2, a0, &ladder, Evaluation::Auto),
        check_nontriviality(&s.omega1, s.p.at_x0(), dom.dim(), &ladder),
        check_nontriviality(&s.omega2, s.target_p.at_x0(), dom.dim(), &ladder),
    ];
    let lh = (!s.p.is_constant()).then(|| check_log_holder(&s.p, dom, cfg.log_samples, cfg.seed).log_holder);
    Ok((v, lh))
}

/// Runs the boundedness experiment at depths `K` and `K + 2`, adding
/// `K + 4` when the first drift exceeds [`DRIFT_TOL`].
pub fn run_operator_bound(cfg: &ExperimentConfig, op: OperatorKind, opts: RunOptions) -> Result<BoundednessReport> {
    let s = setup(cfg, op)?;
    let (pre, lh) = preconditions(cfg, op)?;
    let failed: Vec<&str> = pre.iter().filter(|v| !v.holds).map(|v| v.condition.name()).collect();
    let lh_fail = lh == Some(false);
    let conforming = failed.is_empty() && !lh_fail;
    if !conforming && !opts.force {
        let mut why = failed.join(", ");
        if lh_fail {
            why.push_str(if why.is_empty() { "log_holder" } else { ", log_holder" });
        }
        return Err(Error::Precondition(format!("hypotheses fail: {why}; rerun with --force")));
    }
    let fields = test_family(&cfg.domain, cfg.seed)?;
    let k = cfg.ladder_depth;
    let mut rows = ratios_at(cfg, op, &s, &fields, k, opts)?;
    rows.extend(ratios_at(cfg, op, &s, &fields, k + 2, opts)?);
    let mut max_ratios = vec![];
    for d in [k, k + 2] {
        let (m, f) = max_ratio(&rows, d);
        max_ratios.push((d, m, f));
    }
    let drift = |a: f64, b: f64| (b - a) / a;
    let mut drifts = vec![drift(max_ratios[0].1, max_ratios[1].1)];
    let verdict = if drifts[0].abs() < DRIFT_TOL {
        Verdict::Bounded
    } else {
        rows.extend(ratios_at(cfg, op, &s, &fields, k + 4, opts)?);
        let (m, f) = max_ratio(&rows, k + 4);
        max_ratios.push((k + 4, m, f));
        drifts.push(drift(max_ratios[1].1, m));
        if drifts.iter().all(|d| *d > DRIFT_TOL) {
            Verdict::Growing
        } else {
            Verdict::Inconclusive
        }
    };
    Ok(BoundednessReport { operator: op, verdict, max_ratios, drifts, rows, preconditions: pre, log_holder: lh, conforming })
}

impl BoundednessReport {
    pub fn outcome(&self) -> Outcome {
        let name = format!("{}_bound", self.operator.name());
        let mut o = Outcome::new(name.clone());
        o.conforming = self.conforming;
        let mut t = Table::new(format!("{name}_ratios"), &["family_version", "field", "depth", "member", "source", "target", "ratio"]);
        for r in &self.rows {
            t.push(vec![
                FAMILY_VERSION.to_string(),
                r.field.clone(),
                r.depth.to_string(),
                r.member.to_string(),
                num(r.source),
                num(r.target),
                num(r.ratio),
            ]);
        }
        o.tables.push(t);
        let mut m = Table::new(format!("{name}_max"), &["depth", "max_ratio", "field", "drift"]);
        for (i, (d, r, f)) in self.max_ratios.iter().enumerate() {
            let drift = if i == 0 { String::new() } else { num(self.drifts[i - 1]) };
            m.push(vec![d.to_string(), num(*r), f.clone(), drift]);
        }
        o.tables.push(m);
        o.tables.push(verdict_table(format!("{name}_preconditions"), &self.preconditions));
        let detail = format!(
            "verdict {}, max ratios {:?}, drifts {:?}",
            self.verdict.name(),
            self.max_ratios.iter().map(|m| m.1).collect::<Vec<_>>(),
            self.drifts
        );
        if self.conforming {
            o.checks.push(Check::new("bounded", self.verdict == Verdict::Bounded, detail));
        } else {
            o.checks.push(Check::new("verdict_unasserted", true, detail));
        }
        o
    }
}
