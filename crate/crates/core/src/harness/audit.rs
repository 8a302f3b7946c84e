//! The built-in acceptance suite.

use super::boundedness::run_operator_bound;
use super::config::{ExperimentConfig, ExperimentKind, OperatorKind};
use super::experiments::*;
use super::report::{num, Check, Outcome, Table};
use crate::exponents::{ExponentExpr, ExponentField};
use crate::field::ScalarField;
use crate::geometry::{DomainSpec, GridResolution, QuadratureGrid, RadialLadder, Region};
use crate::norms::luxemburg_norm;
use crate::operators::{Kernel, OperatorContext, OperatorSettings};
use crate::Result;
use std::f64::consts::PI;
use std::path::Path;

/// Built-in configs, `(name, text)`; the same files ship in `configs/`.
pub const BUILTIN: [(&str, &str); 13] = [
    ("zygmund", include_str!("../../configs/zygmund.cfg")),
    ("embed_chain", include_str!("../../configs/embed_chain.cfg")),
    ("counterexample_f", include_str!("../../configs/counterexample_f.cfg")),
    ("counterexample_g", include_str!("../../configs/counterexample_g.cfg")),
    ("exponent_law_constant", include_str!("../../configs/exponent_law_constant.cfg")),
    ("exponent_law_3d", include_str!("../../configs/exponent_law_3d.cfg")),
    ("exponent_law_variable", include_str!("../../configs/exponent_law_variable.cfg")),
    ("weak_embed_box", include_str!("../../configs/weak_embed_box.cfg")),
    ("maximal_bound", include_str!("../../configs/maximal_bound.cfg")),
    ("potential_bound", include_str!("../../configs/potential_bound.cfg")),
    ("potential_bound_q24", include_str!("../../configs/potential_bound_q24.cfg")),
    ("singular_bound", include_str!("../../configs/singular_bound.cfg")),
    ("maximal_negative", include_str!("../../configs/maximal_negative.cfg")),
];

/// Parses a built-in config by name.
pub fn builtin(name: &str) -> Option<ExperimentConfig> {
    BUILTIN.iter().find(|b| b.0 == name).map(|b| ExperimentConfig::from_text(b.1).expect("built-in configs parse"))
}

/// Runs the experiment named in `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome> {
    let kind = cfg
        .experiment
        .ok_or_else(|| crate::Error::Config { line: 0, msg: "`name` missing in [experiment]".into() })?;
    Ok(match kind {
        ExperimentKind::EmbedChain => run_embed_chain(cfg, opts)?.outcome(),
        ExperimentKind::CounterexampleF => run_counterexample_f(cfg, opts)?.outcome(),
        ExperimentKind::CounterexampleG => run_counterexample_g(cfg, opts)?.outcome(),
        ExperimentKind::ExponentLaw => run_exponent_law(cfg, opts)?.outcome(),
        ExperimentKind::WeakEmbed => run_weak_embed(cfg, opts)?.outcome(),
        ExperimentKind::ZygmundAudit => run_zygmund_audit(cfg, opts)?.outcome(),
        ExperimentKind::MaximalBound => run_operator_bound(cfg, OperatorKind::Maximal, opts)?.outcome(),
        ExperimentKind::PotentialBound => run_operator_bound(cfg, OperatorKind::Potential, opts)?.outcome(),
        ExperimentKind::SingularBound => run_operator_bound(cfg, OperatorKind::Singular, opts)?.outcome(),
    })
}

/// Pointwise checks against closed forms on the unit disc: `L²` norms of
/// `1`, `|x|`, `|x|^{-1/2}`; `I^α 1(0) = 2π/α`; the Riesz transform of
/// `1` and of `y₁` at the centre.
pub fn pointwise_checks(opts: RunOptions) -> Result<Outcome> {
    let dom = DomainSpec::unit_ball(2);
    let x0 = dom.x0();
    let ladder = RadialLadder::for_domain(&dom, 24)?;
    let grid = QuadratureGrid::build(&dom, &ladder, GridResolution::fine(2), Region::Domain, opts.exec)?;
    let p2 = ExponentField::constant(2.0, &dom)?;
    let mut o = Outcome::new("pointwise");
    let mut t = Table::new("pointwise", &["quantity", "computed", "closed_form", "relative_error"]);
    for (name, f, want) in [
        ("luxemburg_one", ScalarField::Constant(1.0), PI.sqrt()),
        ("luxemburg_r", ScalarField::power(x0, 1.0), (PI / 2.0).sqrt()),
        ("luxemburg_r^-1/2", ScalarField::power(x0, -0.5), (2.0 * PI).sqrt()),
    ] {
        rel_check(&mut o, &mut t, name, luxemburg_norm(&grid, &f, &p2)?.value, want, 1e-4);
    }
    let ladder = RadialLadder::for_domain(&dom, 20)?;
    let ctx = OperatorContext::new(&dom, &ladder, OperatorSettings::default_for(2), opts.exec)?;
    let one = ctx.prepare(&ScalarField::Constant(1.0));
    for a in [0.5, 1.0] {
        let alpha = ExponentField::order(ExponentExpr::Constant(a), &dom)?;
        let v = ctx.riesz_potential(&one, &alpha, &x0).value;
        rel_check(&mut o, &mut t, &format!("potential_one_alpha_{a}"), v, 2.0 * PI / a, 5e-3);
    }
    let kernel = Kernel::RieszTransform { component: 0 };
    let eps = ctx.default_epsilons(&x0);
    let odd = ctx.singular(&one, &kernel, &x0, &eps);
    let zero = odd.value.unwrap_or(f64::NAN);
    let tol = 10.0 * odd.error.max(1e-12);
    t.push(vec!["riesz_one_centre".into(), num(zero), "0".into(), String::new()]);
    o.checks.push(Check::new("riesz_one_centre", zero.abs() <= tol, format!("{zero} (tolerance {tol:.1e})")));
    let y1 = ctx.prepare(&ScalarField::Coordinate { axis: 0, origin: x0 });
    let pv = ctx.singular(&y1, &kernel, &x0, &eps).value.unwrap_or(f64::NAN);
    rel_check(&mut o, &mut t, "riesz_y1_centre", pv, -PI, 1e-2);
    o.tables.push(t);
    Ok(o)
}

fn rel_check(o: &mut Outcome, t: &mut Table, name: &str, got: f64, want: f64, tol: f64) {
    let rel = (got - want).abs() / want.abs();
    t.push(vec![name.to_string(), num(got), num(want), num(rel)]);
    o.checks.push(Check::new(name, rel < tol, format!("{got} vs {want} (rel {rel:.2e})")));
}

/// Outcomes of the full suite in run order.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub runs: Vec<(String, Outcome)>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.runs.iter().all(|r| r.1.passed())
    }
}

/// Runs every built-in config plus the pointwise checks, writing each
/// outcome to `out/<name>/`. `seed` replaces the configs' seeds; the
/// negative control always runs forced.
pub fn run_audit(out: &Path, seed: Option<u64>, opts: RunOptions) -> Result<AuditReport> {
    let mut runs = Vec::new();
    let o = pointwise_checks(opts)?;
    o.write(&out.join("pointwise"))?;
    runs.push(("pointwise".to_string(), o));
    for (name, _) in BUILTIN {
        let mut cfg = builtin(name).expect("listed");
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let o = if name == "maximal_negative" {
            negative_control(&cfg, opts)?
        } else {
            run_experiment(&cfg, RunOptions { force: false, ..opts })?
        };
        o.write(&out.join(name))?;
        runs.push((name.to_string(), o));
    }
    let mut summary = Table::new("summary", &["run", "passed", "conforming"]);
    for (n, o) in &runs {
        summary.push(vec![n.clone(), o.passed().to_string(), o.conforming.to_string()]);
    }
    summary.write(out)?;
    Ok(AuditReport { runs })
}

/// The forced maximal run on a pair violating the Zygmund condition; passes
/// when the experiment refuses unforced and the forced verdict is not bounded.
pub fn negative_control(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome> {
    let refused = matches!(
        run_operator_bound(cfg, OperatorKind::Maximal, RunOptions { force: false, ..opts }),
        Err(crate::Error::Precondition(_))
    );
    let r = run_operator_bound(cfg, OperatorKind::Maximal, RunOptions { force: true, ..opts })?;
    let mut o = r.outcome();
    o.experiment = "maximal_negative".into();
    o.checks.push(Check::new("refused_without_force", refused, String::new()));
    o.checks.push(Check::new(
        "not_bounded",
        r.verdict != super::boundedness::Verdict::Bounded,
        format!("verdict {}", r.verdict.name()),
    ));
    Ok(o)
}
