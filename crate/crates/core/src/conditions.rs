//! Weight functions and the conditions relating them: nontriviality,
//! Dini, Zygmund pairs and the weighted-embedding condition.

use crate::geometry::RadialLadder;
use crate::profile::{Asymptotic, RadialProfile};
use crate::quadrature::{improper, Tail};
use crate::trend::detect_divergence;
use crate::{Error, Result};

/// A positive radial weight `ω(r) = c·r^s·ln(A/r)^m·(ln ln(B/r))^k` on `(0, ℓ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightFunction {
    profile: RadialProfile,
}

impl WeightFunction {
    pub fn new(profile: RadialProfile) -> Result<WeightFunction> {
        if !(profile.coef > 0.0) {
            return Err(Error::InvalidWeight("weight coefficient must be positive".into()));
        }
        Ok(WeightFunction { profile })
    }

    pub fn power(s: f64) -> WeightFunction {
        WeightFunction { profile: RadialProfile::power(s) }
    }

    pub fn power_log(s: f64, m: f64, a: f64) -> WeightFunction {
        WeightFunction { profile: RadialProfile::power_log(s, m, a) }
    }

    pub fn power_loglog(s: f64, k: f64, b: f64) -> WeightFunction {
        WeightFunction { profile: RadialProfile::power_loglog(s, k, b) }
    }

    /// Checks positivity of the logarithmic factors on `(0, ell]`.
    pub fn validate(&self, ell: f64) -> Result<()> {
        self.profile.validate(ell).map_err(|e| Error::InvalidWeight(e.to_string()))
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.profile.value(r)
    }

    /// `ln ω` at `r = e^{-u}`.
    pub fn ln_eval_u(&self, u: f64) -> f64 {
        self.profile.ln_abs_u(u)
    }

    /// `r^σ·ω(r)`
    pub fn times_power(&self, sigma: f64) -> WeightFunction {
        let mut p = self.profile;
        p.power += sigma;
        WeightFunction { profile: p }
    }

    pub fn asymptotic(&self) -> Asymptotic {
        self.profile.asymptotic()
    }
}

/// How an integral in a condition was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Quadrature,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
        }
    }
}

/// Evaluation policy for the Dini-type integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Evaluation {
    /// Closed form when one exists, quadrature otherwise.
    #[default]
    Auto,
    /// Always use quadrature.
    Quadrature,
}

/// Which condition a verdict refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    Nontriviality,
    Dini,
    Zygmund,
    WeightedEmbedding,
}

impl Condition {
    pub fn name(&self) -> &'static str {
        match self {
            Condition::Nontriviality => "nontriviality",
            Condition::Dini => "dini",
            Condition::Zygmund => "zygmund",
            Condition::WeightedEmbedding => "weighted_embedding",
        }
    }
}

/// Outcome of a condition check.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionVerdict {
    pub condition: Condition,
    pub holds: bool,
    pub best_constant: f64,
    pub witness_radius: Option<f64>,
    pub method: Method,
    /// Set when the condition fails only because a prerequisite fails.
    pub vacuous: bool,
}

/// Whether `∫_0 ω(r) dr/r` converges, from the profile exponents.
pub fn dini_finite(omega: &WeightFunction) -> bool {
    let p = omega.profile();
    if p.power != 0.0 {
        return p.power > 0.0;
    }
    if p.log_pow != -1.0 {
        return p.log_pow < -1.0;
    }
    p.loglog_pow < -1.0
}

/// Closed-form `∫_0^t ω(r) dr/r`, when available.
fn dini_closed_form(omega: &WeightFunction, t: f64) -> Option<f64> {
    let p = omega.profile();
    if p.loglog_pow != 0.0 {
        return None;
    }
    let (c, s, m, a) = (p.coef, p.power, p.log_pow, p.log_scale);
    if m == 0.0 {
        return Some(if s > 0.0 { c * t.powf(s) / s } else { f64::INFINITY });
    }
    if s == 0.0 {
        return Some(if m < -1.0 { c * (a / t).ln().powf(m + 1.0) / (-m - 1.0) } else { f64::INFINITY });
    }
    if s > 0.0 && m > -1.0 {
        use statrs::function::gamma::{gamma, gamma_ur};
        let lt = (a / t).ln();
        let upper = gamma_ur(m + 1.0, s * lt) * gamma(m + 1.0);
        return Some(c * a.powf(s) * s.powf(-(m + 1.0)) * upper);
    }
    if s < 0.0 {
        return Some(f64::INFINITY);
    }
    None
}

/// `∫_0^t ω(r) dr/r` by quadrature in `u = ln(1/r)`.
fn dini_quadrature(omega: &WeightFunction, t: f64) -> f64 {
    let g = |u: f64| omega.ln_eval_u(u).exp();
    match improper(&g, -t.ln()) {
        Tail::Converged { value, .. } => value,
        Tail::Divergent { .. } => f64::INFINITY,
    }
}

/// `∫_0^t ω(r) dr/r` and the method used.
pub fn dini_integral(omega: &WeightFunction, t: f64, eval: Evaluation) -> (f64, Method) {
    if eval == Evaluation::Auto {
        if let Some(v) = dini_closed_form(omega, t) {
            return (v, Method::ClosedForm);
        }
    }
    (dini_quadrature(omega, t), Method::Quadrature)
}

pub fn check_dini(omega: &WeightFunction, ell: f64, eval: Evaluation) -> ConditionVerdict {
    let (v, method) = dini_integral(omega, ell, eval);
    ConditionVerdict { condition: Condition::Dini, holds: v.is_finite(), best_constant: v, witness_radius: None, method, vacuous: false }
}

fn sup_on_ladder(ladder: &RadialLadder, values: &[f64]) -> (f64, f64) {
    let radii = ladder.radii();
    values.iter().zip(&radii).fold((f64::NEG_INFINITY, radii[0]), |b, (v, r)| if *v > b.0 { (*v, *r) } else { b })
}

/// `sup_{r<=ℓ} r^{n/p'(x0)}/ω(r) < ∞`.
pub fn check_nontriviality(omega: &WeightFunction, p_x0: f64, n: usize, ladder: &RadialLadder) -> ConditionVerdict {
    let expo = if p_x0 == 1.0 { 0.0 } else { n as f64 * (p_x0 - 1.0) / p_x0 };
    let values: Vec<f64> = ladder.radii().iter().map(|r| r.powf(expo) / omega.eval(*r)).collect();
    let (best, arg) = sup_on_ladder(ladder, &values);
    let diag = detect_divergence(&ladder.radii(), &values);
    ConditionVerdict {
        condition: Condition::Nontriviality,
        holds: !diag.divergent,
        best_constant: best,
        witness_radius: Some(arg),
        method: Method::ClosedForm,
        vacuous: false,
    }
}

/// `sup_t t^α·(∫_0^t ω₁ dr/r)/ω₂(t) < ∞`; fails vacuously when `ω₁` is not Dini.
pub fn check_zygmund_pair(omega1: &WeightFunction, omega2: &WeightFunction, alpha: f64, ladder: &RadialLadder, eval: Evaluation) -> ConditionVerdict {
    let dini = check_dini(omega1, ladder.scale(), eval);
    if !dini.holds {
        return ConditionVerdict {
            condition: Condition::Zygmund,
            holds: false,
            best_constant: f64::INFINITY,
            witness_radius: None,
            method: dini.method,
            vacuous: true,
        };
    }
    let mut method = dini.method;
    let values: Vec<f64> = ladder
        .radii()
        .iter()
        .map(|t| {
            let (i, m) = dini_integral(omega1, *t, eval);
            if m == Method::Quadrature {
                method = Method::Quadrature;
            }
            t.powf(alpha) * i / omega2.eval(*t)
        })
        .collect();
    let (best, arg) = sup_on_ladder(ladder, &values);
    let diag = detect_divergence(&ladder.radii(), &values);
    ConditionVerdict { condition: Condition::Zygmund, holds: !diag.divergent, best_constant: best, witness_radius: Some(arg), method, vacuous: false }
}

/// `inf_r ρ(r)·ω(r)^p / r^{n(p-1)} > 0`.
pub fn check_weighted_embedding(rho: &WeightFunction, omega: &WeightFunction, p: f64, n: usize, ladder: &RadialLadder) -> ConditionVerdict {
    let values: Vec<f64> = ladder
        .radii()
        .iter()
        .map(|r| rho.eval(*r) * omega.eval(*r).powf(p) / r.powf(n as f64 * (p - 1.0)))
        .collect();
    let inv: Vec<f64> = values.iter().map(|v| 1.0 / v).collect();
    let radii = ladder.radii();
    let (best, arg) = values.iter().zip(&radii).fold((f64::INFINITY, radii[0]), |b, (v, r)| if *v < b.0 { (*v, *r) } else { b });
    let diag = detect_divergence(&radii, &inv);
    ConditionVerdict {
        condition: Condition::WeightedEmbedding,
        holds: !diag.divergent && best > 0.0,
        best_constant: best,
        witness_radius: Some(arg),
        method: Method::ClosedForm,
        vacuous: false,
    }
}

/// Whether a field with local growth `growth` at `x0` has finite complementary
/// norm for `p(x0)` and weight `ω`, from the asymptotics of its exterior norms.
/// `None` stands for a field vanishing near `x0`.
pub fn complementary_membership(growth: Option<Asymptotic>, p_x0: f64, n: usize, omega: &WeightFunction) -> bool {
    let Some(g) = growth else {
        return true;
    };
    let nf = n as f64;
    let crit = nf / p_x0;
    const TOL: f64 = 1e-12;
    let exterior = if g.power > crit + TOL {
        Asymptotic { power: g.power - crit, log: g.log, loglog: g.loglog }
    } else if g.power < crit - TOL {
        Asymptotic::BOUNDED
    } else {
        let (b, c) = (g.log * p_x0, g.loglog * p_x0);
        if b < -1.0 - TOL || ((b + 1.0).abs() <= TOL && c < -1.0 - TOL) {
            Asymptotic::BOUNDED
        } else if b > -1.0 + TOL {
            Asymptotic { power: 0.0, log: (b + 1.0) / p_x0, loglog: c / p_x0 }
        } else if c > -1.0 + TOL {
            Asymptotic { power: 0.0, log: 0.0, loglog: (c + 1.0) / p_x0 }
        } else {
            Asymptotic { power: 0.0, log: 0.0, loglog: 1e-6 }
        }
    };
    let scale = if p_x0 == 1.0 { 0.0 } else { nf * (p_x0 - 1.0) / p_x0 };
    let factor = Asymptotic { power: -scale, log: 0.0, loglog: 0.0 }.times(&omega.asymptotic().pow(-1.0));
    factor.times(&exterior).is_bounded()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn ladder() -> RadialLadder {
        RadialLadder::new(2.0, 24).unwrap()
    }

    #[test]
    fn dini_closed_forms_match_quadrature() {
        let a = E * 2.0;
        let cases = [
            WeightFunction::power(0.5),
            WeightFunction::power_log(0.0, -2.0, a),
            WeightFunction::power_log(0.3, 1.0, a),
            WeightFunction::power_log(0.3, -0.5, a),
        ];
        for w in cases {
            let (c, m) = dini_integral(&w, 2.0, Evaluation::Auto);
            assert_eq!(m, Method::ClosedForm);
            let (q, _) = dini_integral(&w, 2.0, Evaluation::Quadrature);
            assert!((c - q).abs() < 1e-6 * c, "{w:?}: {c} vs {q}");
        }
    }

    #[test]
    fn dini_failures() {
        assert!(!check_dini(&WeightFunction::power(0.0), 2.0, Evaluation::Auto).holds);
        assert!(!check_dini(&WeightFunction::power_log(0.0, -1.0, 2.0 * E), 2.0, Evaluation::Auto).holds);
        assert!(!check_dini(&WeightFunction::power_log(0.0, -1.0, 2.0 * E), 2.0, Evaluation::Quadrature).holds);
        assert!(check_dini(&WeightFunction::power_loglog(0.0, 1.0, 20.0).times_power(0.1), 2.0, Evaluation::Auto).holds);
    }

    #[test]
    fn zygmund_power_pair() {
        let w = WeightFunction::power(0.5);
        let v = check_zygmund_pair(&w, &w, 0.0, &ladder(), Evaluation::Auto);
        assert!(v.holds && (v.best_constant - 2.0).abs() < 1e-12);
        let v = check_zygmund_pair(&w, &WeightFunction::power(1.0), 0.0, &ladder(), Evaluation::Auto);
        assert!(!v.holds);
        let v = check_zygmund_pair(&WeightFunction::power(0.0), &w, 0.0, &ladder(), Evaluation::Auto);
        assert!(!v.holds && v.vacuous);
    }

    #[test]
    fn nontriviality_and_embedding() {
        let l = ladder();
        assert!(check_nontriviality(&WeightFunction::power(0.5), 2.0, 2, &l).holds);
        assert!(!check_nontriviality(&WeightFunction::power(1.5), 2.0, 2, &l).holds);
        let v = check_weighted_embedding(&WeightFunction::power(1.0), &WeightFunction::power(0.5), 2.0, 2, &l);
        assert!(v.holds && (v.best_constant - 1.0).abs() < 1e-12);
        let v = check_weighted_embedding(&WeightFunction::power(1.5), &WeightFunction::power(0.5), 2.0, 2, &l);
        assert!(!v.holds);
    }

    #[test]
    fn membership_by_asymptotics() {
        let w = WeightFunction::power(0.5);
        let g = |s: f64| Some(Asymptotic { power: s, log: 0.0, loglog: 0.0 });
        assert!(complementary_membership(g(1.5), 2.0, 2, &w));
        assert!(!complementary_membership(g(1.6), 2.0, 2, &w));
        assert!(complementary_membership(Some(Asymptotic { power: 1.5, log: -1.0, loglog: 0.0 }), 2.0, 2, &w));
        assert!(!complementary_membership(Some(Asymptotic { power: 1.5, log: 0.0, loglog: 1.0 }), 2.0, 2, &w));
        assert!(complementary_membership(None, 2.0, 2, &w));
        let w = WeightFunction::power_log(0.0, -1.0, 2.0 * E);
        assert!(complementary_membership(g(1.95), 2.0, 2, &w));
    }
}
