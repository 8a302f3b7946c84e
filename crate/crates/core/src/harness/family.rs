//! The fixed test family used by the operator experiments.
//!
//! Version 1: ten closed-form fields and two seeded lattice fields. Power
//! exponents are quoted for `n = 2` and scaled by `n/2` in other dimensions.

use crate::field::{LatticeField, ScalarField};
use crate::geometry::{axpy, DomainSpec};
use crate::profile::RadialProfile;
use crate::Result;

pub const FAMILY_VERSION: u32 = 1;

/// A named member of the test family.
#[derive(Clone, Debug, PartialEq)]
pub struct TestField {
    pub name: &'static str,
    pub field: ScalarField,
}

/// The twelve-member family about `x0`.
pub fn test_family(dom: &DomainSpec, seed: u64) -> Result<Vec<TestField>> {
    let n = dom.dim() as f64;
    let k = n / 2.0;
    let x0 = dom.x0();
    let ell = dom.ell();
    let delta = dom.boundary_distance(&x0);
    let radial = |p: RadialProfile| ScalarField::radial(x0, p);
    let mut e1 = [0.0; 3];
    e1[0] = 1.0;
    let fam = vec![
        TestField { name: "one", field: ScalarField::Constant(1.0) },
        TestField { name: "pow_p0.5", field: radial(RadialProfile::power(0.5 * k)) },
        TestField { name: "pow_m0.5", field: radial(RadialProfile::power(-0.5 * k)) },
        TestField { name: "pow_m1.0", field: radial(RadialProfile::power(-k)) },
        TestField { name: "pow_m1.4", field: radial(RadialProfile::power(-1.4 * k)) },
        TestField { name: "pow_m1.95", field: radial(RadialProfile::power(-1.95 * k)) },
        TestField { name: "powlog_m1.0", field: radial(RadialProfile::power_log(-k, 1.0, std::f64::consts::E * ell)) },
        TestField {
            name: "loglog",
            field: radial(RadialProfile::power_loglog(0.0, 1.0, std::f64::consts::E.powf(1.0 + std::f64::consts::E) * ell)),
        },
        TestField { name: "bump_center", field: ScalarField::Indicator { center: x0, radius: 0.25 * delta, value: 1.0 } },
        TestField {
            name: "bump_offset",
            field: ScalarField::Indicator { center: axpy(&x0, 0.5 * delta, &e1), radius: 0.25 * delta, value: 1.0 },
        },
        TestField { name: "lattice_a", field: ScalarField::Lattice(LatticeField::random(dom, 6, seed)?) },
        TestField { name: "lattice_b", field: ScalarField::Lattice(LatticeField::random(dom, 6, seed.wrapping_add(1))?) },
    ];
    Ok(fam)
}

/// The counterexamples `|x - x0|^{-s}` and `ln ln(B/|x - x0|)·|x - x0|^{-s}`
/// with `s = n/p + λ/p'` and `B = e·e^e·ℓ`.
pub fn counterexamples(dom: &DomainSpec, p: f64, lambda: f64) -> (TestField, TestField) {
    let n = dom.dim() as f64;
    let pc = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    let s = n / p + if pc.is_infinite() { 0.0 } else { lambda / pc };
    let x0 = dom.x0();
    let b = g_scale(dom);
    (
        TestField { name: "counterexample_f", field: ScalarField::power(x0, -s) },
        TestField { name: "counterexample_g", field: ScalarField::radial(x0, RadialProfile::power_loglog(-s, 1.0, b)) },
    )
}

/// `B = e·e^e·ℓ` for the log-log counterexample.
pub fn g_scale(dom: &DomainSpec) -> f64 {
    std::f64::consts::E * std::f64::consts::E.powf(std::f64::consts::E) * dom.ell()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_is_fixed_and_seeded() {
        let dom = DomainSpec::unit_ball(2);
        let a = test_family(&dom, 3).unwrap();
        let b = test_family(&dom, 3).unwrap();
        assert_eq!(a.len(), 12);
        assert_eq!(a, b);
        let c = test_family(&dom, 4).unwrap();
        assert_ne!(a[10], c[10]);
        let names: std::collections::BTreeSet<_> = a.iter().map(|t| t.name).collect();
        assert_eq!(names.len(), 12);
    }
}
