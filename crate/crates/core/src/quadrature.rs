//! One-dimensional quadrature rules.
//!
//! Gauss–Kronrod 15 with embedded Gauss 7 error estimates, Gauss–Legendre
//! rules of arbitrary order, adaptive integration on finite intervals and an
//! improper integrator on `[u0, ∞)` working on doubling intervals.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

/// Gauss weights for the Kronrod nodes with odd index (1, 3, 5, 7 from the edge).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// A rule on `[0, 1]` with an optional embedded lower-order weight set.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Weights of the embedded lower-order rule (equal to `weights` when none exists).
    pub weights_lo: Vec<f64>,
}

/// Choice of radial rule used inside each dyadic band.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Kronrod15,
    Gauss(usize),
}

impl Rule {
    pub fn new(kind: RuleKind) -> Rule {
        match kind {
            RuleKind::Kronrod15 => Rule::kronrod15(),
            RuleKind::Gauss(m) => Rule::gauss(m),
        }
    }

    pub fn kronrod15() -> Rule {
        let mut nodes = Vec::with_capacity(15);
        let mut weights = Vec::with_capacity(15);
        let mut weights_lo = Vec::with_capacity(15);
        for i in 0..15 {
            let (j, sign) = if i < 8 { (i, -1.0) } else { (14 - i, 1.0) };
            nodes.push(0.5 + 0.5 * sign * XGK[j]);
            weights.push(0.5 * WGK[j]);
            weights_lo.push(if j % 2 == 1 { 0.5 * WG[j / 2] } else { 0.0 });
        }
        Rule { nodes, weights, weights_lo }
    }

    pub fn gauss(m: usize) -> Rule {
        let (x, w) = gauss_legendre(m);
        let nodes: Vec<f64> = x.iter().map(|t| 0.5 + 0.5 * t).collect();
        let weights: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
        Rule { nodes, weights_lo: weights.clone(), weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "rule order must be positive");
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (z * pm - pm1) / (z * z - 1.0);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

/// One GK15 panel on `[a, b]`: returns (Kronrod value, |K − G|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let s = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive GK15 integration of `f` over `[a, b]`.
///
/// Returns `(value, error_estimate)`. Subdivision stops once the summed
/// estimate is below `max(abs_tol, rel_tol·|value|)` or after `max_panels`.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    const MAX_PANELS: usize = 2000;
    let (v0, e0) = gk15(f, a, b);
    let mut panels = vec![(a, b, v0, e0)];
    let mut value = v0;
    let mut error = e0;
    while error > abs_tol.max(rel_tol * value.abs()) && panels.len() < MAX_PANELS {
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, v, e) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            panels.push((lo, hi, v, e));
            break;
        }
        let (vl, el) = gk15(f, lo, mid);
        let (vr, er) = gk15(f, mid, hi);
        value += vl + vr - v;
        error += el + er - e;
        panels.push((lo, mid, vl, el));
        panels.push((mid, hi, vr, er));
    }
    let value: f64 = panels.iter().map(|p| p.2).sum();
    let error: f64 = panels.iter().map(|p| p.3).sum();
    (value, error + 1e-15 * value.abs())
}

/// Outcome of an improper integral on `[u0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    Converged { value: f64, error: f64 },
    Divergent { partial: f64, last_ratio: f64 },
}

impl Tail {
    pub fn value(&self) -> Option<f64> {
        match self {
            Tail::Converged { value, .. } => Some(*value),
            Tail::Divergent { .. } => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Tail::Divergent { .. })
    }
}

/// Maximum number of doubling intervals examined by [`improper`].
pub const MAX_DOUBLINGS: usize = 200;

/// Integrates a non-negative `f` over `[u0, ∞)`.
///
/// The half-line is cut into intervals of width `2^j`; each is integrated
/// adaptively. Once the ratios of successive interval contributions settle
/// below one, the remaining tail is extrapolated geometrically. Ratios that
/// stay at or above one mark the integral as divergent.
pub fn improper<F: Fn(f64) -> f64>(f: &F, u0: f64) -> Tail {
    let mut sum = 0.0;
    let mut err = 0.0;
    let mut terms: Vec<f64> = Vec::new();
    let mut prev_tail: Option<f64> = None;
    let mut last_ratio = f64::NAN;
    for j in 0..MAX_DOUBLINGS {
        let a = u0 + (2f64.powi(j as i32) - 1.0);
        let b = u0 + (2f64.powi(j as i32 + 1) - 1.0);
        let (t, e) = adaptive(f, a, b, 1e-300, 1e-11);
        if !t.is_finite() {
            return Tail::Divergent { partial: sum, last_ratio: f64::INFINITY };
        }
        sum += t;
        err += e;
        terms.push(t);
        if !sum.is_finite() {
            return Tail::Divergent { partial: sum, last_ratio: f64::INFINITY };
        }
        if j < 3 {
            continue;
        }
        let n = terms.len();
        if t == 0.0 && terms[n - 2] == 0.0 {
            return Tail::Converged { value: sum, error: err };
        }
        if terms[n - 2] == 0.0 {
            continue;
        }
        let ratio = t / terms[n - 2];
        last_ratio = ratio;
        if t.abs() <= 1e-15 * sum.abs() && terms[n - 2].abs() <= 1e-13 * sum.abs() {
            return Tail::Converged { value: sum, error: err + t.abs() };
        }
        let settled_below = (0..5.min(n - 1)).all(|i| {
            let (x, y) = (terms[n - 1 - i], terms[n - 2 - i]);
            y != 0.0 && x / y < 0.999
        });
        if settled_below {
            let tail = t * ratio / (1.0 - ratio);
            if let Some(pt) = prev_tail {
                let drift = (tail - pt).abs();
                if drift <= 1e-9 * (sum + tail).abs() || (j >= 60 && drift <= 1e-4 * (sum + tail).abs()) {
                    return Tail::Converged { value: sum + tail, error: err + drift };
                }
            }
            prev_tail = Some(tail);
        } else {
            prev_tail = None;
        }
        if j >= 40 && (0..8).all(|i| terms[n - 1 - i] >= terms[n - 2 - i] * (1.0 - 1e-9)) {
            return Tail::Divergent { partial: sum, last_ratio: ratio };
        }
    }
    if last_ratio < 1.0 {
        if let Some(pt) = prev_tail {
            return Tail::Converged { value: sum + pt, error: err + pt.abs() };
        }
    }
    Tail::Divergent { partial: sum, last_ratio }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for m in 1..12 {
            let (x, w) = gauss_legendre(m);
            for deg in 0..(2 * m) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "m={m} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn kronrod_rule_and_embedded_gauss_are_exact_on_polynomials() {
        let r = Rule::kronrod15();
        let wsum: f64 = r.weights.iter().sum();
        let wlo: f64 = r.weights_lo.iter().sum();
        assert!((wsum - 1.0).abs() < 1e-14);
        assert!((wlo - 1.0).abs() < 1e-14);
        let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(20)).sum();
        assert!((q - 1.0 / 21.0).abs() < 1e-14);
        let q: f64 = r.nodes.iter().zip(&r.weights_lo).map(|(x, w)| w * x.powi(12)).sum();
        assert!((q - 1.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let (v, e) = adaptive(&|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12, 1e-10);
        assert!((v - 2.0).abs() < 1e-8, "v={v} e={e}");
    }

    #[test]
    fn improper_power_tail_converges() {
        let t = improper(&|u: f64| (1.0 + u).powf(-2.5), 0.0);
        let v = t.value().unwrap();
        assert!((v - 1.0 / 1.5).abs() < 1e-7, "v={v}");
    }

    #[test]
    fn improper_exponential_tail_converges() {
        let v = improper(&|u: f64| (-2.0 * u).exp(), 1.0).value().unwrap();
        assert!((v - (-2.0f64).exp() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn improper_slow_tail_is_extrapolated() {
        let t = improper(&|u: f64| (2.0 + u).powf(-1.1), 0.0);
        let v = t.value().unwrap();
        let exact = 2f64.powf(-0.1) / 0.1;
        assert!((v - exact).abs() / exact < 1e-3, "v={v} exact={exact}");
    }

    #[test]
    fn improper_detects_divergence() {
        assert!(improper(&|_u: f64| 1.0, 0.0).is_divergent());
        assert!(improper(&|u: f64| 1.0 / (1.0 + u), 0.0).is_divergent());
    }
}
