//! Radial profiles `c·r^s·ln(A/r)^m·(ln ln(B/r))^k`.

use crate::{Error, Result};

/// A radial profile `c·r^s·ln(A/r)^m·(ln ln(B/r))^k`.
///
/// Factors with zero exponent are ignored, so their scales are irrelevant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialProfile {
    pub coef: f64,
    pub power: f64,
    pub log_pow: f64,
    pub log_scale: f64,
    pub loglog_pow: f64,
    pub loglog_scale: f64,
}

impl RadialProfile {
    pub fn constant(c: f64) -> RadialProfile {
        RadialProfile { coef: c, power: 0.0, log_pow: 0.0, log_scale: 1.0, loglog_pow: 0.0, loglog_scale: 1.0 }
    }

    pub fn power(s: f64) -> RadialProfile {
        RadialProfile { power: s, ..RadialProfile::constant(1.0) }
    }

    pub fn power_log(s: f64, m: f64, a: f64) -> RadialProfile {
        RadialProfile { power: s, log_pow: m, log_scale: a, ..RadialProfile::constant(1.0) }
    }

    pub fn power_loglog(s: f64, k: f64, b: f64) -> RadialProfile {
        RadialProfile { power: s, loglog_pow: k, loglog_scale: b, ..RadialProfile::constant(1.0) }
    }

    pub fn scaled(mut self, c: f64) -> RadialProfile {
        self.coef *= c;
        self
    }

    /// Checks that the logarithmic factors are positive on `(0, r_max]`.
    pub fn validate(&self, r_max: f64) -> Result<()> {
        if self.log_pow != 0.0 && !(self.log_scale > r_max) {
            return Err(Error::InvalidField(format!("log scale {} must exceed {r_max}", self.log_scale)));
        }
        if self.loglog_pow != 0.0 && !(self.loglog_scale > r_max * std::f64::consts::E) {
            return Err(Error::InvalidField(format!("loglog scale {} must exceed e·{r_max}", self.loglog_scale)));
        }
        if !self.coef.is_finite() || !self.power.is_finite() {
            return Err(Error::InvalidField("non-finite profile parameters".into()));
        }
        Ok(())
    }

    /// Value at radius `r > 0`.
    pub fn value(&self, r: f64) -> f64 {
        if self.coef == 0.0 {
            return 0.0;
        }
        let mut v = self.coef;
        if self.power != 0.0 {
            v *= r.powf(self.power);
        }
        if self.log_pow != 0.0 {
            v *= (self.log_scale / r).ln().powf(self.log_pow);
        }
        if self.loglog_pow != 0.0 {
            v *= (self.loglog_scale / r).ln().ln().powf(self.loglog_pow);
        }
        v
    }

    /// `ln|value|` at `r = e^{-u}`, stable for large `u`.
    pub fn ln_abs_u(&self, u: f64) -> f64 {
        self.ln_abs_rest_u(u) - self.power * u
    }

    /// `ln|value| + power·u` at `r = e^{-u}`: the logarithm without its linear part.
    pub fn ln_abs_rest_u(&self, u: f64) -> f64 {
        if self.coef == 0.0 {
            return f64::NEG_INFINITY;
        }
        let mut v = self.coef.abs().ln();
        if self.log_pow != 0.0 {
            v += self.log_pow * (self.log_scale.ln() + u).ln();
        }
        if self.loglog_pow != 0.0 {
            v += self.loglog_pow * (self.loglog_scale.ln() + u).ln().ln();
        }
        v
    }

    /// Product of two profiles when their logarithmic scales are compatible.
    pub fn mul(&self, o: &RadialProfile) -> Option<RadialProfile> {
        let log_scale = merge_scale(self.log_pow, self.log_scale, o.log_pow, o.log_scale)?;
        let loglog_scale = merge_scale(self.loglog_pow, self.loglog_scale, o.loglog_pow, o.loglog_scale)?;
        Some(RadialProfile {
            coef: self.coef * o.coef,
            power: self.power + o.power,
            log_pow: self.log_pow + o.log_pow,
            log_scale,
            loglog_pow: self.loglog_pow + o.loglog_pow,
            loglog_scale,
        })
    }

    /// `|profile|^q` (coefficient replaced by its absolute value).
    pub fn abs_pow(&self, q: f64) -> RadialProfile {
        RadialProfile {
            coef: self.coef.abs().powf(q),
            power: self.power * q,
            log_pow: self.log_pow * q,
            log_scale: self.log_scale,
            loglog_pow: self.loglog_pow * q,
            loglog_scale: self.loglog_scale,
        }
    }

    /// Growth exponents `(a, b, c)` of `r^a·ln^b·lnln^c` as `r → 0`, in terms of `1/r`.
    pub fn asymptotic(&self) -> Asymptotic {
        Asymptotic { power: -self.power, log: self.log_pow, loglog: self.loglog_pow }
    }
}

fn merge_scale(p1: f64, s1: f64, p2: f64, s2: f64) -> Option<f64> {
    if p1 == 0.0 {
        Some(s2)
    } else if p2 == 0.0 || s1 == s2 {
        Some(s1)
    } else {
        None
    }
}

/// Behaviour `(1/r)^power·ln(1/r)^log·lnln(1/r)^loglog` as `r → 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Asymptotic {
    pub power: f64,
    pub log: f64,
    pub loglog: f64,
}

impl Asymptotic {
    pub const BOUNDED: Asymptotic = Asymptotic { power: 0.0, log: 0.0, loglog: 0.0 };

    pub fn times(&self, o: &Asymptotic) -> Asymptotic {
        Asymptotic { power: self.power + o.power, log: self.log + o.log, loglog: self.loglog + o.loglog }
    }

    pub fn pow(&self, q: f64) -> Asymptotic {
        Asymptotic { power: self.power * q, log: self.log * q, loglog: self.loglog * q }
    }

    /// Whether the expression stays bounded as `r → 0`.
    pub fn is_bounded(&self) -> bool {
        const TOL: f64 = 1e-12;
        if self.power.abs() > TOL {
            return self.power < 0.0;
        }
        if self.log.abs() > TOL {
            return self.log < 0.0;
        }
        self.loglog <= TOL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_form_matches_direct_value() {
        let p = RadialProfile { coef: -2.0, power: -1.5, log_pow: 1.0, log_scale: 5.0, loglog_pow: 2.0, loglog_scale: 20.0 };
        for r in [0.9, 0.1, 1e-4] {
            let u = -f64::ln(r);
            assert!((p.ln_abs_u(u) - p.value(r).abs().ln()).abs() < 1e-12);
        }
        assert!(p.ln_abs_u(1e6).is_finite());
    }

    #[test]
    fn asymptotic_classification() {
        assert!(Asymptotic { power: -0.1, log: 5.0, loglog: 0.0 }.is_bounded());
        assert!(!Asymptotic { power: 0.0, log: 0.1, loglog: -3.0 }.is_bounded());
        assert!(Asymptotic { power: 0.0, log: 0.0, loglog: 0.0 }.is_bounded());
        assert!(!Asymptotic { power: 0.0, log: 0.0, loglog: 1.0 }.is_bounded());
    }
}
