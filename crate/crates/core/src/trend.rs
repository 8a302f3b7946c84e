//! Growth-trend fits on dyadic ladders.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Number of innermost ladder values used by the divergence detector.
pub const WINDOW: usize = 6;

/// Smallest slope of `ln v` against `ln(1/r)` treated as genuine growth.
pub const MIN_SLOPE: f64 = 0.01;

/// One-sided significance level of the slope test.
pub const ALPHA: f64 = 0.01;

/// Ordinary least-squares line `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// `slope / slope_stderr`; infinite for an exact fit with nonzero slope.
    pub t_stat: f64,
    pub r_squared: f64,
}

pub fn ols(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    assert!(xs.len() == ys.len() && xs.len() >= 2, "need at least two points");
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = (xs.len() as f64 - 2.0).max(1.0);
    let slope_stderr = (sse / dof / sxx).sqrt();
    let t_stat = if slope_stderr > 1e-14 * slope.abs() {
        slope / slope_stderr
    } else if slope == 0.0 {
        0.0
    } else {
        slope.signum() * f64::INFINITY
    };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    LinearFit { slope, intercept, slope_stderr, t_stat, r_squared }
}

/// Verdict of the divergence detector on a ladder sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthDiagnostic {
    /// Slope of `ln v` against `ln(1/r)` over the innermost window.
    pub slope: f64,
    pub t_stat: f64,
    pub divergent: bool,
}

/// Critical value of the one-sided slope test with `dof` degrees of freedom.
pub fn t_critical(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64).expect("valid dof").inverse_cdf(1.0 - ALPHA)
}

/// Fits `ln v` against `ln(1/r)` over the innermost [`WINDOW`] points.
///
/// The sequence is declared divergent when the slope exceeds [`MIN_SLOPE`]
/// and is significant under the one-sided t-test. `radii` must be decreasing.
pub fn detect_divergence(radii: &[f64], values: &[f64]) -> GrowthDiagnostic {
    let m = radii.len().min(values.len());
    if m < 3 {
        return GrowthDiagnostic { slope: 0.0, t_stat: 0.0, divergent: false };
    }
    let lo = m.saturating_sub(WINDOW);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in lo..m {
        if values[i] > 0.0 && values[i].is_finite() {
            xs.push(-radii[i].ln());
            ys.push(values[i].ln());
        }
    }
    if xs.len() < 3 {
        return GrowthDiagnostic { slope: 0.0, t_stat: 0.0, divergent: false };
    }
    let fit = ols(&xs, &ys);
    let divergent = fit.slope > MIN_SLOPE && fit.t_stat > t_critical(xs.len() - 2);
    GrowthDiagnostic { slope: fit.slope, t_stat: fit.t_stat, divergent }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladder(k: usize) -> Vec<f64> {
        (0..=k).map(|i| 2.0 * 0.5f64.powi(i as i32)).collect()
    }

    #[test]
    fn ols_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.25 * x).collect();
        let f = ols(&xs, &ys);
        assert!((f.slope + 0.25).abs() < 1e-14 && (f.intercept - 1.5).abs() < 1e-14);
        assert!(f.t_stat == f64::NEG_INFINITY);
    }

    #[test]
    fn t_critical_matches_table() {
        assert!((t_critical(4) - 3.746_947).abs() < 1e-5);
    }

    #[test]
    fn detector_classifies_standard_sequences() {
        let r = ladder(24);
        let grow: Vec<f64> = r.iter().map(|r| r.powf(-0.5)).collect();
        assert!(detect_divergence(&r, &grow).divergent);
        let logg: Vec<f64> = r.iter().map(|r| (4.0 / r).ln()).collect();
        assert!(detect_divergence(&r, &logg).divergent);
        let b = 2.0 * std::f64::consts::E.powf(1.0 + std::f64::consts::E);
        let lnln: Vec<f64> = r.iter().map(|r| (b / r).ln().ln()).collect();
        assert!(detect_divergence(&r, &lnln).divergent);
        let conv: Vec<f64> = r.iter().map(|r| (1.0 - r / 2.0).sqrt()).collect();
        assert!(!detect_divergence(&r, &conv).divergent);
        let flat = vec![3.0; r.len()];
        assert!(!detect_divergence(&r, &flat).divergent);
        let decay: Vec<f64> = r.iter().map(|r| r.powf(0.3)).collect();
        assert!(!detect_divergence(&r, &decay).divergent);
    }
}
