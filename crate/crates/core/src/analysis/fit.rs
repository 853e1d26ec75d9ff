//! Least-squares rate fits on log-error curves.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Errors at or below this value are dropped before taking logarithms.
pub const ERROR_FLOOR: f64 = 1e-300;

/// Minimum number of usable points for a fit.
pub const MIN_FIT_POINTS: usize = 4;

/// Default fraction of the K-grid treated as burn-in.
pub const DEFAULT_BURN_IN: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `log e = slope · log K + intercept`.
    Poly,
    /// `log e = slope · K + intercept`.
    Exp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    /// Fitted slope: the negated rate exponent for `Poly`, the log-rate per
    /// unit of K for `Exp`.
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r_squared: f64,
    /// Sum of squared residuals in log space.
    pub residual_ss: f64,
    /// Smallest and largest K used.
    pub k_range: (f64, f64),
    pub points: usize,
    /// Points dropped for being at or below [`ERROR_FLOOR`].
    pub dropped: usize,
}

/// Ordinary least squares `y ≈ slope·x + intercept`. Returns
/// `(slope, intercept, r², residual sum of squares)`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    // A constant response is fitted perfectly.
    let r2 = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    (slope, intercept, r2.clamp(0.0, 1.0), rss)
}

fn fit(model: RateModel, ks: &[f64], errors: &[f64]) -> Result<RateFit> {
    if ks.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: ks.len(),
            got: errors.len(),
        });
    }
    let mut xs = Vec::with_capacity(ks.len());
    let mut ys = Vec::with_capacity(ks.len());
    let mut used_k = Vec::with_capacity(ks.len());
    for (&k, &e) in ks.iter().zip(errors) {
        if e.is_finite() && e > ERROR_FLOOR && k > 0.0 {
            xs.push(match model {
                RateModel::Poly => k.ln(),
                RateModel::Exp => k,
            });
            ys.push(e.ln());
            used_k.push(k);
        }
    }
    let dropped = ks.len() - xs.len();
    if dropped > 0 {
        log::warn!("rate fit dropped {dropped} non-positive or non-finite error values");
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::NotEnoughPoints {
            needed: MIN_FIT_POINTS,
            got: xs.len(),
        });
    }
    let (slope, intercept, r_squared, residual_ss) = linear_regression(&xs, &ys);
    let lo = used_k.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = used_k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RateFit {
        model,
        slope,
        intercept,
        r_squared,
        residual_ss,
        k_range: (lo, hi),
        points: xs.len(),
        dropped,
    })
}

/// Slope of `log(error)` against `log K`.
pub fn fit_poly_rate(ks: &[f64], errors: &[f64]) -> Result<RateFit> {
    fit(RateModel::Poly, ks, errors)
}

/// Slope of `log(error)` against `K`.
pub fn fit_exp_rate(ks: &[f64], errors: &[f64]) -> Result<RateFit> {
    fit(RateModel::Exp, ks, errors)
}

/// Number of leading grid points treated as burn-in: `ceil(fraction · len)`.
pub fn burn_in_len(len: usize, fraction: f64) -> usize {
    ((fraction * len as f64).ceil() as usize).min(len)
}

/// Poly fit after discarding the burn-in prefix.
pub fn fit_poly_after_burn_in(ks: &[f64], errors: &[f64], fraction: f64) -> Result<RateFit> {
    let skip = burn_in_len(ks.len(), fraction);
    fit_poly_rate(&ks[skip..], &errors[skip..])
}

/// Fits both models and returns the one with the smaller residual sum of
/// squares in log space, followed by both fits.
pub fn select_model(ks: &[f64], errors: &[f64]) -> Result<(RateModel, RateFit, RateFit)> {
    let poly = fit_poly_rate(ks, errors)?;
    let exp = fit_exp_rate(ks, errors)?;
    let winner = if exp.residual_ss <= poly.residual_ss {
        RateModel::Exp
    } else {
        RateModel::Poly
    };
    Ok((winner, poly, exp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        [8.0, 16.0, 32.0, 64.0, 128.0, 256.0].to_vec()
    }

    #[test]
    fn exact_power_law() {
        let ks = grid();
        let e: Vec<f64> = ks.iter().map(|k| 7.0 / (k * k)).collect();
        let f = fit_poly_rate(&ks, &e).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-9);
        assert!((f.intercept - 7f64.ln()).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_errors_have_zero_slope() {
        let ks = grid();
        let f = fit_poly_rate(&ks, &[0.3; 6]).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn exact_exponential() {
        let ks: Vec<f64> = (1..=20).map(f64::from).collect();
        let e: Vec<f64> = ks.iter().map(|k| (-0.3 * k).exp()).collect();
        let f = fit_exp_rate(&ks, &e).unwrap();
        assert!((f.slope + 0.3).abs() < 1e-9);
        assert_eq!(select_model(&ks, &e).unwrap().0, RateModel::Exp);
        let p: Vec<f64> = ks.iter().map(|k| k.powf(-1.5)).collect();
        assert_eq!(select_model(&ks, &p).unwrap().0, RateModel::Poly);
    }

    #[test]
    fn zeros_are_dropped() {
        let ks = grid();
        let mut e: Vec<f64> = ks.iter().map(|k| 1.0 / k).collect();
        e[0] = 0.0;
        let f = fit_poly_rate(&ks, &e).unwrap();
        assert_eq!(f.dropped, 1);
        assert_eq!(f.k_range, (16.0, 256.0));
        e[1] = 0.0;
        e[2] = -1.0;
        assert!(matches!(
            fit_poly_rate(&ks, &e),
            Err(Error::NotEnoughPoints { .. })
        ));
    }

    #[test]
    fn burn_in_rounds_up() {
        assert_eq!(burn_in_len(6, 0.25), 2);
        assert_eq!(burn_in_len(8, 0.25), 2);
        assert_eq!(burn_in_len(0, 0.25), 0);
    }
}
