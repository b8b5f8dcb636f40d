//! Straight-line fits on logarithmic axes.

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Ordinary least-squares line `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residual scatter.
    pub slope_error: f64,
    pub points: usize,
}

/// Fits a line to `(x, y)` pairs. Needs at least `min_points` pairs (and never fewer than 2).
pub fn linear_fit(x: &[f64], y: &[f64], min_points: usize) -> Result<LineFit> {
    assert_eq!(x.len(), y.len());
    let need = min_points.max(2);
    let n = x.len();
    if n < need {
        return Err(Error::TooFewPoints { got: n, need });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter("fit abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_error = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_error,
        points: n,
    })
}

/// Fits `ln y = c + s ln x`. Every value must be positive.
pub fn log_log_fit(x: &[f64], y: &[f64], min_points: usize) -> Result<LineFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("log-log fit needs positive finite values"));
    }
    let lx: alloc::vec::Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: alloc::vec::Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly, min_points)
}
