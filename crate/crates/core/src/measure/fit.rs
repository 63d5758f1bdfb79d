//! Log-log regression of volumes against scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub log_constant: f64,
    pub with_log_correction: bool,
    pub residual_rms: f64,
    /// `(scale, value)` pairs used, by decreasing scale.
    pub window: Vec<(f64, f64)>,
}

impl ExponentFit {
    /// Fitted model at `scale`.
    pub fn predict(&self, scale: f64) -> f64 {
        let base = (self.log_constant + self.exponent * scale.ln()).exp();
        if self.with_log_correction {
            base * (1.0 / scale).ln()
        } else {
            base
        }
    }
}

/// Ordinary least squares `y = intercept + slope x`; returns
/// `(slope, intercept, residual_rms)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all scales coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}

/// Fits `value ~ C scale^exponent`, or `value ~ C scale^exponent ln(1/scale)`
/// with the logarithm's power pinned to one.
pub fn fit_scaling_exponent(points: &[(f64, f64)], with_log_correction: bool) -> Result<ExponentFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 points, got {}", points.len())));
    }
    if points
        .iter()
        .any(|&(s, v)| !(s > 0.0 && s.is_finite() && v > 0.0 && v.is_finite()))
    {
        return Err(Error::DegenerateFit("scales and values must be positive and finite".into()));
    }
    if with_log_correction && points.iter().any(|&(s, _)| s >= 1.0) {
        return Err(Error::DegenerateFit("log correction needs scales below 1".into()));
    }
    let mut window = points.to_vec();
    window.sort_by(|a, b| b.0.total_cmp(&a.0));
    if window.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::DegenerateFit("repeated scale".into()));
    }
    let span = window[0].0 / window[window.len() - 1].0;
    if span < 100.0 * (1.0 - 1e-12) {
        return Err(Error::DegenerateFit(format!(
            "scales span {:.2} decades, need at least 2",
            span.log10()
        )));
    }
    let xs: Vec<f64> = window.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = window
        .iter()
        .map(|&(s, v)| {
            if with_log_correction {
                v.ln() - (1.0 / s).ln().ln()
            } else {
                v.ln()
            }
        })
        .collect();
    let (exponent, log_constant, residual_rms) = least_squares(&xs, &ys)?;
    Ok(ExponentFit {
        exponent,
        log_constant,
        with_log_correction,
        residual_rms,
        window,
    })
}
