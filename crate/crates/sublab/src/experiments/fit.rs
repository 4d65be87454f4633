use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares power-law fit `m ~ exp(intercept) * p^exponent` in log-log
/// coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub log_intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Fits a line through `(log p, log m)`. Requires at least three strictly
/// positive pairs.
pub fn fit_scaling(pairs: &[(f64, f64)]) -> Result<ScalingFit> {
    if pairs.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "scaling fit needs >= 3 points, got {}",
            pairs.len()
        )));
    }
    for &(p, m) in pairs {
        if !(p > 0.0) || !(m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scaling fit needs positive values, got ({p}, {m})"
            )));
        }
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|&(p, _)| p.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, m)| m.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("scaling fit needs distinct parameters".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = intercept + slope * x;
            (y - fit) * (y - fit)
        })
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(ScalingFit { exponent: slope, log_intercept: intercept, r_squared, n_points: pairs.len() })
}

/// Geometric grid with `points` values from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || points < 2 {
        return Err(Error::InvalidParameter(format!(
            "geometric grid needs 0 < lo < hi and >= 2 points, got [{lo}, {hi}] x {points}"
        )));
    }
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points).map(|i| lo * (ratio * i as f64).exp()).collect())
}
