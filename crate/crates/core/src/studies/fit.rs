use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through `(log x, log y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub log_x: Vec<f64>,
    pub log_y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Largest `|log y - (intercept + slope log x)|`.
    pub max_residual: f64,
}

/// Fits `y ~ C x^slope` to at least three points with positive coordinates.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::RateFit(format!("need at least 3 points, got {}", points.len())));
    }
    for &(x, y) in points {
        if !(x > 0.0 && x.is_finite() && y > 0.0 && y.is_finite()) {
            return Err(Error::RateFit(format!("log undefined at ({x}, {y})")));
        }
    }
    let log_x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let log_y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = points.len() as f64;
    let mx = log_x.iter().sum::<f64>() / n;
    let my = log_y.iter().sum::<f64>() / n;
    let sxx: f64 = log_x.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 1e-24 * (1.0 + mx * mx)) {
        return Err(Error::RateFit("abscissae are degenerate".into()));
    }
    let sxy: f64 = log_x.iter().zip(&log_y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = log_x
        .iter()
        .zip(&log_y)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        log_x,
        log_y,
        slope,
        intercept,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0].iter().map(|&c: &f64| (c, 7.0 * c.powi(-2))).collect();
        let fit = fit_rate(&pts).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-10);
        assert!((fit.intercept - 7f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 0.1)]).is_err());
        assert!(fit_rate(&[(2.0, 1.0), (2.0, 0.5), (2.0, 0.1)]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_any_slope(slope in -8.0f64..8.0, scale in 0.01f64..100.0) {
            let pts: Vec<(f64, f64)> = (1..6).map(|i| {
                let x = 1.5f64.powi(i);
                (x, scale * x.powf(slope))
            }).collect();
            let fit = fit_rate(&pts).unwrap();
            prop_assert!((fit.slope - slope).abs() < 1e-9);
            prop_assert!(fit.max_residual < 1e-9);
        }
    }
}
