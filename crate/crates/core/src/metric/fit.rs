//! Log-log least squares: the one fit object every exponent estimate in the
//! crate reports.

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Result of a least-squares fit of `log t` against `log s`. The slope is
/// the exponent, the intercept the log of the constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_max: f64,
    pub r2: f64,
    pub sample_count: usize,
    /// [s_min, s_max] of the fitted window
    pub window: (f64, f64),
}

/// Fit `t ~ C * s^beta` on positive pairs spanning at least one decade.
pub fn fit_power_law(pairs: &[(f64, f64)]) -> Result<ScalingFit, MetricError> {
    if pairs.len() < 10 {
        return Err(MetricError::DegenerateWindow {
            message: format!("need at least 10 pairs, got {}", pairs.len()),
        });
    }
    let mut s_min = f64::INFINITY;
    let mut s_max = 0.0f64;
    for &(s, t) in pairs {
        assert!(s > 0.0 && t > 0.0, "fit_power_law needs positive data");
        s_min = s_min.min(s);
        s_max = s_max.max(s);
    }
    if s_max / s_min < 10.0 {
        return Err(MetricError::DegenerateWindow {
            message: format!("window spans {:.3} decades, need >= 1", (s_max / s_min).log10()),
        });
    }
    let n = pairs.len() as f64;
    let logs: Vec<(f64, f64)> = pairs.iter().map(|&(s, t)| (s.ln(), t.ln())).collect();
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in &logs {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut residual_max = 0.0f64;
    let mut ss_res = 0.0;
    for &(x, y) in &logs {
        let r = y - (intercept + slope * x);
        residual_max = residual_max.max(r.abs());
        ss_res += r * r;
    }
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(ScalingFit {
        slope,
        intercept,
        residual_max,
        r2,
        sample_count: pairs.len(),
        window: (s_min, s_max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_series_fits_exactly() {
        let pairs: Vec<(f64, f64)> = (0..12).map(|k| (0.5f64.powi(k), 0.5f64.powi(k))).collect();
        let fit = fit_power_law(&pairs).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!(fit.residual_max < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_power_law_recovers_slope_and_constant() {
        let pairs: Vec<(f64, f64)> = (0..15)
            .map(|k| {
                let s = 0.5f64.powi(k);
                (s, 3.0 * s.sqrt())
            })
            .collect();
        let fit = fit_power_law(&pairs).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept.exp() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_corrected_series_drifts_below_one() {
        // t = s |ln s| on a log-spaced grid over [1e-6, 1e-2]: the fitted
        // slope sits below 1 and the residual grows with the window.
        let grid = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
            (0..=40)
                .map(|k| {
                    let s = 10f64.powf(lo + (hi - lo) * k as f64 / 40.0);
                    (s, s * s.ln().abs())
                })
                .collect()
        };
        let fit = fit_power_law(&grid(-6.0, -2.0)).unwrap();
        assert!((fit.slope - 0.884979).abs() < 1e-3, "slope {}", fit.slope);
        let narrow = fit_power_law(&grid(-3.8, -3.0)).unwrap_err();
        assert!(matches!(narrow, MetricError::DegenerateWindow { .. }));
        let wide = fit_power_law(&grid(-8.0, -2.0)).unwrap();
        let mid = fit_power_law(&grid(-5.0, -3.0)).unwrap();
        assert!(wide.residual_max > mid.residual_max);
    }

    #[test]
    fn slope_is_invariant_under_rescaling() {
        let pairs: Vec<(f64, f64)> = (0..20)
            .map(|k| {
                let s = 0.7f64.powi(k);
                (s, 2.0 * s.powf(1.3))
            })
            .collect();
        let base = fit_power_law(&pairs).unwrap();
        let scaled: Vec<(f64, f64)> =
            pairs.iter().map(|&(s, t)| (5.0 * s, 0.25 * t)).collect();
        let rescaled = fit_power_law(&scaled).unwrap();
        assert!((base.slope - rescaled.slope).abs() < 1e-12);
        let expected_shift = 0.25f64.ln() - base.slope * 5.0f64.ln();
        assert!((rescaled.intercept - base.intercept - expected_shift).abs() < 1e-9);
    }

    #[test]
    fn short_windows_are_rejected() {
        let pairs: Vec<(f64, f64)> = (0..12).map(|k| (1.0 + k as f64 * 0.1, 1.0)).collect();
        assert!(matches!(
            fit_power_law(&pairs),
            Err(MetricError::DegenerateWindow { .. })
        ));
        assert!(matches!(
            fit_power_law(&[(1.0, 1.0); 5]),
            Err(MetricError::DegenerateWindow { .. })
        ));
    }
}
