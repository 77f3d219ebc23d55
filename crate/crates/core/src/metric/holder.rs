//! Empirical bi-Hölder modulus: fit upper/lower exponents of a coordinate
//! map on sampled point pairs, and test a user-supplied α for finite
//! constants across scales.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::Expression;
use crate::germ::{dist, ShellCloud};
use crate::seed::derive_seed;

use super::fit::{fit_power_law, ScalingFit};
use super::MetricError;

/// Per-scale constants required by the two bounds at the checked α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderScale {
    pub r: f64,
    /// max ‖h(x)−h(x')‖ / ‖x−x'‖^α over pairs of this shell
    pub c_upper: f64,
    /// max ‖x−x'‖^{1/α} / ‖h(x)−h(x')‖ over pairs of this shell
    pub c_lower: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderFit {
    /// slope of log ‖h(x)−h(x')‖ vs log ‖x−x'‖
    pub alpha_upper: f64,
    /// smallest L with ‖h(x)−h(x')‖ ≤ L·‖x−x'‖^α̂_upper on all pairs
    pub l_upper: f64,
    /// slope of the swapped fit (log ‖x−x'‖ vs log ‖h(x)−h(x')‖)
    pub alpha_lower: f64,
    /// smallest L with ‖x−x'‖ ≤ L·‖h(x)−h(x')‖^α̂_lower on all pairs
    pub l_lower: f64,
    pub upper_fit: ScalingFit,
    pub lower_fit: ScalingFit,
    /// worst pair under the upper fit: (‖x−x'‖, ‖h(x)−h(x')‖)
    pub worst_pair: (f64, f64),
    pub pair_count: usize,
    /// α the verdict was computed for, when requested
    pub alpha_checked: Option<f64>,
    pub per_scale: Vec<HolderScale>,
    /// growth of the per-scale constants from the largest to the smallest
    /// shell; a genuine bi-α-Hölder map keeps both near 1
    pub growth_upper: f64,
    pub growth_lower: f64,
    pub growth_threshold: f64,
    /// true iff both per-scale constants stay below the growth threshold
    pub verdict: Option<bool>,
}

const GROWTH_THRESHOLD: f64 = 2.0;

/// Evaluate the map on a point; components are Expressions in the ambient
/// coordinates x1..xn.
fn apply(map: &[Expression], x: &[f64]) -> Vec<f64> {
    map.iter()
        .map(|c| c.eval_slice(x).expect("map evaluation failed on sample"))
        .collect()
}

/// Fit Hölder exponents of `map` on same-shell pairs drawn from `clouds`,
/// which must span at least two decades of scale. With `alpha` supplied, a
/// bi-α-Hölder plausibility verdict is included: the constants demanded by
/// both bounds may not grow by more than the threshold across the window.
pub fn holder_modulus_fit(
    map: &[Expression],
    clouds: &[ShellCloud],
    pairs_per_shell: usize,
    alpha: Option<f64>,
    seed: u64,
) -> Result<HolderFit, MetricError> {
    assert!(!map.is_empty() && pairs_per_shell >= 2);
    if let Some(a) = alpha {
        assert!(a > 0.0 && a <= 1.0, "alpha must lie in (0, 1]");
    }
    let mut clouds: Vec<&ShellCloud> = clouds.iter().collect();
    clouds.sort_unstable_by(|a, b| a.r.total_cmp(&b.r));

    let mut pairs: Vec<(f64, f64)> = Vec::new(); // (s, t)
    let mut per_scale = Vec::new();
    for (j, cloud) in clouds.iter().enumerate() {
        if cloud.points.len() < 2 {
            return Err(MetricError::InsufficientPairs {
                r: cloud.r,
                count: cloud.points.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, j as u64));
        let images: Vec<Vec<f64>> = cloud.points.iter().map(|p| apply(map, p)).collect();
        let mut c_upper = 0.0f64;
        let mut c_lower = 0.0f64;
        for _ in 0..pairs_per_shell {
            let a = rng.gen_range(0..cloud.points.len());
            let b = rng.gen_range(0..cloud.points.len());
            if a == b {
                continue;
            }
            let s = dist(&cloud.points[a], &cloud.points[b]);
            let t = dist(&images[a], &images[b]);
            if s == 0.0 || t == 0.0 {
                continue;
            }
            pairs.push((s, t));
            if let Some(al) = alpha {
                c_upper = c_upper.max(t / s.powf(al));
                c_lower = c_lower.max(s.powf(1.0 / al) / t);
            }
        }
        if alpha.is_some() {
            per_scale.push(HolderScale {
                r: cloud.r,
                c_upper,
                c_lower,
            });
        }
    }
    if pairs.len() < 100 {
        return Err(MetricError::DegenerateWindow {
            message: format!("only {} usable pairs, need >= 100", pairs.len()),
        });
    }
    let s_min = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let s_max = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    if s_max / s_min < 100.0 {
        return Err(MetricError::DegenerateWindow {
            message: format!(
                "separations span {:.2} decades, need >= 2",
                (s_max / s_min).log10()
            ),
        });
    }

    let upper_fit = fit_power_law(&pairs)?;
    let swapped: Vec<(f64, f64)> = pairs.iter().map(|&(s, t)| (t, s)).collect();
    let lower_fit = fit_power_law(&swapped)?;
    let alpha_upper = upper_fit.slope;
    let alpha_lower = lower_fit.slope;
    let mut l_upper = 0.0f64;
    let mut l_lower = 0.0f64;
    let mut worst_pair = (0.0, 0.0);
    for &(s, t) in &pairs {
        let c = t / s.powf(alpha_upper);
        if c > l_upper {
            l_upper = c;
            worst_pair = (s, t);
        }
        l_lower = l_lower.max(s / t.powf(alpha_lower));
    }

    let (growth_upper, growth_lower, verdict) = if alpha.is_some() && per_scale.len() >= 2 {
        let k = per_scale.len();
        // constants demanded at the small end vs the large end of the window
        let gu = per_scale[0].c_upper / per_scale[k - 1].c_upper;
        let gl = per_scale[0].c_lower / per_scale[k - 1].c_lower;
        (gu, gl, Some(gu < GROWTH_THRESHOLD && gl < GROWTH_THRESHOLD))
    } else {
        (1.0, 1.0, None)
    };

    Ok(HolderFit {
        alpha_upper,
        l_upper,
        alpha_lower,
        l_lower,
        upper_fit,
        lower_fit,
        worst_pair,
        pair_count: pairs.len(),
        alpha_checked: alpha,
        per_scale,
        growth_upper,
        growth_lower,
        growth_threshold: GROWTH_THRESHOLD,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use crate::germ::{load_germ, sample_shell};

    fn line_clouds(lo_decade: f64, hi_decade: f64, seed: u64) -> Vec<ShellCloud> {
        let germ = load_germ("line").unwrap();
        let shells = ((hi_decade - lo_decade) * 4.0).ceil() as usize;
        (0..=shells)
            .map(|k| {
                let r = 10f64.powf(lo_decade + (hi_decade - lo_decade) * k as f64 / shells as f64);
                sample_shell(&germ, r, 40, 0.15, derive_seed(seed, 50 + k as u64)).unwrap()
            })
            .collect()
    }

    fn map(exprs: &[&str], vars: &[&str]) -> Vec<Expression> {
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        exprs
            .iter()
            .map(|e| parse_expression(e, &vars).unwrap())
            .collect()
    }

    #[test]
    fn identity_on_line_is_bi_lipschitz() {
        let clouds = line_clouds(-3.0, -0.5, 1);
        let m = map(&["x1", "x2"], &["x1", "x2"]);
        let fit = holder_modulus_fit(&m, &clouds, 40, Some(1.0), 5).unwrap();
        assert!((fit.alpha_upper - 1.0).abs() < 1e-9);
        assert!((fit.alpha_lower - 1.0).abs() < 1e-9);
        assert!((fit.l_upper - 1.0).abs() < 1e-9);
        assert!((fit.l_lower - 1.0).abs() < 1e-9);
        assert_eq!(fit.verdict, Some(true));
    }

    #[test]
    fn uniform_dilation_reports_its_constant() {
        let clouds = line_clouds(-3.0, -0.5, 2);
        let m = map(&["2*x1", "2*x2"], &["x1", "x2"]);
        let fit = holder_modulus_fit(&m, &clouds, 40, None, 5).unwrap();
        assert!((fit.alpha_upper - 1.0).abs() < 1e-9);
        assert!((fit.l_upper - 2.0).abs() < 1e-9);
        assert!((fit.l_lower - 0.5).abs() < 1e-9);
    }

    #[test]
    fn log_graph_map_is_alpha_holder_below_one_but_not_lipschitz() {
        // h(x) = (x, |x log|x||) applied to the line in R^2
        let clouds = line_clouds(-5.0, -2.0, 3);
        let m = map(&["x1", "abs(x1*log(abs(x1)))"], &["x1", "x2"]);
        for alpha in [0.5, 0.7, 0.9] {
            let fit = holder_modulus_fit(&m, &clouds, 40, Some(alpha), 5).unwrap();
            assert_eq!(fit.verdict, Some(true), "alpha {alpha}: {fit:?}");
        }
        let fit = holder_modulus_fit(&m, &clouds, 40, Some(1.0), 5).unwrap();
        assert_eq!(fit.verdict, Some(false));
        assert!(
            fit.growth_upper >= 2.0,
            "Lipschitz constant growth {}",
            fit.growth_upper
        );
    }

    #[test]
    fn narrow_windows_are_rejected() {
        // plenty of pairs, but every separation is exactly 0.01
        let clouds: Vec<ShellCloud> = (0..60)
            .map(|k| ShellCloud {
                germ: "synthetic".into(),
                r: 0.5,
                width: 0.1,
                seed: k,
                points: vec![vec![0.5, 0.0], vec![0.5, 0.01]],
            })
            .collect();
        let m = map(&["x1", "x2"], &["x1", "x2"]);
        assert!(matches!(
            holder_modulus_fit(&m, &clouds, 10, None, 5),
            Err(MetricError::DegenerateWindow { .. })
        ));

        // too few pairs
        let short = line_clouds(-2.0, -1.0, 4);
        let m2 = map(&["x1", "x2"], &["x1", "x2"]);
        assert!(matches!(
            holder_modulus_fit(&m2, &short, 3, None, 5),
            Err(MetricError::DegenerateWindow { .. })
        ));
    }
}
