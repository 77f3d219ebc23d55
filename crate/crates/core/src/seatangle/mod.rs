//! Sea-tangle neighborhoods `ST_d(X, C) = {x : dist(x, X) <= C |x|^d}`:
//! membership against a distance oracle, Monte Carlo volumes, the volume
//! scaling law, and the tangent-cone dimension estimator built on it.

mod checks;

pub use checks::{
    holder_inclusion_check, shell_volume_ratio_check, st_equivalence_check,
    volume_distortion_check, EquivalenceEntry, EquivalenceReport, InclusionReport,
    ShellRatioReport, VolumeDistortionReport,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::germ::{ball_point, build_oracle, norm, DistanceOracle, GermError, GermSpec};
use crate::metric::{fit_power_law, MetricError, ScalingFit};
use crate::seed::derive_seed;

/// Degree and width of a sea-tangle neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct STParams {
    /// degree; must exceed 1 so the horn pinches at the origin
    pub d: f64,
    /// width constant
    pub c: f64,
}

impl STParams {
    pub fn new(d: f64, c: f64) -> STParams {
        assert!(d > 1.0, "sea-tangle degree must exceed 1");
        assert!(c > 0.0, "sea-tangle width must be positive");
        STParams { d, c }
    }
}

/// One Monte Carlo volume estimate at a fixed radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeSample {
    pub r: f64,
    pub hits: u64,
    pub trials: u64,
    /// `(hits / trials) * vol_n(B(0, r))`
    pub estimate: f64,
    /// binomial standard error, in volume units
    pub stderr: f64,
    /// trials classified by radial cone extrapolation because they fell
    /// below the oracle's coverage (bounded, reported bias)
    pub extrapolated: u64,
}

/// Scaling fit over a radius ladder together with its volume series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeScaling {
    pub fit: ScalingFit,
    pub samples: Vec<VolumeSample>,
    pub st: STParams,
}

/// Tangent-cone dimension from the inverted volume law
/// `vol ~ r^(n + (d-1)(n-a))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub exponent: ScalingFit,
    /// `n - (slope - n) / (d - 1)`
    pub a_real: f64,
    pub a_rounded: i64,
    /// `|a_real - a_rounded|`; above 0.35 the estimate is ambiguous
    pub ambiguity: f64,
    pub ambient_dim: usize,
    pub st: STParams,
}

#[derive(Debug, Error)]
pub enum SeaTangleError {
    #[error(transparent)]
    Germ(#[from] GermError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("need at least one trial")]
    NoTrials,
    #[error(
        "ambiguous dimension: a_real = {a_real:.3} is {ambiguity:.3} from the nearest integer"
    )]
    AmbiguousDimension {
        a_real: f64,
        ambiguity: f64,
        estimate: Box<DimensionEstimate>,
    },
    #[error("box counting unstable: estimates at the finest scales differ by {spread:.3}x")]
    BoxCountingUnstable { spread: f64 },
}

/// Volume of the n-ball of radius `r` (recurrence `V_n = V_{n-2} * 2 pi / n`).
pub fn ball_volume(n: usize, r: f64) -> f64 {
    let mut v = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if n % 2 == 0 { 0 } else { 1 };
    while k < n {
        k += 2;
        v *= 2.0 * std::f64::consts::PI / k as f64;
    }
    v * r.powi(n as i32)
}

/// Membership of `p` in `ST_d(X, C)` against the oracle. The oracle
/// overestimates the distance by at most its resolution delta, so the test
/// pads the width cap by delta: every true member (in particular every
/// on-set point) is reported as one, and over-reporting is confined to a
/// delta-fringe around the boundary.
pub fn st_membership(
    oracle: &DistanceOracle,
    p: &[f64],
    st: &STParams,
) -> Result<bool, GermError> {
    let np = norm(p);
    if np == 0.0 {
        return Ok(true);
    }
    let (lo, hi) = oracle.coverage();
    if np < lo || np > hi {
        return Err(GermError::OutOfCoverage { norm: np, lo, hi });
    }
    Ok(membership_at(oracle, p, np, st))
}

fn membership_at(oracle: &DistanceOracle, p: &[f64], np: f64, st: &STParams) -> bool {
    let cap = st.c * np.powf(st.d) + oracle.delta_near(np);
    oracle.distance_within(p, np, cap).is_some()
}

/// Membership with radial extrapolation for points below coverage: the point
/// is scaled out to the innermost covered radius and the sea-tangle width is
/// rescaled as if the set were a cone (exact on cones, the relevant model
/// near 0).
fn membership_extrapolated(oracle: &DistanceOracle, p: &[f64], np: f64, st: &STParams) -> bool {
    if np == 0.0 {
        return true;
    }
    let r0 = oracle.r_min;
    let scale = r0 / np;
    let q: Vec<f64> = p.iter().map(|x| x * scale).collect();
    // dist(q, X) * (np / r0) <= C np^d  <=>  dist(q, X) <= C np^(d-1) r0
    let cap = st.c * np.powf(st.d - 1.0) * r0 + oracle.delta_near(r0);
    oracle.distance_within(&q, r0, cap).is_some()
}

/// Monte Carlo volume of `ST_d(X, C)` inside `B(0, r)` against a prebuilt
/// oracle.
pub fn mc_volume_with_oracle(
    oracle: &DistanceOracle,
    st: &STParams,
    r: f64,
    trials: u64,
    seed: u64,
) -> Result<VolumeSample, SeaTangleError> {
    if trials == 0 {
        return Err(SeaTangleError::NoTrials);
    }
    let n = oracle.germ.ambient_dim;
    let (cov_lo, cov_hi) = oracle.coverage();
    if r > cov_hi {
        return Err(GermError::OutOfCoverage {
            norm: r,
            lo: cov_lo,
            hi: cov_hi,
        }
        .into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    let mut extrapolated = 0u64;
    for _ in 0..trials {
        let p = ball_point(&mut rng, n, r);
        let np = norm(&p);
        let inside = if np >= cov_lo {
            membership_at(oracle, &p, np, st)
        } else {
            extrapolated += 1;
            membership_extrapolated(oracle, &p, np, st)
        };
        if inside {
            hits += 1;
        }
    }
    let vol = ball_volume(n, r);
    let phat = hits as f64 / trials as f64;
    Ok(VolumeSample {
        r,
        hits,
        trials,
        estimate: phat * vol,
        stderr: vol * (phat * (1.0 - phat) / trials as f64).sqrt(),
        extrapolated,
    })
}

const ORACLE_SHELLS_PER_DECADE: u32 = 4;
const ORACLE_POINTS_PER_SHELL: usize = 1500;
/// decades of oracle coverage below the smallest queried radius
const ORACLE_DECADES_BELOW: f64 = 3.0;

fn oracle_for_radii(
    germ: &GermSpec,
    r_lo: f64,
    r_hi: f64,
    seed: u64,
) -> Result<DistanceOracle, GermError> {
    let r_min = (r_lo * 10f64.powf(-ORACLE_DECADES_BELOW)).max(1e-9);
    build_oracle(
        germ,
        r_min,
        r_hi,
        ORACLE_SHELLS_PER_DECADE,
        ORACLE_POINTS_PER_SHELL,
        derive_seed(seed, 0xB0),
    )
}

/// Monte Carlo volume of `ST_d(germ, C)` inside `B(0, r)`; builds a
/// throwaway oracle covering three decades below `r`.
pub fn mc_volume(
    germ: &GermSpec,
    st: &STParams,
    r: f64,
    trials: u64,
    seed: u64,
) -> Result<VolumeSample, SeaTangleError> {
    let oracle = oracle_for_radii(germ, r, r, seed)?;
    mc_volume_with_oracle(&oracle, st, r, trials, derive_seed(seed, 0xA0))
}

/// Fit `log vol(ST_d(germ, C) cap B(0, r))` against `log r` over the ladder.
pub fn volume_scaling_fit(
    germ: &GermSpec,
    st: &STParams,
    radii: &[f64],
    trials: u64,
    seed: u64,
) -> Result<VolumeScaling, SeaTangleError> {
    assert!(!radii.is_empty());
    let mut radii = radii.to_vec();
    radii.sort_unstable_by(f64::total_cmp);
    let oracle = oracle_for_radii(germ, radii[0], radii[radii.len() - 1], seed)?;
    let mut samples = Vec::with_capacity(radii.len());
    for (j, &r) in radii.iter().enumerate() {
        samples.push(mc_volume_with_oracle(
            &oracle,
            st,
            r,
            trials,
            derive_seed(seed, 0xA0 + j as u64),
        )?);
    }
    let pairs: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.estimate > 0.0)
        .map(|s| (s.r, s.estimate))
        .collect();
    let fit = fit_power_law(&pairs)?;
    Ok(VolumeScaling {
        fit,
        samples,
        st: *st,
    })
}

/// Tangent-cone dimension from the volume law: fit the exponent, invert
/// `e = n + (d-1)(n-a)`, round to the nearest integer.
pub fn estimate_cone_dim(
    germ: &GermSpec,
    d: f64,
    c: f64,
    radii: &[f64],
    trials: u64,
    seed: u64,
) -> Result<DimensionEstimate, SeaTangleError> {
    let st = STParams::new(d, c);
    let scaling = volume_scaling_fit(germ, &st, radii, trials, seed)?;
    let n = germ.ambient_dim as f64;
    let a_real = n - (scaling.fit.slope - n) / (d - 1.0);
    let a_rounded = a_real.round() as i64;
    let ambiguity = (a_real - a_rounded as f64).abs();
    let estimate = DimensionEstimate {
        exponent: scaling.fit,
        a_real,
        a_rounded,
        ambiguity,
        ambient_dim: germ.ambient_dim,
        st,
    };
    if ambiguity > 0.35 {
        return Err(SeaTangleError::AmbiguousDimension {
            a_real,
            ambiguity,
            estimate: Box::new(estimate),
        });
    }
    Ok(estimate)
}

/// Log-spaced radius ladder, inclusive of both endpoints.
pub fn log_radii(r_lo: f64, r_hi: f64, count: usize) -> Vec<f64> {
    assert!(r_lo > 0.0 && r_lo < r_hi && count >= 2);
    let (lo, hi) = (r_lo.log10(), r_hi.log10());
    (0..count)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (count - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::load_germ;

    #[test]
    fn ball_volumes_match_the_closed_forms() {
        assert!((ball_volume(1, 2.0) - 4.0).abs() < 1e-12);
        assert!((ball_volume(2, 1.0) - std::f64::consts::PI).abs() < 1e-12);
        assert!((ball_volume(3, 1.0) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((ball_volume(4, 1.0) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
    }

    fn line_oracle() -> DistanceOracle {
        let line = load_germ("line").unwrap();
        build_oracle(&line, 1e-4, 1.0, 4, 1500, 1).unwrap()
    }

    #[test]
    fn membership_on_the_line_examples() {
        let oracle = line_oracle();
        let st = STParams::new(2.0, 1.0);
        // dist 0.0005 vs |p|^2 ~ 0.01
        assert!(st_membership(&oracle, &[0.1, 0.0005], &st).unwrap());
        // dist 0.05 > 0.0125
        assert!(!st_membership(&oracle, &[0.1, 0.05], &st).unwrap());
        // on-set points belong for every d, C
        for d in [1.1, 1.5, 2.0, 3.0] {
            for c in [0.01, 1.0] {
                let st = STParams::new(d, c);
                assert!(st_membership(&oracle, &[0.1, 0.0], &st).unwrap());
                assert!(st_membership(&oracle, &[-0.03, 0.0], &st).unwrap());
            }
        }
    }

    #[test]
    fn membership_is_monotone_in_c_and_antitone_in_d() {
        let oracle = line_oracle();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let p = ball_point(&mut rng, 2, 0.5);
            if norm(&p) < oracle.coverage().0 {
                continue;
            }
            let at = |d: f64, c: f64| st_membership(&oracle, &p, &STParams::new(d, c)).unwrap();
            if at(1.5, 0.5) {
                assert!(at(1.5, 1.0), "larger C lost {p:?}");
            }
            // |p| <= 1: larger d shrinks |p|^d
            if at(2.0, 1.0) {
                assert!(at(1.5, 1.0), "smaller d lost {p:?}");
            }
        }
    }

    #[test]
    fn full_space_volume_is_exact() {
        let full = load_germ("rk_in_rn(2,2)").unwrap();
        let st = STParams::new(1.5, 1.0);
        let v = mc_volume(&full, &st, 0.1, 2000, 3).unwrap();
        assert_eq!(v.hits, v.trials);
        assert!((v.estimate - ball_volume(2, 0.1)).abs() < 1e-15);
        assert_eq!(v.stderr, 0.0);
    }

    #[test]
    fn zero_trials_is_an_error() {
        let line = load_germ("line").unwrap();
        let st = STParams::new(1.5, 1.0);
        assert!(matches!(
            mc_volume(&line, &st, 0.1, 0, 3),
            Err(SeaTangleError::NoTrials)
        ));
    }

    #[test]
    fn line_volume_matches_slicing_quadrature() {
        // area of {|y| <= (x^2+y^2)^0.75} inside B(0, 0.1): for each x the
        // admissible band is [0, y*(x)] with y* the crossing of
        // y = (x^2+y^2)^0.75, capped by the ball
        let r = 0.1f64;
        let y_star = |x: f64| -> f64 {
            let f = |y: f64| y - (x * x + y * y).powf(0.75);
            let (mut lo, mut hi) = (0.0f64, r);
            if f(hi) < 0.0 {
                return hi;
            }
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if f(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let steps = 20_000;
        let mut area = 0.0;
        for i in 0..steps {
            let x = r * (i as f64 + 0.5) / steps as f64;
            let cap = (r * r - x * x).sqrt();
            area += y_star(x).min(cap) * (r / steps as f64);
        }
        area *= 4.0; // four symmetric quadrants

        let line = load_germ("line").unwrap();
        let st = STParams::new(1.5, 1.0);
        let v = mc_volume(&line, &st, r, 60_000, 11).unwrap();
        assert!(
            (v.estimate - area).abs() < 3.0 * v.stderr + 0.02 * area,
            "mc {} vs quadrature {} (stderr {})",
            v.estimate,
            area,
            v.stderr
        );
    }

    #[test]
    fn mc_volume_is_deterministic() {
        let line = load_germ("line").unwrap();
        let st = STParams::new(1.5, 1.0);
        let a = mc_volume(&line, &st, 0.1, 5000, 9).unwrap();
        let b = mc_volume(&line, &st, 0.1, 5000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scaling_law_exponent_for_line_and_ray() {
        // vol ~ r^(n + (d-1)(n-a)): line in R^2 with d=1.5 gives 2.5
        let line = load_germ("line").unwrap();
        let st = STParams::new(1.5, 1.0);
        let radii = log_radii(10f64.powf(-2.5), 0.1, 10);
        let scaling = volume_scaling_fit(&line, &st, &radii, 40_000, 2).unwrap();
        assert!(
            (scaling.fit.slope - 2.5).abs() < 0.15,
            "line slope {}",
            scaling.fit.slope
        );

        // ray in R^2 with d=2 gives 2 + 1*1 = 3
        let ray = load_germ("ray").unwrap();
        let st = STParams::new(2.0, 1.0);
        let scaling = volume_scaling_fit(&ray, &st, &radii, 40_000, 2).unwrap();
        assert!(
            (scaling.fit.slope - 3.0).abs() < 0.15,
            "ray slope {}",
            scaling.fit.slope
        );
    }

    #[test]
    fn cone_dimensions_of_the_flat_catalog_germs() {
        let radii = log_radii(10f64.powf(-2.5), 0.1, 10);
        let plane = load_germ("plane").unwrap();
        let est = estimate_cone_dim(&plane, 1.25, 1.0, &radii, 60_000, 4).unwrap();
        assert_eq!(est.a_rounded, 2, "plane: {est:?}");

        let cusp = load_germ("cusp").unwrap();
        let est = estimate_cone_dim(&cusp, 1.25, 1.0, &radii, 60_000, 4).unwrap();
        assert_eq!(est.a_rounded, 1, "cusp: {est:?}");
    }

    #[test]
    fn log_cone_dimension_drops_to_one() {
        let radii = log_radii(10f64.powf(-2.5), 0.1, 10);
        let log_cone = load_germ("log_cone").unwrap();
        let est = estimate_cone_dim(&log_cone, 1.25, 1.0, &radii, 60_000, 4).unwrap();
        assert_eq!(est.a_rounded, 1, "log_cone: {est:?}");
    }
}
