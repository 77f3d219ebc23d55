//! Empirical checks of the sea-tangle comparison lemmas: mutual ST
//! inclusion, the Hölder-image inclusion exponents, the volume distortion
//! bound of Hölder maps, and the shell k-volume ratio law.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::Expression;
use crate::germ::{
    ball_point, norm, sample_shell, unit_vector, GermKind, GermSpec, GridIndex, Point,
};
use crate::metric::{fit_power_law, ScalingFit};
use crate::seed::derive_seed;

use super::{ball_volume, log_radii, oracle_for_radii, st_membership, STParams, SeaTangleError};

// ---------------------------------------------------------------------------
// Mutual sea-tangle inclusion over (d, C) grids.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceEntry {
    pub d: f64,
    pub c: f64,
    /// fraction of B's shell points inside ST_d(A, C)
    pub b_in_a: f64,
    /// fraction of A's shell points inside ST_d(B, C)
    pub a_in_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub entries: Vec<EquivalenceEntry>,
    /// largest d for which some C reaches >= `threshold` in both directions
    pub best_d: Option<f64>,
    pub threshold: f64,
}

const INCLUSION_THRESHOLD: f64 = 0.99;

/// Mutual inclusion of two germs in each other's sea-tangle neighborhoods,
/// over the given degree and width grids.
pub fn st_equivalence_check(
    germ_a: &GermSpec,
    germ_b: &GermSpec,
    d_grid: &[f64],
    c_grid: &[f64],
    radii: &[f64],
    n_per_shell: usize,
    seed: u64,
) -> Result<EquivalenceReport, SeaTangleError> {
    assert_eq!(germ_a.ambient_dim, germ_b.ambient_dim);
    assert!(!d_grid.is_empty() && !c_grid.is_empty() && !radii.is_empty());
    let mut radii = radii.to_vec();
    radii.sort_unstable_by(f64::total_cmp);
    let (r_lo, r_hi) = (radii[0], radii[radii.len() - 1]);
    let oracle_a = oracle_for_radii(germ_a, r_lo, r_hi, derive_seed(seed, 1))?;
    let oracle_b = oracle_for_radii(germ_b, r_lo, r_hi, derive_seed(seed, 2))?;
    let clouds_a: Vec<_> = radii
        .iter()
        .enumerate()
        .map(|(j, &r)| sample_shell(germ_a, r, n_per_shell, 0.1, derive_seed(seed, 10 + j as u64)))
        .collect::<Result<_, _>>()?;
    let clouds_b: Vec<_> = radii
        .iter()
        .enumerate()
        .map(|(j, &r)| sample_shell(germ_b, r, n_per_shell, 0.1, derive_seed(seed, 50 + j as u64)))
        .collect::<Result<_, _>>()?;

    let fraction = |oracle: &super::DistanceOracle,
                    clouds: &[crate::germ::ShellCloud],
                    st: &STParams|
     -> Result<f64, SeaTangleError> {
        let mut inside = 0usize;
        let mut total = 0usize;
        for cloud in clouds {
            for p in &cloud.points {
                total += 1;
                if st_membership(oracle, p, st)? {
                    inside += 1;
                }
            }
        }
        Ok(inside as f64 / total.max(1) as f64)
    };

    let mut entries = Vec::new();
    let mut best_d: Option<f64> = None;
    for &d in d_grid {
        for &c in c_grid {
            let st = STParams::new(d, c);
            let b_in_a = fraction(&oracle_a, &clouds_b, &st)?;
            let a_in_b = fraction(&oracle_b, &clouds_a, &st)?;
            if b_in_a >= INCLUSION_THRESHOLD && a_in_b >= INCLUSION_THRESHOLD {
                best_d = Some(best_d.map_or(d, |b: f64| b.max(d)));
            }
            entries.push(EquivalenceEntry { d, c, b_in_a, a_in_b });
        }
    }
    Ok(EquivalenceReport {
        entries,
        best_d,
        threshold: INCLUSION_THRESHOLD,
    })
}

// ---------------------------------------------------------------------------
// Hölder image inclusion: exponent of dist(phi(p), phi(X)) for boundary
// sea-tangle points p.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionDirection {
    pub fit: ScalingFit,
    /// `d * alpha^2` minus the tolerance
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub forward: InclusionDirection,
    pub inverse: InclusionDirection,
    pub alpha: f64,
    pub st: STParams,
}

const INCLUSION_TOLERANCE: f64 = 0.05;
const INCLUSION_SHELLS_PER_DECADE: usize = 6;

fn apply(map: &[Expression], x: &[f64]) -> Point {
    map.iter()
        .map(|c| c.eval_slice(x).expect("map evaluation failed on sample"))
        .collect()
}

/// One direction of the inclusion check: perturb base points outward to the
/// sea-tangle boundary, push through the map, and fit the exponent of the
/// image distance against the image norm.
fn inclusion_direction(
    base: &[Vec<Point>],
    map: &[Expression],
    target: &GridIndex,
    st: &STParams,
    alpha: f64,
    pairs_per_shell: usize,
    seed: u64,
) -> Result<InclusionDirection, SeaTangleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for cloud in base {
        for x in cloud.iter().take(pairs_per_shell) {
            let nx = norm(x);
            let u = unit_vector(&mut rng, x.len());
            let offset = st.c * nx.powf(st.d);
            let p: Point = x.iter().zip(&u).map(|(a, b)| a + b * offset).collect();
            let q = apply(map, &p);
            let nq = norm(&q);
            let (_, dist) = target.nearest(&q);
            if nq > 0.0 && dist > 0.0 {
                pairs.push((nq, dist));
            }
        }
    }
    let fit = fit_power_law(&pairs)?;
    let threshold = st.d * alpha * alpha - INCLUSION_TOLERANCE;
    Ok(InclusionDirection {
        pass: fit.slope >= threshold,
        fit,
        threshold,
    })
}

/// Both inclusion directions for a map with an explicit inverse: samples the
/// sea-tangle boundary of the germ, maps it through `phi`, and fits the
/// exponent of the distance to the image set (and symmetrically for
/// `phi_inv` against the original set).
pub fn holder_inclusion_check(
    phi: &[Expression],
    phi_inv: &[Expression],
    germ: &GermSpec,
    st: &STParams,
    alpha: f64,
    radii: &[f64],
    pairs_per_shell: usize,
    seed: u64,
) -> Result<InclusionReport, SeaTangleError> {
    assert!(alpha > 0.0 && alpha <= 1.0);
    assert!(!radii.is_empty() && pairs_per_shell >= 1);
    let mut radii = radii.to_vec();
    radii.sort_unstable_by(f64::total_cmp);
    let (r_lo, r_hi) = (radii[0], radii[radii.len() - 1]);
    // dense reference ladder, one decade past each end so image distances
    // near the window edges are answered by covered scales
    let span = (r_hi / r_lo).log10() + 2.0;
    let rungs = (span * INCLUSION_SHELLS_PER_DECADE as f64).ceil() as usize + 1;
    let reference = log_radii(r_lo / 10.0, (r_hi * 10.0).min(1.0), rungs);
    let mut x_points: Vec<Point> = Vec::new();
    let mut y_points: Vec<Point> = Vec::new();
    for (j, &r) in reference.iter().enumerate() {
        let cloud = sample_shell(germ, r, 1500, 0.12, derive_seed(seed, 100 + j as u64))?;
        for p in &cloud.points {
            y_points.push(apply(phi, p));
        }
        x_points.extend(cloud.points);
    }
    let x_index = GridIndex::build(x_points);
    let y_index = GridIndex::build(y_points);

    // base shells restricted to the query window
    let mut base_x: Vec<Vec<Point>> = Vec::new();
    let mut base_y: Vec<Vec<Point>> = Vec::new();
    for (j, &r) in radii.iter().enumerate() {
        let cloud = sample_shell(germ, r, pairs_per_shell, 0.1, derive_seed(seed, 500 + j as u64))?;
        base_y.push(cloud.points.iter().map(|p| apply(phi, p)).collect());
        base_x.push(cloud.points);
    }

    let forward = inclusion_direction(
        &base_x,
        phi,
        &y_index,
        st,
        alpha,
        pairs_per_shell,
        derive_seed(seed, 900),
    )?;
    let inverse = inclusion_direction(
        &base_y,
        phi_inv,
        &x_index,
        st,
        alpha,
        pairs_per_shell,
        derive_seed(seed, 901),
    )?;
    Ok(InclusionReport {
        forward,
        inverse,
        alpha,
        st: *st,
    })
}

// ---------------------------------------------------------------------------
// Volume distortion of a Hölder map on a full-dimensional germ.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeDistortionReport {
    /// per radius: (r, measured ratio vol(h(X cap B_r)) / vol(X cap B_r))
    pub ratios: Vec<(f64, f64)>,
    pub fit: ScalingFit,
    /// `(1/alpha + 1)(alpha - 1) n`
    pub bound_exponent: f64,
    /// per radius constant demanded by the bound: ratio / r^bound_exponent
    pub constants: Vec<f64>,
    pub pass: bool,
}

const DISTORTION_TOLERANCE: f64 = 0.1;
/// box sides relative to the image scale, coarse enough that boxes are
/// multiply hit at the default trial counts
const BOX_GRID: [f64; 3] = [0.03, 0.045, 0.0675];

/// Box-counting volume of a mapped sample: occupied axis boxes of side
/// `delta` times `delta^n`, stabilized over the relative grid.
fn box_volume(points: &[Point], n: usize) -> Result<f64, SeaTangleError> {
    let scale = points.iter().map(|p| norm(p)).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut estimates = Vec::new();
    for rel in BOX_GRID {
        let delta = rel * scale;
        let mut boxes: HashSet<Vec<i64>> = HashSet::new();
        for p in points {
            boxes.insert(p.iter().map(|&x| (x / delta).floor() as i64).collect());
        }
        estimates.push(boxes.len() as f64 * delta.powi(n as i32));
    }
    let max = estimates.iter().fold(0.0f64, |a, &b| a.max(b));
    let min = estimates.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if max / min > 1.5 {
        return Err(SeaTangleError::BoxCountingUnstable { spread: max / min });
    }
    // geometric mean over the grid
    let prod: f64 = estimates.iter().map(|e| e.ln()).sum::<f64>() / estimates.len() as f64;
    Ok(prod.exp())
}

/// Volume ratio `vol_n(h(X cap B_r)) / vol_n(X cap B_r)` across the ladder,
/// checked against the Hölder distortion bound. The germ must be the full
/// ambient space (a ball-like set) so the n-volumes are positive.
pub fn volume_distortion_check(
    h: &[Expression],
    germ: &GermSpec,
    alpha: f64,
    radii: &[f64],
    trials: u64,
    seed: u64,
) -> Result<VolumeDistortionReport, SeaTangleError> {
    assert!(alpha > 0.0 && alpha <= 1.0);
    let n = germ.ambient_dim;
    assert!(
        matches!(&germ.kind, GermKind::Graph { base_dim, components }
            if *base_dim == n && components.is_empty()),
        "volume distortion needs a full-dimensional (whole-space) germ"
    );
    assert_eq!(h.len(), n);
    let mut ratios = Vec::new();
    for (j, &r) in radii.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, j as u64));
        let mapped: Vec<Point> = (0..trials)
            .map(|_| apply(h, &ball_point(&mut rng, n, r)))
            .collect();
        let vol_image = box_volume(&mapped, n)?;
        ratios.push((r, vol_image / ball_volume(n, r)));
    }
    let fit = fit_power_law(&ratios)?;
    let bound_exponent = (1.0 / alpha + 1.0) * (alpha - 1.0) * n as f64;
    let constants = ratios
        .iter()
        .map(|&(r, ratio)| ratio / r.powf(bound_exponent))
        .collect();
    Ok(VolumeDistortionReport {
        pass: fit.slope >= bound_exponent - DISTORTION_TOLERANCE,
        ratios,
        fit,
        bound_exponent,
        constants,
    })
}

// ---------------------------------------------------------------------------
// Shell k-volume ratio law.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellRatioEntry {
    pub r: f64,
    pub rho: f64,
    pub vol_r: f64,
    pub vol_rho: f64,
    /// constant demanded by vol(B_rho) <= K (rho/r)^k vol(B_r)
    pub k_const: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellRatioReport {
    pub k: usize,
    /// the pair (r, rho) and the same pair slid one decade down
    pub entries: Vec<ShellRatioEntry>,
    /// max/min of the demanded constants across the slide
    pub k_spread: f64,
    pub stable: bool,
}

const SHELL_RATIO_SHELLS_PER_DECADE: usize = 6;
const SHELL_RATIO_DECADES_IN: f64 = 2.0;

/// k-volume of the germ inside `B(0, bound)` by box counting over a dense
/// shell ladder filling the ball.
fn box_k_volume(
    germ: &GermSpec,
    k: usize,
    bound: f64,
    n_per_shell: usize,
    seed: u64,
) -> Result<f64, SeaTangleError> {
    let rungs = (SHELL_RATIO_DECADES_IN * SHELL_RATIO_SHELLS_PER_DECADE as f64) as usize + 1;
    let ladder = log_radii(bound * 10f64.powf(-SHELL_RATIO_DECADES_IN), bound / 1.2, rungs);
    let mut points: Vec<Point> = Vec::new();
    for (j, &r) in ladder.iter().enumerate() {
        let cloud = sample_shell(germ, r, n_per_shell, 0.2, derive_seed(seed, j as u64))?;
        points.extend(
            cloud
                .points
                .into_iter()
                .filter(|p| norm(p) <= bound),
        );
    }
    let mut estimates = Vec::new();
    for rel in BOX_GRID {
        let delta = rel * bound;
        let mut boxes: HashSet<Vec<i64>> = HashSet::new();
        for p in &points {
            boxes.insert(p.iter().map(|&x| (x / delta).floor() as i64).collect());
        }
        estimates.push(boxes.len() as f64 * delta.powi(k as i32));
    }
    let max = estimates.iter().fold(0.0f64, |a, &b| a.max(b));
    let min = estimates.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if max / min > 1.5 {
        return Err(SeaTangleError::BoxCountingUnstable { spread: max / min });
    }
    let mean_log: f64 = estimates.iter().map(|e| e.ln()).sum::<f64>() / estimates.len() as f64;
    Ok(mean_log.exp())
}

/// The k-volume ratio law between `B(0, r)` and `B(0, rho)`, re-checked one
/// decade further down; the demanded constants must agree within a factor 2.
pub fn shell_volume_ratio_check(
    germ: &GermSpec,
    k: usize,
    r: f64,
    rho: f64,
    n_per_shell: usize,
    seed: u64,
) -> Result<ShellRatioReport, SeaTangleError> {
    assert!(0.0 < r && r < rho && rho <= 1.0);
    assert!(k >= 1 && k <= germ.ambient_dim);
    let mut entries = Vec::new();
    for (slide, factor) in [(0u64, 1.0f64), (1, 0.1)] {
        let (r_s, rho_s) = (r * factor, rho * factor);
        let vol_r = box_k_volume(germ, k, r_s, n_per_shell, derive_seed(seed, 2 * slide))?;
        let vol_rho = box_k_volume(germ, k, rho_s, n_per_shell, derive_seed(seed, 2 * slide + 1))?;
        let k_const = (vol_rho / vol_r) / (rho_s / r_s).powi(k as i32);
        entries.push(ShellRatioEntry {
            r: r_s,
            rho: rho_s,
            vol_r,
            vol_rho,
            k_const,
        });
    }
    let k_max = entries.iter().map(|e| e.k_const).fold(0.0f64, f64::max);
    let k_min = entries.iter().map(|e| e.k_const).fold(f64::INFINITY, |a, b| a.min(b));
    let k_spread = k_max / k_min;
    Ok(ShellRatioReport {
        k,
        entries,
        k_spread,
        stable: k_spread <= 2.0,
    })
}
