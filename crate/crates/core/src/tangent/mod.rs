//! Tangent cones by radial rescaling: direction clouds down a radius
//! ladder, Hausdorff convergence of the clouds, and cone germs built over
//! the estimated limit link.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::germ::{dist, norm, sample_shell, GermError, GermKind, GermSpec, GridIndex, Point};
use crate::seed::derive_seed;

/// Unit directions `x / |x|` of a shell sample at one radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionCloud {
    pub r: f64,
    pub directions: Vec<Point>,
}

/// The ladder of radii, the Hausdorff distances between consecutive
/// direction clouds, and the convergence verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub radii: Vec<f64>,
    /// `hausdorff[j]` compares the clouds at `radii[j]` and `radii[j+1]`
    pub hausdorff: Vec<f64>,
    /// tolerance in force at each comparison (auto: 3x the sampling gap)
    pub tolerance: Vec<f64>,
    pub converged: bool,
    pub limit: DirectionCloud,
}

/// A converged estimate: the trace and the cone germ over the limit link.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeEstimate {
    pub trace: ConvergenceTrace,
    pub cone: GermSpec,
}

#[derive(Debug, Error)]
pub enum TangentError {
    #[error(transparent)]
    Germ(#[from] GermError),
    #[error("hausdorff distance needs non-empty sets")]
    EmptySet,
    #[error(
        "direction clouds did not converge over the ladder (last H = {last:.3e}, tol = {tol:.3e})"
    )]
    NotConverged {
        last: f64,
        tol: f64,
        trace: Box<ConvergenceTrace>,
    },
}

/// Normalized shell sample: the directions of `X` seen at radius `r`.
pub fn sample_directions(
    germ: &GermSpec,
    r: f64,
    n: usize,
    seed: u64,
) -> Result<DirectionCloud, GermError> {
    let cloud = sample_shell(germ, r, n, 0.1, seed)?;
    let directions = cloud
        .points
        .iter()
        .map(|p| {
            let m = norm(p);
            p.iter().map(|x| x / m).collect()
        })
        .collect();
    Ok(DirectionCloud { r, directions })
}

/// `max(sup_a dist(a, B), sup_b dist(b, A))` over finite point sets.
pub fn hausdorff_distance(a: &[Point], b: &[Point]) -> Result<f64, TangentError> {
    if a.is_empty() || b.is_empty() {
        return Err(TangentError::EmptySet);
    }
    let one_sided = |from: &[Point], to: &GridIndex| -> f64 {
        from.iter()
            .map(|p| to.nearest(p).1)
            .fold(0.0f64, f64::max)
    };
    let ia = GridIndex::build(a.to_vec());
    let ib = GridIndex::build(b.to_vec());
    Ok(one_sided(a, &ib).max(one_sided(b, &ia)))
}

/// Max over cloud points of the nearest-neighbor distance.
fn sampling_gap(points: &[Point]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let index = GridIndex::build(points.to_vec());
    points
        .iter()
        .enumerate()
        .map(|(i, p)| index.nearest_excluding(p, i).1)
        .fold(0.0f64, f64::max)
}

/// Greedy farthest-point subsample; keeps the spread of the cloud with a
/// bounded point count for downstream complexes.
pub fn farthest_point_subsample(points: &[Point], target: usize) -> Vec<Point> {
    if points.len() <= target || target == 0 {
        return points.to_vec();
    }
    let mut chosen: Vec<usize> = vec![0];
    let mut min_dist: Vec<f64> = points.iter().map(|p| dist(p, &points[0])).collect();
    while chosen.len() < target {
        let (next, &d) = min_dist
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .unwrap();
        if d == 0.0 {
            break;
        }
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            let dn = dist(p, &points[next]);
            if dn < min_dist[i] {
                min_dist[i] = dn;
            }
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

const LIMIT_CLOUD_TARGET: usize = 200;
/// absolute floor for the auto convergence tolerance (unit-sphere scale)
const ANGULAR_FLOOR: f64 = 1e-4;

/// Direction clouds down a geometric ladder from `r_start` over `decades`;
/// converged when two consecutive Hausdorff steps fall below the tolerance
/// (`tol = None` selects 3x the sampling gap per step). On success the
/// limit cloud, farthest-point-subsampled, becomes a cone germ.
pub fn tangent_cone_estimate(
    germ: &GermSpec,
    r_start: f64,
    decades: f64,
    steps_per_decade: u32,
    n: usize,
    tol: Option<f64>,
    seed: u64,
) -> Result<ConeEstimate, TangentError> {
    assert!(decades >= 2.0, "ladder must descend at least two decades");
    assert!(steps_per_decade >= 1 && r_start > 0.0);
    let steps = (decades * steps_per_decade as f64).ceil() as usize;
    let q = 10f64.powf(-1.0 / steps_per_decade as f64);
    let mut radii = Vec::new();
    let mut hausdorff = Vec::new();
    let mut tolerance = Vec::new();
    let mut previous: Option<DirectionCloud> = None;
    let mut consecutive = 0usize;
    let mut converged = false;
    let mut limit: Option<DirectionCloud> = None;
    for j in 0..=steps {
        let r = r_start * q.powi(j as i32);
        let cloud = sample_directions(germ, r, n, derive_seed(seed, j as u64))?;
        radii.push(r);
        if let Some(prev) = &previous {
            let h = hausdorff_distance(&prev.directions, &cloud.directions)?;
            // auto tolerance: 3x the statistical sampling gap, floored at an
            // absolute angular resolution — direction clouds live on the unit
            // sphere, and germs whose directions drift like O(r) (e.g. graph
            // germs with superlinear branches) have H shrinking to zero while
            // the gap of their nearly-degenerate clouds shrinks even faster
            let step_tol = tol
                .unwrap_or_else(|| (3.0 * sampling_gap(&cloud.directions)).max(ANGULAR_FLOOR));
            hausdorff.push(h);
            tolerance.push(step_tol);
            consecutive = if h <= step_tol { consecutive + 1 } else { 0 };
            if consecutive >= 2 {
                converged = true;
                limit = Some(cloud.clone());
            }
        }
        previous = Some(cloud);
        if converged {
            break;
        }
    }
    let limit = limit.unwrap_or_else(|| previous.expect("ladder has at least one rung"));
    let trace = ConvergenceTrace {
        radii,
        converged,
        limit,
        hausdorff,
        tolerance,
    };
    if !trace.converged {
        let last = trace.hausdorff.last().copied().unwrap_or(f64::INFINITY);
        let tol = trace.tolerance.last().copied().unwrap_or(0.0);
        return Err(TangentError::NotConverged {
            last,
            tol,
            trace: Box::new(trace),
        });
    }
    let link_points = farthest_point_subsample(&trace.limit.directions, LIMIT_CLOUD_TARGET);
    let cone = GermSpec::new(
        format!("cone_over({})", germ.name),
        germ.ambient_dim,
        GermKind::ConeOverPoints { link_points },
    );
    Ok(ConeEstimate { trace, cone })
}

/// Shell sample rescaled onto the exact sphere `S(0, r)`.
pub fn link_sample(germ: &GermSpec, r: f64, n: usize, seed: u64) -> Result<Vec<Point>, GermError> {
    let cloud = sample_shell(germ, r, n, 0.1, seed)?;
    Ok(cloud
        .points
        .iter()
        .map(|p| {
            let m = norm(p);
            p.iter().map(|x| x * r / m).collect()
        })
        .collect())
}
