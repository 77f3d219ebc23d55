//! Shell sampling: points of a germ with norms in a band around a target
//! radius. Graph and parametric germs use radial pre-inversion along random
//! parameter directions; zero sets use ambient proposals Newton-projected
//! onto the variety; cones scale their link points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Expression;
use crate::seed::derive_seed;

use super::{norm, GermError, GermKind, GermSpec, Point, ShellCloud};

const NEWTON_MAX_ITERS: usize = 50;
const NEWTON_TOL: f64 = 1e-12;

/// Unit vector, uniform on the sphere (Box-Muller Gaussians, normalized).
pub fn unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let mut v = Vec::with_capacity(dim);
        while v.len() < dim {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let m = (-2.0 * u1.ln()).sqrt();
            v.push(m * u2.cos());
            if v.len() < dim {
                v.push(m * u2.sin());
            }
        }
        let n = norm(&v);
        if n > 1e-12 {
            for x in &mut v {
                *x /= n;
            }
            return v;
        }
    }
}

/// Uniform point in the ball of radius `r`.
pub fn ball_point(rng: &mut impl Rng, dim: usize, r: f64) -> Vec<f64> {
    let mut v = unit_vector(rng, dim);
    let u: f64 = rng.gen_range(0.0f64..1.0);
    let scale = r * u.powf(1.0 / dim as f64);
    for x in &mut v {
        *x *= scale;
    }
    v
}

struct SampleStats {
    accepted: usize,
    proposals: usize,
    diverged: usize,
}

pub fn sample_shell(
    germ: &GermSpec,
    r: f64,
    n: usize,
    w: f64,
    seed: u64,
) -> Result<ShellCloud, GermError> {
    assert!(r > 0.0 && r <= 1.0, "r must be in (0, 1]");
    assert!(n >= 1, "need at least one sample");
    assert!(w > 0.0 && w < 1.0, "width must be in (0, 1)");
    let mut points = Vec::with_capacity(n);
    let mut stats = SampleStats {
        accepted: 0,
        proposals: 0,
        diverged: 0,
    };
    let cap = (1_000_000usize.saturating_mul(n)).min(100_000_000);
    sample_into(germ, r, n, w, seed, cap, &mut points, &mut stats)?;
    Ok(ShellCloud {
        germ: germ.name.clone(),
        r,
        width: w,
        seed,
        points,
    })
}

#[allow(clippy::too_many_arguments)]
fn sample_into(
    germ: &GermSpec,
    r: f64,
    n: usize,
    w: f64,
    seed: u64,
    cap: usize,
    out: &mut Vec<Point>,
    stats: &mut SampleStats,
) -> Result<(), GermError> {
    let band = (r * (1.0 - w), r * (1.0 + w));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match &germ.kind {
        GermKind::Graph {
            base_dim,
            components,
        } => {
            let image = |u: &[f64]| -> Option<Point> {
                let mut p = u.to_vec();
                for c in components {
                    p.push(c.eval_slice(u).ok()?);
                }
                Some(p)
            };
            sample_radial(*base_dim, &image, r, n, w, cap, &mut rng, out, stats)
                .map_err(|_| GermError::EmptyShell {
                    germ: germ.name.clone(),
                    r,
                })?;
        }
        GermKind::Parametric {
            param_dim,
            components,
            param_domain,
        } => {
            let image = |t: &[f64]| -> Option<Point> {
                if t.iter()
                    .zip(param_domain)
                    .any(|(x, (lo, hi))| x < lo || x > hi)
                {
                    return None;
                }
                components
                    .iter()
                    .map(|c| c.eval_slice(t).ok())
                    .collect::<Option<Vec<_>>>()
            };
            sample_radial(*param_dim, &image, r, n, w, cap, &mut rng, out, stats)
                .map_err(|_| GermError::EmptyShell {
                    germ: germ.name.clone(),
                    r,
                })?;
        }
        GermKind::ZeroSet {
            defining,
            inequalities,
        } => {
            let dim = germ.ambient_dim;
            while out.len() < n {
                if stats.proposals >= cap {
                    return if stats.diverged * 2 > stats.proposals {
                        Err(GermError::ProjectionDiverged { r })
                    } else {
                        Err(GermError::EmptyShell {
                            germ: germ.name.clone(),
                            r,
                        })
                    };
                }
                stats.proposals += 1;
                let mut p = unit_vector(&mut rng, dim);
                let rho = rng.gen_range(band.0..band.1);
                for x in &mut p {
                    *x *= rho;
                }
                match newton_project(defining, &p, r) {
                    ProjectionOutcome::Converged(q) => {
                        let nq = norm(&q);
                        let on_band = nq >= band.0 && nq <= band.1;
                        let feasible = inequalities
                            .iter()
                            .all(|g| g.eval_slice(&q).map_or(false, |v| v >= -1e-9 * (1.0 + r)));
                        if on_band && feasible {
                            stats.accepted += 1;
                            out.push(q);
                        }
                    }
                    ProjectionOutcome::Diverged => stats.diverged += 1,
                }
            }
        }
        GermKind::ConeOverPoints { link_points } => {
            if link_points.is_empty() {
                return Err(GermError::EmptyShell {
                    germ: germ.name.clone(),
                    r,
                });
            }
            for _ in 0..n {
                stats.proposals += 1;
                stats.accepted += 1;
                let v = &link_points[rng.gen_range(0..link_points.len())];
                let rho = rng.gen_range(band.0..band.1);
                out.push(v.iter().map(|x| x * rho).collect());
            }
        }
        GermKind::Union { parts } => {
            // pilot pass measures per-part acceptance, allocation follows the
            // measured rates with a 10% floor so thin parts stay represented
            let mut rates = Vec::with_capacity(parts.len());
            for (i, part) in parts.iter().enumerate() {
                let mut pilot = Vec::new();
                let mut ps = SampleStats {
                    accepted: 0,
                    proposals: 0,
                    diverged: 0,
                };
                let pilot_seed = derive_seed(seed, 1_000 + i as u64);
                let ok =
                    sample_into(part, r, 16, w, pilot_seed, 5_000, &mut pilot, &mut ps).is_ok();
                let rate = if ok && ps.proposals > 0 {
                    (ps.accepted as f64 / ps.proposals as f64).max(1e-9)
                } else {
                    0.0
                };
                rates.push(rate);
            }
            let live: f64 = rates.iter().sum();
            if live == 0.0 {
                return Err(GermError::EmptyShell {
                    germ: germ.name.clone(),
                    r,
                });
            }
            let floor = 0.1;
            let weights: Vec<f64> = rates
                .iter()
                .map(|&rate| {
                    if rate == 0.0 {
                        0.0
                    } else {
                        (rate / live).max(floor)
                    }
                })
                .collect();
            let wsum: f64 = weights.iter().sum();
            let mut assigned = 0usize;
            let live_parts: Vec<usize> = (0..parts.len()).filter(|&i| weights[i] > 0.0).collect();
            for (pos, &i) in live_parts.iter().enumerate() {
                let count = if pos + 1 == live_parts.len() {
                    n - assigned
                } else {
                    ((n as f64) * weights[i] / wsum).round() as usize
                };
                assigned += count;
                if count == 0 {
                    continue;
                }
                let part_seed = derive_seed(seed, i as u64);
                // a part may legitimately miss the band; it then contributes
                // nothing
                let _ = sample_into(&parts[i], r, count, w, part_seed, cap, out, stats);
            }
            if out.is_empty() {
                return Err(GermError::EmptyShell {
                    germ: germ.name.clone(),
                    r,
                });
            }
        }
        GermKind::Product { inner, zero_pad } => {
            let mut inner_points = Vec::with_capacity(n);
            sample_into(inner, r, n, w, derive_seed(seed, 7), cap, &mut inner_points, stats)?;
            for mut p in inner_points {
                p.extend(std::iter::repeat(0.0).take(*zero_pad));
                out.push(p);
            }
        }
    }
    Ok(())
}

/// Radial pre-inversion: along a random parameter direction, bisect the scale
/// until the image norm hits a target drawn inside the band. Falls back to
/// box rejection when the radial profile is not monotone enough to bracket.
#[allow(clippy::too_many_arguments)]
fn sample_radial(
    param_dim: usize,
    image: &dyn Fn(&[f64]) -> Option<Point>,
    r: f64,
    n: usize,
    w: f64,
    cap: usize,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Point>,
    stats: &mut SampleStats,
) -> Result<(), ()> {
    let band = (r * (1.0 - w), r * (1.0 + w));
    let start = out.len();
    while out.len() - start < n {
        if stats.proposals >= cap {
            return Err(());
        }
        stats.proposals += 1;
        let dir = if param_dim == 1 {
            vec![if rng.gen_bool(0.5) { 1.0 } else { -1.0 }]
        } else {
            unit_vector(rng, param_dim)
        };
        let target = rng.gen_range(band.0..band.1);
        let rho = |s: f64| -> Option<f64> {
            let u: Vec<f64> = dir.iter().map(|d| d * s).collect();
            image(&u).map(|p| norm(&p))
        };
        if let Some(point) = invert_radial(&rho, target, r).and_then(|s| {
            let u: Vec<f64> = dir.iter().map(|d| d * s).collect();
            image(&u)
        }) {
            let np = norm(&point);
            if np >= band.0 && np <= band.1 && point.iter().all(|x| x.is_finite()) {
                stats.accepted += 1;
                out.push(point);
                continue;
            }
        }
        // fallback: plain box rejection around the radial scale
        let scale = 3.0 * r;
        let u: Vec<f64> = (0..param_dim).map(|_| rng.gen_range(-scale..scale)).collect();
        if let Some(point) = image(&u) {
            let np = norm(&point);
            if np >= band.0 && np <= band.1 && point.iter().all(|x| x.is_finite()) {
                stats.accepted += 1;
                out.push(point);
            }
        }
    }
    Ok(())
}

/// Solve `rho(s) = target` for s > 0 by doubling out a bracket and bisecting.
fn invert_radial(rho: &dyn Fn(f64) -> Option<f64>, target: f64, r_hint: f64) -> Option<f64> {
    let mut s_hi = r_hint;
    let mut v_hi = rho(s_hi)?;
    let mut doublings = 0;
    while v_hi < target {
        s_hi *= 2.0;
        v_hi = rho(s_hi)?;
        doublings += 1;
        if doublings > 200 {
            return None;
        }
    }
    let mut s_lo = s_hi;
    let mut v_lo = v_hi;
    let mut halvings = 0;
    while v_lo > target {
        s_lo *= 0.5;
        v_lo = rho(s_lo)?;
        halvings += 1;
        if halvings > 2000 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (s_lo + s_hi);
        let v = rho(mid)?;
        if (v - target).abs() <= 1e-14 * target {
            return Some(mid);
        }
        if v < target {
            s_lo = mid;
        } else {
            s_hi = mid;
        }
        if (s_hi - s_lo) <= f64::EPSILON * s_hi {
            break;
        }
    }
    Some(0.5 * (s_lo + s_hi))
}

enum ProjectionOutcome {
    Converged(Point),
    Diverged,
}

/// Gauss-Newton projection onto the zero set of the defining expressions,
/// with central-difference Jacobians (no symbolic differentiation).
fn newton_project(defining: &[Expression], start: &[f64], r: f64) -> ProjectionOutcome {
    let n = start.len();
    let m = defining.len();
    let mut x = start.to_vec();
    let tol = NEWTON_TOL * (1.0 + r);
    for _ in 0..NEWTON_MAX_ITERS {
        let f: Option<Vec<f64>> = defining.iter().map(|e| e.eval_slice(&x).ok()).collect();
        let Some(f) = f else {
            return ProjectionOutcome::Diverged;
        };
        let fmax = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if fmax <= tol {
            return ProjectionOutcome::Converged(x);
        }
        // J[i][j] = d f_i / d x_j, central differences
        let h = 1e-7 * (1.0 + norm(&x));
        let mut jac = vec![vec![0.0; n]; m];
        for j in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            for i in 0..m {
                let (Ok(fp), Ok(fm)) = (defining[i].eval_slice(&xp), defining[i].eval_slice(&xm))
                else {
                    return ProjectionOutcome::Diverged;
                };
                jac[i][j] = (fp - fm) / (2.0 * h);
            }
        }
        // minimal-norm step: dx = J^T (J J^T)^{-1} f, with J J^T m x m
        let mut jjt = vec![vec![0.0; m]; m];
        for i in 0..m {
            for k in 0..m {
                jjt[i][k] = (0..n).map(|j| jac[i][j] * jac[k][j]).sum();
            }
        }
        let Some(lambda) = solve_small(&mut jjt, &f) else {
            return ProjectionOutcome::Diverged;
        };
        for j in 0..n {
            let step: f64 = (0..m).map(|i| jac[i][j] * lambda[i]).sum();
            x[j] -= step;
        }
        if !x.iter().all(|v| v.is_finite()) || norm(&x) > 100.0 * (r + 1.0) {
            return ProjectionOutcome::Diverged;
        }
    }
    ProjectionOutcome::Diverged
}

/// Gaussian elimination with partial pivoting for tiny systems.
fn solve_small(a: &mut [Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = b.len();
    let mut x = b.to_vec();
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        x.swap(col, pivot);
        for row in (col + 1)..m {
            let factor = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= factor * a[col][k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..m).rev() {
        x[col] /= a[col][col];
        for row in 0..col {
            x[row] -= a[row][col] * x[col];
            a[row][col] = 0.0;
        }
    }
    Some(x)
}
