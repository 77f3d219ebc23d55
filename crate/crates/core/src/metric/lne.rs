//! LNE scan: compare inner and outer distances of same-shell pairs across a
//! ladder of scales and classify how their ratio behaves as r → 0.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::germ::{dist, sample_shell, GermSpec, ShellCloud};
use crate::seed::derive_seed;

use super::fit::{fit_power_law, ScalingFit};
use super::graph::{build_adaptive_graph, build_neighborhood_graph, dijkstra_to_set};
use super::MetricError;

/// How connection radii are chosen when discretizing the germ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsPolicy {
    /// Per-vertex radius = `scale` times the local 4th-nearest-neighbor
    /// distance; tracks density across decades of scale.
    Adaptive { scale: f64 },
    /// One global radius for the whole graph.
    Fixed { eps: f64 },
}

impl Default for EpsPolicy {
    fn default() -> Self {
        EpsPolicy::Adaptive { scale: 2.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    /// nominal radius of the shell both endpoints belong to
    pub r: f64,
    pub d_out: f64,
    pub d_in: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LneVerdict {
    LneConsistent,
    NotLnePolynomial,
    NotLneSlowDivergence,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LneReport {
    pub germ: String,
    pub seed: u64,
    /// all recorded pairs (random partners plus per-shell extremal ones)
    pub pairs: Vec<PairSample>,
    /// per scan shell, the pair maximizing d_in/d_out
    pub extremal: Vec<PairSample>,
    /// (r_j, max d_in/d_out observed on that shell)
    pub ratio_by_shell: Vec<(f64, f64)>,
    /// d_in vs d_out fit over the extremal pairs
    pub fit: Option<ScalingFit>,
    /// d_in/d_out growth from the largest to the smallest scan radius
    pub growth: f64,
    /// max-ratio trend vs r (negative slope = ratio grows as r shrinks)
    pub ratio_slope: Option<f64>,
    pub verdict: LneVerdict,
    pub disconnected_warning: bool,
    // thresholds the verdict was computed with
    pub beta_consistent_threshold: f64,
    pub beta_polynomial_threshold: f64,
    pub growth_threshold: f64,
}

const GRAPH_SHELLS_PER_DECADE: usize = 12;
/// dense shells: branch pairs whose separation shrinks like r² stay many
/// local spacings apart at the scan scales, so no spurious cross edges form
const GRAPH_POINTS_PER_SHELL: usize = 960;
const GRAPH_WIDTH: f64 = 0.12;
/// how far below the smallest scan radius the ladder (and thus the
/// origin-routing floor) extends, in decades
const FLOOR_DECADES: f64 = 1.2;

const BETA_CONSISTENT: f64 = 0.95;
const BETA_POLYNOMIAL: f64 = 0.9;
const GROWTH_FACTOR: f64 = 2.0;
/// a polynomial d_in ~ d_out^β with β < 1 forces the per-shell max ratio to
/// grow like a power of r; log-type divergence stays well above this slope
const RATIO_SLOPE_POLYNOMIAL: f64 = -0.25;

/// Scan the germ over the given shell radii and classify its inner/outer
/// distance ratio. `pairs_per_shell` counts Dijkstra sources per shell; each
/// source is compared against every same-shell vertex, so the extremal
/// (max-ratio) partner is found exactly for the sampled sources.
pub fn lne_scan(
    germ: &GermSpec,
    radii: &[f64],
    pairs_per_shell: usize,
    eps_policy: EpsPolicy,
    seed: u64,
) -> Result<LneReport, MetricError> {
    assert!(!radii.is_empty() && pairs_per_shell >= 1);
    let mut radii = radii.to_vec();
    radii.sort_unstable_by(f64::total_cmp);
    let r_lo = radii[0];
    let r_hi = *radii.last().unwrap();
    assert!(r_lo > 0.0 && r_hi <= 1.0, "scan radii must lie in (0, 1]");

    // dense overlapping ladder so shortest paths can travel between scales;
    // extends below the scan window to keep origin routing accurate
    let lo_decade = r_lo.log10() - FLOOR_DECADES;
    let hi_decade = r_hi.log10();
    let n_shells =
        ((hi_decade - lo_decade) * GRAPH_SHELLS_PER_DECADE as f64).ceil() as usize + 1;
    let mut clouds: Vec<ShellCloud> = Vec::with_capacity(n_shells);
    for j in 0..n_shells {
        let r = 10f64.powf(lo_decade + j as f64 / GRAPH_SHELLS_PER_DECADE as f64);
        clouds.push(sample_shell(
            germ,
            r.min(1.0),
            GRAPH_POINTS_PER_SHELL,
            GRAPH_WIDTH,
            derive_seed(seed, j as u64),
        )?);
    }
    let graph = match eps_policy {
        EpsPolicy::Adaptive { scale } => build_adaptive_graph(&clouds, scale, true),
        EpsPolicy::Fixed { eps } => build_neighborhood_graph(&clouds, eps, true),
    };

    // map each requested scan radius to the nearest ladder shell
    let mut scan_shells: Vec<usize> = radii
        .iter()
        .map(|&r| {
            (0..clouds.len())
                .min_by(|&a, &b| {
                    (clouds[a].r - r).abs().total_cmp(&(clouds[b].r - r).abs())
                })
                .unwrap()
        })
        .collect();
    scan_shells.dedup();

    let mut pairs = Vec::new();
    let mut extremal = Vec::new();
    let mut ratio_by_shell = Vec::new();
    for (scan_idx, &shell) in scan_shells.iter().enumerate() {
        let verts = graph.shell_vertices(shell);
        let r = clouds[shell].r;
        if verts.len() < 2 {
            return Err(MetricError::InsufficientPairs {
                r,
                count: verts.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 10_000 + scan_idx as u64));
        let mut sources = verts.clone();
        sources.shuffle(&mut rng);
        sources.truncate(pairs_per_shell);
        let mut best: Option<PairSample> = None;
        for &a in &sources {
            let din = dijkstra_to_set(&graph, a, &verts);
            let mut shell_best: Option<PairSample> = None;
            for &b in &verts {
                if b == a || !din[b].is_finite() {
                    continue;
                }
                let d_out = dist(&graph.points[a], &graph.points[b]);
                if d_out == 0.0 {
                    continue;
                }
                // path length can round a hair below the chord; clamp so the
                // d_in >= d_out invariant survives float summation
                let d_in = din[b].max(d_out);
                let sample = PairSample { r, d_out, d_in };
                let better = |cur: &Option<PairSample>| {
                    cur.map_or(true, |c| d_in / d_out > c.d_in / c.d_out)
                };
                if better(&shell_best) {
                    shell_best = Some(sample);
                }
                if better(&best) {
                    best = Some(sample);
                }
            }
            // a few random partners, for the raw pair table
            for _ in 0..3 {
                let b = verts[rng.gen_range(0..verts.len())];
                if b != a && din[b].is_finite() {
                    let d_out = dist(&graph.points[a], &graph.points[b]);
                    if d_out > 0.0 {
                        pairs.push(PairSample {
                            r,
                            d_out,
                            d_in: din[b].max(d_out),
                        });
                    }
                }
            }
            if let Some(s) = shell_best {
                pairs.push(s);
            }
        }
        let best = best.ok_or(MetricError::InsufficientPairs { r, count: 1 })?;
        extremal.push(best);
        ratio_by_shell.push((r, best.d_in / best.d_out));
    }

    let fit = fit_power_law(
        &extremal
            .iter()
            .map(|p| (p.d_out, p.d_in))
            .collect::<Vec<_>>(),
    )
    .ok();
    // ratio at the small end vs the large end, each smoothed over two shells
    let geo2 = |a: (f64, f64), b: (f64, f64)| (a.1 * b.1).sqrt();
    let k = ratio_by_shell.len();
    let (growth, ratio_slope) = if k >= 2 {
        let g = geo2(ratio_by_shell[0], ratio_by_shell[1])
            / geo2(ratio_by_shell[k - 1], ratio_by_shell[k - 2]);
        // endpoint log-log slope of max-ratio vs r (negative when the ratio
        // grows toward 0); a plain power law r^c shows up as c here
        let span = ratio_by_shell[0].0 / ratio_by_shell[k - 1].0;
        (g, Some(g.ln() / span.ln()))
    } else {
        (1.0, None)
    };

    let verdict = match (&fit, ratio_slope) {
        (Some(f), Some(rs)) => {
            if f.slope <= BETA_POLYNOMIAL && rs <= RATIO_SLOPE_POLYNOMIAL {
                LneVerdict::NotLnePolynomial
            } else if growth >= GROWTH_FACTOR {
                LneVerdict::NotLneSlowDivergence
            } else if f.slope >= BETA_CONSISTENT && growth <= 1.25 {
                LneVerdict::LneConsistent
            } else {
                LneVerdict::Inconclusive
            }
        }
        _ => LneVerdict::Inconclusive,
    };

    Ok(LneReport {
        germ: germ.name.clone(),
        seed,
        pairs,
        extremal,
        ratio_by_shell,
        fit,
        growth,
        ratio_slope,
        verdict,
        disconnected_warning: graph.disconnected_warning,
        beta_consistent_threshold: BETA_CONSISTENT,
        beta_polynomial_threshold: BETA_POLYNOMIAL,
        growth_threshold: GROWTH_FACTOR,
    })
}

/// Log-spaced scan radii, `per_decade` per decade, inclusive of both ends.
pub fn log_spaced_radii(r_lo: f64, r_hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(r_lo > 0.0 && r_hi > r_lo);
    let lo = r_lo.log10();
    let hi = r_hi.log10();
    let n = ((hi - lo) * per_decade as f64).ceil() as usize;
    (0..=n)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::load_germ;

    #[test]
    fn line_is_lne_consistent() {
        let germ = load_germ("line").unwrap();
        let radii = log_spaced_radii(1e-3, 0.5, 5);
        let report = lne_scan(&germ, &radii, 12, EpsPolicy::default(), 42).unwrap();
        let fit = report.fit.as_ref().expect("fit");
        assert!(
            fit.slope > 0.97 && fit.slope < 1.03,
            "beta {} growth {}",
            fit.slope,
            report.growth
        );
        assert_eq!(report.verdict, LneVerdict::LneConsistent);
        for p in &report.pairs {
            assert!(p.d_in >= p.d_out);
        }
    }

    #[test]
    fn parabola_pair_is_polynomially_non_lne() {
        let germ = load_germ("parabola_pair").unwrap();
        let radii = log_spaced_radii(0.05, 0.45, 12);
        let report = lne_scan(&germ, &radii, 12, EpsPolicy::default(), 42).unwrap();
        let fit = report.fit.as_ref().expect("fit");
        assert!(
            fit.slope > 0.45 && fit.slope < 0.55,
            "beta {} ratio_slope {:?}",
            fit.slope,
            report.ratio_slope
        );
        assert_eq!(report.verdict, LneVerdict::NotLnePolynomial);
    }

    #[test]
    fn log_curve_diverges_slowly() {
        let germ = load_germ("log_curve").unwrap();
        let radii = log_spaced_radii(1e-6, 1e-2, 3);
        let report = lne_scan(&germ, &radii, 12, EpsPolicy::default(), 42).unwrap();
        assert!(
            report.growth >= 2.0,
            "growth {} ratios {:?}",
            report.growth,
            report.ratio_by_shell
        );
        assert_eq!(report.verdict, LneVerdict::NotLneSlowDivergence);
    }

    #[test]
    fn finite_ray_cones_are_never_polynomial() {
        for name in ["halfline_z", "two_ray_cone"] {
            let germ = load_germ(name).unwrap();
            let radii = log_spaced_radii(1e-3, 0.5, 5);
            let report = lne_scan(&germ, &radii, 10, EpsPolicy::default(), 7).unwrap();
            let fit = report.fit.as_ref().expect("fit");
            assert!(fit.slope >= 0.95, "{name}: beta {}", fit.slope);
            assert_ne!(report.verdict, LneVerdict::NotLnePolynomial, "{name}");
        }
    }
}
