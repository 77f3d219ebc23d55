//! Approximate distance queries against a ladder of shell clouds.
//!
//! Clouds are subsets of the germ (up to projection tolerance), so the
//! reported distance is one-sided: `dist(p, X) <= d_hat <= dist(p, X) +
//! delta` whenever the true nearest region is covered by the consulted
//! shells, where `delta` is the sampling gap of the shell that answered.

use crate::seed::derive_seed;

use super::{norm, sample_shell, GermError, GermSpec, GridIndex, Point};

#[derive(Debug)]
pub struct OracleShell {
    pub r: f64,
    pub delta: f64,
    pub index: GridIndex,
    /// smallest and largest norm over the cloud: every stored point is at
    /// least `|norm(p) - norm|` away from a query `p`, so shells whose norm
    /// band is beyond a membership cap can be skipped wholesale
    pub norm_lo: f64,
    pub norm_hi: f64,
}

#[derive(Debug)]
pub struct DistanceOracle {
    pub germ: GermSpec,
    pub r_min: f64,
    pub r_max: f64,
    /// shells in increasing radius; unions may miss individual bands
    pub shells: Vec<OracleShell>,
}

/// Geometric ladder of indexed shells: `r_j = r_min * 10^(j / shells_per_decade)`.
pub fn build_oracle(
    germ: &GermSpec,
    r_min: f64,
    r_max: f64,
    shells_per_decade: u32,
    n_per_shell: usize,
    seed: u64,
) -> Result<DistanceOracle, GermError> {
    assert!(r_min > 0.0 && r_min < r_max && r_max <= 1.0);
    assert!(shells_per_decade >= 1);
    let q = 10f64.powf(1.0 / shells_per_decade as f64);
    let width = 0.5 * (q - 1.0) / (q + 1.0) * 2.0; // half-gap between rungs
    let width = width.clamp(0.05, 0.4);
    let mut shells = Vec::new();
    let mut j = 0u32;
    loop {
        let r = r_min * q.powi(j as i32);
        if r > r_max * (1.0 + 1e-12) {
            break;
        }
        match sample_shell(germ, r, n_per_shell, width, derive_seed(seed, j as u64)) {
            Ok(cloud) => {
                let mut norm_lo = f64::INFINITY;
                let mut norm_hi = 0.0f64;
                for p in &cloud.points {
                    let m = norm(p);
                    norm_lo = norm_lo.min(m);
                    norm_hi = norm_hi.max(m);
                }
                let index = GridIndex::build(cloud.points);
                let delta = max_nearest_gap(&index);
                shells.push(OracleShell {
                    r,
                    delta,
                    index,
                    norm_lo,
                    norm_hi,
                });
            }
            Err(GermError::EmptyShell { .. }) if matches!(germ.kind, super::GermKind::Union { .. }) =>
            {
                // a union part may legitimately miss a band
            }
            Err(e) => return Err(e),
        }
        j += 1;
    }
    if shells.is_empty() {
        return Err(GermError::EmptyShell {
            germ: germ.name.clone(),
            r: r_min,
        });
    }
    Ok(DistanceOracle {
        germ: germ.clone(),
        r_min,
        r_max,
        shells,
    })
}

/// Max over cloud points of the nearest-neighbor distance: the sampling
/// density estimate delta_j.
fn max_nearest_gap(index: &GridIndex) -> f64 {
    let pts = index.points();
    if pts.len() < 2 {
        return 0.0;
    }
    let mut gap: f64 = 0.0;
    for (i, p) in pts.iter().enumerate() {
        let (_, d) = index.nearest_excluding(p, i);
        gap = gap.max(d);
    }
    gap
}

impl DistanceOracle {
    pub fn coverage(&self) -> (f64, f64) {
        (self.r_min / 2.0, 2.0 * self.r_max)
    }

    /// Approximate distance with its one-sided error bound.
    pub fn distance(&self, p: &[f64]) -> Result<(f64, f64), GermError> {
        let np = norm(p);
        let (lo, hi) = self.coverage();
        if np < lo || np > hi {
            return Err(GermError::OutOfCoverage {
                norm: np,
                lo,
                hi,
            });
        }
        Ok(self.distance_unchecked(p, np))
    }

    /// Same as [`distance`](Self::distance) with the norm window already
    /// chosen; consults shells with `r_j` in `[|p|/4, 4|p|]` plus the nearest
    /// rungs on each side.
    pub fn distance_unchecked(&self, p: &[f64], np: f64) -> (f64, f64) {
        let mut best = f64::INFINITY;
        let mut err = f64::INFINITY;
        let lo = np / 4.0;
        let hi = np * 4.0;
        let mut below: Option<usize> = None;
        let mut above: Option<usize> = None;
        for (i, shell) in self.shells.iter().enumerate() {
            if shell.r < lo {
                below = Some(i);
            } else if shell.r > hi {
                if above.is_none() {
                    above = Some(i);
                }
            }
        }
        for (i, shell) in self.shells.iter().enumerate() {
            let in_window = shell.r >= lo && shell.r <= hi;
            if !(in_window || below == Some(i) || above == Some(i)) {
                continue;
            }
            let (_, d) = shell.index.nearest(p);
            if d < best {
                best = d;
                err = shell.delta;
            }
        }
        (best, err)
    }

    /// Bounded membership-style query: the distance if some cloud point is
    /// within `cap` of `p`, else `None` (meaning `dist > cap`). Shares the
    /// shell window of [`distance_unchecked`](Self::distance_unchecked).
    pub fn distance_within(&self, p: &[f64], np: f64, cap: f64) -> Option<(f64, f64)> {
        let lo = np / 4.0;
        let hi = np * 4.0;
        let mut best = f64::INFINITY;
        let mut err = f64::INFINITY;
        let mut below: Option<usize> = None;
        let mut above: Option<usize> = None;
        for (i, shell) in self.shells.iter().enumerate() {
            if shell.r < lo {
                below = Some(i);
            } else if shell.r > hi && above.is_none() {
                above = Some(i);
            }
        }
        for (i, shell) in self.shells.iter().enumerate() {
            let in_window = shell.r >= lo && shell.r <= hi;
            if !(in_window || below == Some(i) || above == Some(i)) {
                continue;
            }
            // every point of this shell is at least this far from p
            let norm_gap = if np < shell.norm_lo {
                shell.norm_lo - np
            } else if np > shell.norm_hi {
                np - shell.norm_hi
            } else {
                0.0
            };
            let budget = cap.min(best);
            if norm_gap > budget {
                continue;
            }
            if let Some((_, d)) = shell.index.nearest_within(p, budget) {
                if d < best {
                    best = d;
                    err = shell.delta;
                }
            }
        }
        (best <= cap).then_some((best, err))
    }

    /// Sampling gap of the shell whose radius is closest to `r` in log scale.
    pub fn delta_near(&self, r: f64) -> f64 {
        self.shells
            .iter()
            .min_by(|a, b| {
                let da = (a.r.ln() - r.ln()).abs();
                let db = (b.r.ln() - r.ln()).abs();
                da.partial_cmp(&db).unwrap()
            })
            .map(|s| s.delta)
            .unwrap_or(0.0)
    }
}

/// Distance with error bound, checking coverage first.
pub fn distance_to_germ(oracle: &DistanceOracle, p: &Point) -> Result<(f64, f64), GermError> {
    oracle.distance(p)
}
