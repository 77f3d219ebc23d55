//! Uniform hash-grid nearest-neighbor index. Cells are addressed by integer
//! coordinates; queries expand over cell rings until the ring's minimum
//! possible distance exceeds the best hit, so results are exact.

use rustc_hash::FxHashMap;

use super::dist;

/// Fixed-width cell key; the spec caps the ambient dimension at 4, padding
/// keeps the key hashable without per-query allocation.
const MAX_DIM: usize = 4;
type CellKey = [i64; MAX_DIM];

#[derive(Debug, Clone)]
pub struct GridIndex {
    cell: f64,
    dim: usize,
    cells: FxHashMap<CellKey, Vec<usize>>,
    points: Vec<Vec<f64>>,
}

impl GridIndex {
    pub fn build(points: Vec<Vec<f64>>) -> GridIndex {
        assert!(!points.is_empty(), "grid index needs at least one point");
        let dim = points[0].len();
        assert!(dim <= MAX_DIM, "grid index supports dimension <= {MAX_DIM}");
        // Aim for a few points per occupied cell: cell size from the bounding
        // box volume spread over the point count.
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in &points {
            for (i, &x) in p.iter().enumerate() {
                lo[i] = lo[i].min(x);
                hi[i] = hi[i].max(x);
            }
        }
        let mut extent: f64 = 0.0;
        for i in 0..dim {
            extent = extent.max(hi[i] - lo[i]);
        }
        let cell = if extent > 0.0 {
            (extent / (points.len() as f64).powf(1.0 / dim as f64)).max(extent * 1e-9)
        } else {
            1.0
        };
        let mut cells: FxHashMap<CellKey, Vec<usize>> = FxHashMap::default();
        for (idx, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(idx);
        }
        GridIndex {
            cell,
            dim,
            cells,
            points,
        }
    }

    fn key(p: &[f64], cell: f64) -> CellKey {
        let mut k = [0i64; MAX_DIM];
        for (i, &x) in p.iter().enumerate() {
            k[i] = (x / cell).floor() as i64;
        }
        k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Index and distance of the nearest stored point.
    pub fn nearest(&self, q: &[f64]) -> (usize, f64) {
        debug_assert_eq!(q.len(), self.dim);
        let center = Self::key(q, self.cell);
        // seed with an arbitrary stored point so the ring bound terminates
        let mut best = (0usize, dist(q, &self.points[0]));
        let mut ring = 0i64;
        // anything on ring k is at distance > (k-1)*cell from q
        while ((ring - 1).max(0) as f64) * self.cell <= best.1 {
            self.for_ring(&center, ring, &mut |key| {
                if let Some(bucket) = self.cells.get(key) {
                    for &idx in bucket {
                        let d = dist(q, &self.points[idx]);
                        if d < best.1 {
                            best = (idx, d);
                        }
                    }
                }
            });
            ring += 1;
        }
        best
    }

    /// Nearest stored point other than `exclude` (for gap estimation over
    /// the stored points themselves).
    pub fn nearest_excluding(&self, q: &[f64], exclude: usize) -> (usize, f64) {
        let center = Self::key(q, self.cell);
        let seed_idx = if exclude == 0 { 1 } else { 0 };
        let mut best = (seed_idx, dist(q, &self.points[seed_idx]));
        let mut ring = 0i64;
        while ((ring - 1).max(0) as f64) * self.cell <= best.1 {
            self.for_ring(&center, ring, &mut |key| {
                if let Some(bucket) = self.cells.get(key) {
                    for &idx in bucket {
                        if idx == exclude {
                            continue;
                        }
                        let d = dist(q, &self.points[idx]);
                        if d < best.1 {
                            best = (idx, d);
                        }
                    }
                }
            });
            ring += 1;
        }
        best
    }

    /// Nearest stored point, searching only within `cap` of `q`. Returns
    /// `None` when every stored point is farther than `cap`; much cheaper
    /// than [`nearest`](Self::nearest) for membership-style queries with a
    /// small threshold.
    pub fn nearest_within(&self, q: &[f64], cap: f64) -> Option<(usize, f64)> {
        let center = Self::key(q, self.cell);
        let max_ring = (cap / self.cell).ceil() as i64 + 1;
        // a wide cap on a lower-dimensional cloud probes mostly empty cells;
        // past the break-even point a flat scan is cheaper and exact
        let probes = (2.0 * max_ring as f64 + 1.0).powi(self.dim as i32);
        if probes > self.points.len() as f64 {
            return self.nearest_within_linear(q, cap);
        }
        let mut best = (usize::MAX, f64::INFINITY);
        for ring in 0..=max_ring {
            if ((ring - 1).max(0) as f64) * self.cell > best.1 {
                break;
            }
            self.for_ring(&center, ring, &mut |key| {
                if let Some(bucket) = self.cells.get(key) {
                    for &idx in bucket {
                        let d = dist(q, &self.points[idx]);
                        if d < best.1 {
                            best = (idx, d);
                        }
                    }
                }
            });
        }
        (best.1 <= cap).then_some(best)
    }

    fn nearest_within_linear(&self, q: &[f64], cap: f64) -> Option<(usize, f64)> {
        let cap2 = cap * cap;
        let mut best = (usize::MAX, f64::INFINITY);
        for (idx, p) in self.points.iter().enumerate() {
            let mut d2 = 0.0;
            for (a, b) in q.iter().zip(p) {
                d2 += (a - b) * (a - b);
            }
            if d2 <= cap2 && d2 < best.1 {
                best = (idx, d2);
            }
        }
        (best.0 != usize::MAX).then(|| (best.0, best.1.sqrt()))
    }

    /// Visit every cell key on the Chebyshev ring of the given radius.
    fn for_ring(&self, center: &CellKey, ring: i64, f: &mut impl FnMut(&CellKey)) {
        let dim = self.dim;
        let mut key = [0i64; MAX_DIM];
        let mut offsets = [0i64; MAX_DIM];
        offsets[..dim].fill(-ring);
        loop {
            if offsets.iter().any(|o| o.abs() == ring) || ring == 0 {
                for i in 0..dim {
                    key[i] = center[i] + offsets[i];
                }
                f(&key);
            }
            // odometer over [-ring, ring]^dim
            let mut i = 0;
            loop {
                if i == dim {
                    return;
                }
                offsets[i] += 1;
                if offsets[i] > ring {
                    offsets[i] = -ring;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    /// All stored indices within distance `radius` of `q`.
    pub fn within(&self, q: &[f64], radius: f64) -> Vec<usize> {
        let center = Self::key(q, self.cell);
        let reach = (radius / self.cell).ceil() as i64 + 1;
        let mut out = Vec::new();
        for ring in 0..=reach {
            self.for_ring(&center, ring, &mut |key| {
                if let Some(bucket) = self.cells.get(key) {
                    for &idx in bucket {
                        if dist(q, &self.points[idx]) <= radius {
                            out.push(idx);
                        }
                    }
                }
            });
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in [1usize, 2, 3, 4] {
            let pts: Vec<Vec<f64>> = (0..300)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let grid = GridIndex::build(pts.clone());
            for _ in 0..100 {
                let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let brute = pts
                    .iter()
                    .map(|p| dist(&q, p))
                    .fold(f64::INFINITY, f64::min);
                let (_, d) = grid.nearest(&q);
                assert!((d - brute).abs() < 1e-12, "dim {dim}: {d} vs {brute}");
            }
        }
    }

    #[test]
    fn within_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let grid = GridIndex::build(pts.clone());
        for _ in 0..50 {
            let q = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let r = rng.gen_range(0.05..0.8);
            let mut brute: Vec<usize> = (0..pts.len())
                .filter(|&i| dist(&q, &pts[i]) <= r)
                .collect();
            brute.sort_unstable();
            assert_eq!(grid.within(&q, r), brute);
        }
    }
}
