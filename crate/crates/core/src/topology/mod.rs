//! Betti numbers b0, b1 of sampled links via Rips 2-complexes. Equality of
//! Betti numbers is a necessary condition for the homotopy equivalences the
//! theory asserts, never a proof; every report says so.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::germ::{dist, norm, unit_vector, GermError, GermKind, GermSpec, GridIndex, Point};
use crate::seatangle::STParams;
use crate::seed::derive_seed;
use crate::tangent::link_sample;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Vietoris–Rips 2-complex at scale `eps`: all edges and triangles with
/// pairwise vertex distances `<= eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct RipsComplex {
    pub vertices: Vec<Point>,
    pub eps: f64,
    /// sorted index pairs, lexicographic
    pub edges: Vec<(usize, usize)>,
    /// sorted index triples, lexicographic
    pub triangles: Vec<(usize, usize, usize)>,
}

/// Betti numbers of one complex, with the scale-stability flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BettiReport {
    pub b0: usize,
    pub b1: usize,
    pub eps: f64,
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
    /// same (b0, b1) at eps and 1.5 eps
    pub stable: bool,
    /// Betti equality is a necessary condition for homotopy equivalence,
    /// not a certificate
    pub necessary_condition_only: bool,
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error(transparent)]
    Germ(#[from] GermError),
    #[error("no tested scale gave stable Betti numbers (gap = {gap:.3e})")]
    UnstableScale { gap: f64 },
    #[error("sea-tangle link is empty at r = {r}")]
    EmptyLink { r: f64 },
}

/// unit-link sample size for cone-shaped germs without an explicit link
const LINK_SAMPLE_FALLBACK: usize = 300;

/// All pairs at distance `<= eps` and all triangles with three such edges.
pub fn build_rips(points: &[Point], eps: f64) -> RipsComplex {
    assert!(eps > 0.0);
    let n = points.len();
    let mut edges = Vec::new();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    if n > 0 {
        let grid = GridIndex::build(points.to_vec());
        for i in 0..n {
            for j in grid.within(&points[i], eps) {
                if j > i {
                    edges.push((i, j));
                    neighbors[i].push(j);
                }
            }
        }
    }
    let mut triangles = Vec::new();
    for &(i, j) in &edges {
        // neighbors are ascending, so k > j > i keeps triples sorted
        for &k in &neighbors[j] {
            if k > j && neighbors[i].binary_search(&k).is_ok() {
                triangles.push((i, j, k));
            }
        }
    }
    RipsComplex {
        vertices: points.to_vec(),
        eps,
        edges,
        triangles,
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Connected components of the 1-skeleton.
pub fn betti0(c: &RipsComplex) -> usize {
    let mut uf = UnionFind::new(c.vertices.len());
    let mut components = c.vertices.len();
    for &(i, j) in &c.edges {
        if uf.union(i, j) {
            components -= 1;
        }
    }
    components
}

/// Rank over Z/2 of a sparse matrix given as rows of sorted column indices.
fn z2_rank(mut rows: Vec<Vec<usize>>) -> usize {
    let mut pivot_of_col: std::collections::HashMap<usize, usize> =
        std::collections::HashMap::new();
    let mut rank = 0;
    for r in 0..rows.len() {
        loop {
            let Some(&lead) = rows[r].first() else { break };
            match pivot_of_col.get(&lead) {
                None => {
                    pivot_of_col.insert(lead, r);
                    rank += 1;
                    break;
                }
                Some(&p) => {
                    // symmetric difference of sorted index lists = Z/2 row add
                    let merged = xor_sorted(&rows[r], &rows[p]);
                    rows[r] = merged;
                }
            }
        }
    }
    rank
}

fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out
}

/// First Betti number over Z/2: `|E| - |V| + b0 - rank(boundary_2)`.
pub fn betti1(c: &RipsComplex) -> usize {
    let b0 = betti0(c);
    let edge_id: std::collections::HashMap<(usize, usize), usize> = c
        .edges
        .iter()
        .enumerate()
        .map(|(k, &e)| (e, k))
        .collect();
    let rows: Vec<Vec<usize>> = c
        .triangles
        .iter()
        .map(|&(i, j, k)| {
            let mut row = vec![edge_id[&(i, j)], edge_id[&(i, k)], edge_id[&(j, k)]];
            row.sort_unstable();
            row
        })
        .collect();
    let rank = z2_rank(rows);
    c.edges.len() + b0 - c.vertices.len() - rank
}

/// b0 recomputed as `|V| - rank(boundary_1)`; cross-check for the
/// union-find count.
pub fn betti0_via_rank(c: &RipsComplex) -> usize {
    let rows: Vec<Vec<usize>> = c.edges.iter().map(|&(i, j)| vec![i, j]).collect();
    c.vertices.len() - z2_rank(rows)
}

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

const EPS_MULTIPLES: [f64; 3] = [2.0, 3.0, 4.0];

/// Collapse points closer than a relative tolerance: repeated samples of a
/// finite link land on the same position up to rounding, and duplicate
/// vertices only inflate the complex.
fn dedup_points(points: &[Point]) -> Vec<Point> {
    let scale = points.iter().map(|p| norm(p)).fold(0.0f64, f64::max);
    let tol = scale.max(1e-300) * 1e-9;
    let mut kept: Vec<Point> = Vec::new();
    for p in points {
        if kept.iter().all(|q| dist(p, q) > tol) {
            kept.push(p.clone());
        }
    }
    kept
}

/// Betti numbers of a point cloud at an auto-selected scale: the smallest
/// multiple of the sampling gap in {2, 3, 4} whose (b0, b1) agree at eps
/// and 1.5 eps. Scales at or beyond half the diameter are degenerate and
/// rejected; if every candidate is degenerate the cloud is a finite set of
/// atoms and is read as such (one component per point, no loops).
pub fn stable_betti(points: &[Point]) -> Result<BettiReport, TopologyError> {
    let points = dedup_points(points);
    if points.len() <= 1 {
        return Ok(BettiReport {
            b0: points.len(),
            b1: 0,
            eps: 0.0,
            vertices: points.len(),
            edges: 0,
            triangles: 0,
            stable: true,
            necessary_condition_only: true,
        });
    }
    let gap = sampling_gap(&points).max(1e-12);
    let diameter = points
        .iter()
        .flat_map(|p| points.iter().map(move |q| dist(p, q)))
        .fold(0.0f64, f64::max);
    let mut tried_any = false;
    for mult in EPS_MULTIPLES {
        let eps = mult * gap;
        if eps >= diameter / 2.0 {
            continue;
        }
        tried_any = true;
        let c = build_rips(&points, eps);
        let (b0, b1) = (betti0(&c), betti1(&c));
        let c15 = build_rips(&points, 1.5 * eps);
        let stable = b0 == betti0(&c15) && b1 == betti1(&c15);
        if stable {
            return Ok(BettiReport {
                b0,
                b1,
                eps,
                vertices: c.vertices.len(),
                edges: c.edges.len(),
                triangles: c.triangles.len(),
                stable,
                necessary_condition_only: true,
            });
        }
    }
    if !tried_any {
        // every candidate scale would swallow the whole cloud: the link is
        // a handful of isolated atoms
        return Ok(BettiReport {
            b0: points.len(),
            b1: 0,
            eps: 0.0,
            vertices: points.len(),
            edges: 0,
            triangles: 0,
            stable: true,
            necessary_condition_only: true,
        });
    }
    Err(TopologyError::UnstableScale { gap })
}

/// Betti numbers of the germ's link at radius `r`.
pub fn link_betti(germ: &GermSpec, r: f64, n: usize, seed: u64) -> Result<BettiReport, TopologyError> {
    let points = link_sample(germ, r, n, seed)?;
    stable_betti(&points)
}

/// Betti numbers of the sea-tangle link: uniform sphere points `s` with
/// `dist(s, A) <= C r^{d-1}` after rescaling to `S(0, r)`. Requires a cone
/// germ, whose distances can be measured against its own link sample.
pub fn st_link_betti(
    germ: &GermSpec,
    st: &STParams,
    r: f64,
    n: usize,
    seed: u64,
) -> Result<BettiReport, TopologyError> {
    let dim = germ.ambient_dim;
    // membership dist(p, A) <= C |p|^d on S(0, r) rescales to unit-sphere
    // points s with dist(s, A) <= C r^{d-1}; for a cone the distance on the
    // unit sphere is measured against its unit link. Cone specs carry the
    // link explicitly; other cone-shaped germs are sampled at radius r and
    // rescaled (exact for cones, which is the operation's hypothesis).
    let link: Vec<Point> = match &germ.kind {
        GermKind::ConeOverPoints { link_points } => link_points
            .iter()
            .map(|v| {
                let m = norm(v);
                v.iter().map(|x| x / m).collect()
            })
            .collect(),
        _ => link_sample(germ, r, LINK_SAMPLE_FALLBACK, derive_seed(seed, 0xE1))?
            .iter()
            .map(|v| v.iter().map(|x| x / r).collect())
            .collect(),
    };
    let grid = GridIndex::build(link);
    let width = st.c * r.powf(st.d - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xE0));
    let mut kept = Vec::new();
    for _ in 0..n {
        let s = unit_vector(&mut rng, dim);
        // a band wider than the unit sphere's diameter keeps everything
        if width >= 2.0 || grid.nearest(&s).1 <= width {
            kept.push(s);
        }
    }
    if kept.is_empty() {
        return Err(TopologyError::EmptyLink { r });
    }
    stable_betti(&kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::load_germ;
    use rand::Rng;

    fn circle(n: usize, r: f64) -> Vec<Point> {
        (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                vec![r * t.cos(), r * t.sin()]
            })
            .collect()
    }

    #[test]
    fn rips_on_tiny_configurations() {
        let c = build_rips(&[vec![0.0, 0.0], vec![3.0, 0.0]], 1.0);
        assert_eq!((c.edges.len(), c.triangles.len()), (0, 0));
        assert_eq!(betti0(&c), 2);

        let tri = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.5, 3f64.sqrt() / 2.0],
        ];
        let c = build_rips(&tri, 1.0 + 1e-12);
        assert_eq!(c.edges.len(), 3);
        assert_eq!(c.triangles, vec![(0, 1, 2)]);
        assert_eq!((betti0(&c), betti1(&c)), (1, 0));
    }

    #[test]
    fn circle_has_betti_one_one_across_scales() {
        let pts = circle(100, 1.0);
        let gap = 2.0 * std::f64::consts::PI / 100.0;
        for mult in [2.0, 4.0, 8.0, 20.0] {
            let c = build_rips(&pts, mult * gap);
            assert_eq!(
                (betti0(&c), betti1(&c)),
                (1, 1),
                "eps = {} gap multiples",
                mult
            );
        }
        let report = stable_betti(&pts).unwrap();
        assert_eq!((report.b0, report.b1), (1, 1));
        assert!(report.stable);
    }

    #[test]
    fn trees_and_filled_triangles_have_no_loops() {
        // path graph: 5 aligned points, eps covers only adjacent pairs
        let pts: Vec<Point> = (0..5).map(|k| vec![k as f64, 0.0]).collect();
        let c = build_rips(&pts, 1.1);
        assert_eq!(c.triangles.len(), 0);
        assert_eq!((betti0(&c), betti1(&c)), (1, 0));
    }

    #[test]
    fn betti0_union_find_agrees_with_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let pts: Vec<Point> = (0..40)
                .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let c = build_rips(&pts, rng.gen_range(0.1..0.8));
            assert_eq!(betti0(&c), betti0_via_rank(&c));
        }
    }

    #[test]
    fn growth_bookkeeping_on_random_sequences() {
        // adding an edge merges two components xor opens a loop; adding a
        // triangle never increases b1
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let pts: Vec<Point> = (0..14)
                .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let full = build_rips(&pts, rng.gen_range(0.4..0.9));
            let mut c = RipsComplex {
                vertices: pts.clone(),
                eps: full.eps,
                edges: Vec::new(),
                triangles: Vec::new(),
            };
            let mut b0 = betti0(&c);
            let mut b1 = betti1(&c);
            for &e in &full.edges {
                c.edges.push(e);
                c.edges.sort_unstable();
                let (nb0, nb1) = (betti0(&c), betti1(&c));
                let merged = nb0 + 1 == b0 && nb1 == b1;
                let looped = nb0 == b0 && nb1 == b1 + 1;
                assert!(merged ^ looped, "edge {e:?}: ({b0},{b1}) -> ({nb0},{nb1})");
                b0 = nb0;
                b1 = nb1;
                // close any triangles completed by this edge, in order
                for &t in &full.triangles {
                    let has = |x: (usize, usize)| c.edges.binary_search(&x).is_ok();
                    if !c.triangles.contains(&t) && has((t.0, t.1)) && has((t.0, t.2)) && has((t.1, t.2))
                    {
                        c.triangles.push(t);
                        let nb1 = betti1(&c);
                        assert!(nb1 <= b1, "triangle {t:?} raised b1");
                        b1 = nb1;
                    }
                }
            }
        }
    }

    #[test]
    fn catalog_links_have_the_expected_betti_numbers() {
        let plane = load_germ("plane").unwrap();
        let report = link_betti(&plane, 0.1, 150, 13).unwrap();
        assert_eq!((report.b0, report.b1), (1, 1), "{report:?}");

        let hl = load_germ("halfline_z").unwrap();
        let report = link_betti(&hl, 0.1, 60, 13).unwrap();
        assert_eq!((report.b0, report.b1), (1, 0), "{report:?}");

        let cc = load_germ("circle_cone").unwrap();
        let report = link_betti(&cc, 0.1, 300, 13).unwrap();
        assert_eq!((report.b0, report.b1), (1, 1), "{report:?}");

        let line = load_germ("line").unwrap();
        let report = link_betti(&line, 0.1, 60, 13).unwrap();
        assert_eq!((report.b0, report.b1), (2, 0), "{report:?}");
    }

    #[test]
    fn sea_tangle_links_match_the_cone_links() {
        let st = STParams::new(1.5, 1.0);
        let r = 0.05;
        for name in ["halfline_z", "circle_cone", "two_ray_cone"] {
            let germ = load_germ(name).unwrap();
            let with_band = st_link_betti(&germ, &st, r, 4000, 14).unwrap();
            let bare = link_betti(&germ, r, 200, 14).unwrap();
            assert_eq!(
                (with_band.b0, with_band.b1),
                (bare.b0, bare.b1),
                "{name}: st {with_band:?} vs link {bare:?}"
            );
        }
    }

    #[test]
    fn degenerate_band_swallows_the_sphere() {
        let hl = load_germ("halfline_z").unwrap();
        // C r^{d-1} >= 2r: whole sphere kept, so (1, 0) in R^3
        let st = STParams::new(1.5, 50.0);
        let report = st_link_betti(&hl, &st, 0.05, 800, 15).unwrap();
        assert_eq!((report.b0, report.b1), (1, 0), "{report:?}");
    }
}
