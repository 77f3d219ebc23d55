//! Discrete carrier for the inner (geodesic) distance: shell samples joined
//! by short Euclidean edges, with shortest paths as upper-approximants.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::germ::{dist, norm, GridIndex, Point, ShellCloud};

use super::MetricError;

#[derive(Debug, Clone)]
pub struct NeighborhoodGraph {
    pub points: Vec<Point>,
    /// index of the source cloud for each vertex (origin excluded)
    pub shell_of: Vec<usize>,
    /// vertex index of the origin, when included (always the last vertex)
    pub origin: Option<usize>,
    /// undirected adjacency; weights are exact Euclidean distances
    pub adj: Vec<Vec<(u32, f64)>>,
    pub edge_count: usize,
    /// true when the component containing the origin (or vertex 0) misses
    /// more than 1% of vertices
    pub disconnected_warning: bool,
}

impl NeighborhoodGraph {
    pub fn vertex_count(&self) -> usize {
        self.points.len()
    }

    /// Vertices belonging to the given source cloud.
    pub fn shell_vertices(&self, shell: usize) -> Vec<usize> {
        (0..self.shell_of.len())
            .filter(|&v| self.shell_of[v] == shell)
            .collect()
    }

    fn add_edge(&mut self, a: usize, b: usize, w: f64) {
        self.adj[a].push((b as u32, w));
        self.adj[b].push((a as u32, w));
        self.edge_count += 1;
    }

    fn finish(&mut self) {
        for list in &mut self.adj {
            list.sort_unstable_by(|x, y| x.0.cmp(&y.0));
            list.dedup_by(|x, y| x.0 == y.0);
        }
        self.edge_count = self.adj.iter().map(|l| l.len()).sum::<usize>() / 2;
        let root = self.origin.unwrap_or(0);
        let reached = reachable_count(&self.adj, root);
        self.disconnected_warning =
            (self.points.len() - reached) as f64 > 0.01 * self.points.len() as f64;
    }
}

fn reachable_count(adj: &[Vec<(u32, f64)>], root: usize) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![root];
    seen[root] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &(u, _) in &adj[v] {
            if !seen[u as usize] {
                seen[u as usize] = true;
                count += 1;
                stack.push(u as usize);
            }
        }
    }
    count
}

fn gather(clouds: &[ShellCloud], include_origin: bool) -> NeighborhoodGraph {
    let mut points = Vec::new();
    let mut shell_of = Vec::new();
    for (j, cloud) in clouds.iter().enumerate() {
        for p in &cloud.points {
            points.push(p.clone());
            shell_of.push(j);
        }
    }
    assert!(!points.is_empty(), "need at least one sampled point");
    let dim = points[0].len();
    let origin = include_origin.then(|| {
        points.push(vec![0.0; dim]);
        points.len() - 1
    });
    let n = points.len();
    NeighborhoodGraph {
        points,
        shell_of,
        origin,
        adj: vec![Vec::new(); n],
        edge_count: 0,
        disconnected_warning: false,
    }
}

/// Largest nearest-neighbor gap among the cloud points (ignores the origin).
pub fn max_sampling_gap(points: &[Point]) -> f64 {
    if points.len() < 2 {
        return f64::INFINITY;
    }
    let grid = GridIndex::build(points.to_vec());
    let mut gap = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        gap = gap.max(grid.nearest_excluding(p, i).1);
    }
    gap
}

/// Fixed-radius graph: an edge between every pair of vertices at Euclidean
/// distance ≤ ε. The origin, when included, participates under the same rule.
pub fn build_neighborhood_graph(
    clouds: &[ShellCloud],
    eps: f64,
    include_origin: bool,
) -> NeighborhoodGraph {
    let mut g = gather(clouds, include_origin);
    if eps > 0.0 {
        let grid = GridIndex::build(g.points.clone());
        for i in 0..g.points.len() {
            let p = g.points[i].clone();
            for j in grid.within(&p, eps) {
                if j > i {
                    g.add_edge(i, j, dist(&p, &g.points[j]));
                }
            }
        }
    }
    g.finish();
    g
}

/// Adaptive graph for scale-spanning ladders: each vertex connects to
/// everything within `scale` times its 4th-nearest-neighbor distance, so the
/// connection radius tracks the local sampling density on every shell. The
/// origin is wired to every vertex of the innermost cloud (weight = its
/// norm), which is the route Union germs sharing only the origin must take.
pub fn build_adaptive_graph(
    clouds: &[ShellCloud],
    scale: f64,
    include_origin: bool,
) -> NeighborhoodGraph {
    const KNN: usize = 4;
    const SUCCESSOR_CAP: f64 = 0.08;
    // hard length cap on ε-ball edges, as a fraction of the vertex norm:
    // keeps density fluctuations from spawning long edges that could bridge
    // distinct branches whose separation shrinks faster than the norm
    const EPS_NORM_CAP: f64 = 0.005;
    let mut g = gather(clouds, include_origin);
    let n_cloud = g.shell_of.len();
    let grid = GridIndex::build(g.points[..n_cloud].to_vec());
    let mut nearest = Vec::with_capacity(n_cloud);
    for i in 0..n_cloud {
        nearest.push(k_nearest(&grid, &g.points[i], i, KNN));
    }
    for i in 0..n_cloud {
        let p = g.points[i].clone();
        // kNN edges first: they keep one-dimensional chains connected even
        // where random sampling leaves a gap larger than the ε ball
        for &(j, d) in &nearest[i] {
            g.add_edge(i, j, d);
        }
        let ni = norm(&p);
        let eps = (scale * nearest[i].last().map_or(0.0, |&(_, d)| d)).min(EPS_NORM_CAP * ni);
        // querying from the larger-ε side realizes the max(eps_i, eps_j)
        // rule; duplicate insertions are collapsed in finish()
        for j in grid.within(&p, eps) {
            if j != i {
                g.add_edge(i, j, dist(&p, &g.points[j]));
            }
        }
        // radial stitching: nearest vertex reached by moving genuinely
        // outward (norm gain at least half the edge length) and likewise
        // inward, capped at a fraction of the norm. Local ε balls can miss
        // across sampling gaps (kNN picks all k on the dense side); these
        // edges keep radial chains connected — every vertex chains inward,
        // norm strictly decreasing, down to the innermost shell. The
        // progress requirement rejects the shortest hops onto a nearby
        // parallel branch, which run almost tangentially and would otherwise
        // always beat a genuine gap bridge.
        for sign in [1.0f64, -1.0] {
            let mut step: Option<(usize, f64)> = None;
            for j in grid.within(&p, SUCCESSOR_CAP * ni) {
                if j != i {
                    let d = dist(&p, &g.points[j]);
                    if sign * (norm(&g.points[j]) - ni) >= 0.5 * d
                        && step.map_or(true, |(_, b)| d < b)
                    {
                        step = Some((j, d));
                    }
                }
            }
            if let Some((j, d)) = step {
                g.add_edge(i, j, d);
            }
        }
    }
    if let Some(o) = g.origin {
        let innermost = clouds
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.r.total_cmp(&b.1.r))
            .map(|(j, _)| j)
            .expect("at least one cloud");
        for v in 0..n_cloud {
            if g.shell_of[v] == innermost {
                g.add_edge(o, v, norm(&g.points[v]));
            }
        }
    }
    g.finish();
    g
}

/// The k nearest stored points other than `exclude`, closest first.
fn k_nearest(grid: &GridIndex, q: &[f64], exclude: usize, k: usize) -> Vec<(usize, f64)> {
    let mut radius = grid.nearest_excluding(q, exclude).1.max(1e-300) * 2.0;
    loop {
        let mut found: Vec<(usize, f64)> = grid
            .within(q, radius)
            .into_iter()
            .filter(|&j| j != exclude)
            .map(|j| (j, dist(q, &grid.points()[j])))
            .collect();
        if found.len() >= k || found.len() + 1 >= grid.len() {
            found.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            found.truncate(k);
            return found;
        }
        radius *= 2.0;
    }
}

/// Shortest-path length between two vertices.
pub fn inner_distance(
    g: &NeighborhoodGraph,
    p: usize,
    q: usize,
) -> Result<f64, MetricError> {
    let d = dijkstra(g, p, Some(q))[q];
    if d.is_finite() {
        Ok(d)
    } else {
        Err(MetricError::Unreachable { from: p, to: q })
    }
}

/// Shortest-path lengths from `source`, stopping once every vertex in
/// `targets` has settled. Entries that never settled stay infinite.
pub fn dijkstra_to_set(g: &NeighborhoodGraph, source: usize, targets: &[usize]) -> Vec<f64> {
    let mut want = vec![false; g.points.len()];
    let mut remaining = 0usize;
    for &t in targets {
        if !want[t] {
            want[t] = true;
            remaining += 1;
        }
    }
    dijkstra_impl(g, source, |v| {
        if want[v] {
            want[v] = false;
            remaining -= 1;
        }
        remaining == 0
    })
}

/// Shortest-path lengths from `source` to every vertex (infinite when
/// unreachable). With `target` set, stops as soon as the target settles.
pub fn dijkstra(g: &NeighborhoodGraph, source: usize, target: Option<usize>) -> Vec<f64> {
    dijkstra_impl(g, source, |v| target == Some(v))
}

fn dijkstra_impl(
    g: &NeighborhoodGraph,
    source: usize,
    mut done: impl FnMut(usize) -> bool,
) -> Vec<f64> {
    #[derive(PartialEq)]
    struct Item(f64, u32);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Item {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
        }
    }
    let mut dist = vec![f64::INFINITY; g.points.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse(Item(0.0, source as u32)));
    while let Some(Reverse(Item(d, v))) = heap.pop() {
        let v = v as usize;
        if d > dist[v] {
            continue;
        }
        if done(v) {
            break;
        }
        for &(u, w) in &g.adj[v] {
            let nd = d + w;
            if nd < dist[u as usize] {
                dist[u as usize] = nd;
                heap.push(Reverse(Item(nd, u)));
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::{load_germ, sample_shell};
    use crate::seed::derive_seed;

    fn cloud_from(points: Vec<Point>, r: f64) -> ShellCloud {
        ShellCloud {
            germ: "synthetic".into(),
            r,
            width: 0.5,
            seed: 0,
            points,
        }
    }

    #[test]
    fn single_edge_weight_is_the_euclidean_distance() {
        let cloud = cloud_from(vec![vec![0.25, 0.0], vec![0.75, 0.0]], 0.5);
        let g = build_neighborhood_graph(&[cloud], 1.0, false);
        assert_eq!(g.edge_count, 1);
        assert_eq!(g.adj[0][0].1, 0.5);
        assert_eq!(inner_distance(&g, 0, 1).unwrap(), 0.5);
    }

    #[test]
    fn zero_eps_means_edgeless_and_disconnected() {
        let cloud = cloud_from(vec![vec![0.1, 0.0], vec![0.2, 0.0], vec![0.3, 0.0]], 0.2);
        let g = build_neighborhood_graph(&[cloud], 0.0, false);
        assert_eq!(g.edge_count, 0);
        assert!(g.disconnected_warning);
        assert!(matches!(
            inner_distance(&g, 0, 2),
            Err(MetricError::Unreachable { .. })
        ));
    }

    #[test]
    fn collinear_chain_is_additive() {
        let cloud = cloud_from(
            vec![vec![0.1, 0.0], vec![0.2, 0.0], vec![0.3, 0.0], vec![0.4, 0.0]],
            0.25,
        );
        let g = build_neighborhood_graph(&[cloud], 0.11, false);
        let d = inner_distance(&g, 0, 3).unwrap();
        assert!((d - 0.30000000000000004).abs() < 1e-15, "chain length {d}");
        assert_eq!(
            inner_distance(&g, 0, 3).unwrap(),
            inner_distance(&g, 3, 0).unwrap()
        );
    }

    #[test]
    fn line_shell_ladder_is_connected() {
        let germ = load_germ("line").unwrap();
        let clouds: Vec<ShellCloud> = (0..8)
            .map(|k| {
                let r = 0.05 * 1.25f64.powi(k);
                sample_shell(&germ, r, 60, 0.15, derive_seed(7, k as u64)).unwrap()
            })
            .collect();
        let gap = max_sampling_gap(&clouds.iter().flat_map(|c| c.points.clone()).collect::<Vec<_>>());
        // ε clears both the sampling gaps and the 2·0.0425 hop between the
        // two sides of the axis at the innermost shell
        let g = build_neighborhood_graph(&clouds, (2.5 * gap).max(0.1), false);
        assert!(!g.disconnected_warning);
        // opposite ends of the ladder are mutually reachable
        let far = g.shell_vertices(7)[0];
        let near = g.shell_vertices(0)[0];
        let d = inner_distance(&g, near, far).unwrap();
        assert!(d.is_finite() && d >= dist(&g.points[near], &g.points[far]) - 1e-12);
    }

    #[test]
    fn circle_geodesic_beats_nothing_but_respects_chord() {
        // 200 points on the unit circle, ε covering a few steps: the path
        // between antipodes tracks the arc (~π), never the chord (2).
        let pts: Vec<Point> = (0..200)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 200.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let g = build_neighborhood_graph(&[cloud_from(pts, 1.0)], 0.1, false);
        let d = inner_distance(&g, 0, 100).unwrap();
        assert!(d > 3.1 && d < 3.2, "half-circumference {d}");
        assert!(d >= 2.0);
    }

    #[test]
    fn more_edges_never_lengthen_paths() {
        let germ = load_germ("parabola_pair").unwrap();
        let clouds: Vec<ShellCloud> = (0..4)
            .map(|k| {
                let r = 0.1 * 1.5f64.powi(k);
                sample_shell(&germ, r, 50, 0.15, derive_seed(11, k as u64)).unwrap()
            })
            .collect();
        let coarse = build_neighborhood_graph(&clouds, 0.03, true);
        let fine = build_neighborhood_graph(&clouds, 0.06, true);
        let dc = dijkstra(&coarse, 0, None);
        let df = dijkstra(&fine, 0, None);
        for v in 0..coarse.vertex_count() {
            if dc[v].is_finite() {
                assert!(df[v] <= dc[v] + 1e-12, "vertex {v}: {} > {}", df[v], dc[v]);
            }
        }
    }

    #[test]
    fn adaptive_graph_spans_decades_and_routes_through_origin() {
        let germ = load_germ("parabola_pair").unwrap();
        let clouds: Vec<ShellCloud> = (0..24)
            .map(|k| {
                let r = 0.002 * 10f64.powf(k as f64 * 2.2 / 23.0);
                sample_shell(&germ, r, 400, 0.12, derive_seed(3, k as u64)).unwrap()
            })
            .collect();
        let g = build_adaptive_graph(&clouds, 2.5, true);
        assert!(!g.disconnected_warning);
        // p=(t,0), q=(t,t²) at t=0.05: the branches sit t² apart but the
        // path has to descend towards the origin, so the inner distance is
        // on the order of 2t — far above the Euclidean separation
        let t = 0.05;
        let p = nearest_vertex(&g, &[t, 0.0]);
        let q = nearest_vertex(&g, &[t, t * t]);
        let d = inner_distance(&g, p, q).unwrap();
        assert!(d > t && d < 2.1 * t, "d_in {d} vs 2t = 0.1");
        assert!(d > 10.0 * t * t, "d_in {d} ~ outer distance {}", t * t);
    }

    fn nearest_vertex(g: &NeighborhoodGraph, q: &[f64]) -> usize {
        (0..g.shell_of.len())
            .min_by(|&a, &b| dist(&g.points[a], q).total_cmp(&dist(&g.points[b], q)))
            .unwrap()
    }
}
