//! Inner vs outer distance, LNE detection, power-law exponent fitting, and
//! bi-Hölder modulus estimation.

pub mod fit;
pub mod graph;
pub mod holder;
pub mod lne;

pub use fit::{fit_power_law, ScalingFit};
pub use graph::{
    build_adaptive_graph, build_neighborhood_graph, dijkstra, inner_distance, max_sampling_gap,
    NeighborhoodGraph,
};
pub use holder::{holder_modulus_fit, HolderFit, HolderScale};
pub use lne::{lne_scan, EpsPolicy, LneReport, LneVerdict, PairSample};

use crate::germ::GermError;

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("degenerate fit window: {message}")]
    DegenerateWindow { message: String },
    #[error("no path from vertex {from} to vertex {to}")]
    Unreachable { from: usize, to: usize },
    #[error("shell near r = {r} yields only {count} usable vertices")]
    InsufficientPairs { r: f64, count: usize },
    #[error(transparent)]
    Germ(#[from] GermError),
}
