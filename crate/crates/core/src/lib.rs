//! Numerical experiments on the metric geometry of set-germs at the origin.
//!
//! The library samples germs at geometrically spaced radii, answers approximate
//! distance queries against the samples, and turns the resulting point clouds
//! into estimates of tangent-cone dimension, Lipschitz-normal-embedding
//! behaviour, Hölder moduli, sea-tangle volumes and link topology.

pub mod expr;
pub mod germ;
pub mod metric;
pub mod seatangle;
pub mod seed;
pub mod tangent;
pub mod topology;
pub mod transport;

pub use expr::{Expression, VarAssignment};
pub use germ::{DistanceOracle, GermKind, GermSpec, Point, ShellCloud};
pub use metric::{HolderFit, LneReport, NeighborhoodGraph, ScalingFit};
pub use seatangle::{DimensionEstimate, STParams, VolumeSample, VolumeScaling};
pub use tangent::{ConeEstimate, ConvergenceTrace, DirectionCloud};
pub use topology::{BettiReport, RipsComplex};
