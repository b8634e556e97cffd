//! Finite-resolution chain recurrence, abstract central models and
//! partially hyperbolic / homoclinic diagnostics for explicit smooth maps.
//!
//! The crate is organized around five pieces:
//!
//! - [`chain`]: epsilon-transition graphs on finite nets, the chain relation,
//!   chain-recurrence classes and Hausdorff distance;
//! - [`central`]: skew products over a sampled base with monotone fiber maps,
//!   chain-stable/unstable strips of the zero section and the trapping-strip
//!   dichotomy;
//! - [`smooth`]: explicit maps with Jacobians, periodic-orbit Newton search,
//!   uniform contraction / dominated splitting / partial hyperbolicity tests
//!   and orientation double covers;
//! - [`manifold`]: one-dimensional invariant manifold polylines, transverse
//!   crossings, the Smale order and homoclinic classes;
//! - [`geometry`]: central cone fields, below/above positions, twisted
//!   returns and periodic contraction products.
//!
//! [`zoo`] provides the example systems the test suites run on.

pub mod central;
pub mod chain;
pub mod chart;
pub mod error;
pub mod geometry;
pub mod manifold;
pub mod smooth;
pub mod zoo;

pub use central::{
    dichotomy, detect_chain_recurrent_segment, is_backward_trapping_strip, is_trapping_strip,
    limit_strip, product_distance, pseudo_stable_set, pseudo_unstable_set, CentralModel,
    CentralSegment, DichotomyOutcome, DichotomyParams, FiberSide, Strip,
};
pub use chain::{
    build_transition_graph, chain_decomposition, chain_reaches, hausdorff_distance,
    is_chain_transitive, strongly_connected_components, ChainDecomposition, EpsilonSchedule,
    SampledSpace, TransitionGraph,
};
pub use chart::Chart;
pub use error::{Error, Result};
pub use geometry::{
    closest_return_pair, has_twisted_returns, in_cone, periodic_contraction_products, position,
    twisted_position, ConeField, Orientation, PointWithManifolds, PositionVerdict,
};
pub use manifold::{
    find_transverse_homoclinic, grow_manifold, homoclinic_class_points, homoclinically_related,
    smale_leq, CrossingRecord, GrowthParams, ManifoldPolyline, ManifoldSide, Window,
};
pub use smooth::{
    check_dominated_splitting, check_partial_hyperbolicity, check_uniform_contraction,
    check_uniform_expansion, find_periodic_orbit, jacobian_consistency_error, orientation_cover,
    BundleCheck, OrientationCover, PartialHyperbolicityReport, PeriodicOrbitRecord,
    SmoothSystem, SplittingSample, StabilityClass,
};
pub use zoo::{make, zoo_catalog, Fact, ZooEntry, ZooSystem};
