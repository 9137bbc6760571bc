//! Self-intersection certificates for the counterexample map `g`.
//!
//! All suprema are grid estimates; certificates record the grid resolution
//! and are sound only up to that grid.

mod gmap;
mod pm;
mod self_intersection;

pub use gmap::{build_g, build_gstar, g_even, g_odd, GMap, PaddedMap};
pub use pm::{pm_root, PmResult};
pub use self_intersection::{
    axis_terms, certify_self_intersection, compute_epsilon, compute_m, epsilon_from_parts, find_collision, AxisTerms,
    Collision, IntervalPairs, SelfIntersectionCertificate, EPSILON_SAFETY,
};
