//! Risk-aware contingency planning over policy-conditioned scenario trees.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: planar primitives, signed distances, occupancy unions,
//!   and the smooth aggregation used by penalty costs;
//! - [`dynamics`]: kinematic bicycle model with exact linearization;
//!
//! The numeric core is generic over the scalar type through
//! [`scalar::Real`]; the planning pipeline is instantiated at `f64` via the
//! aliases exported below.

pub mod driver;
pub mod dynamics;
pub mod forward_sim;
pub mod geometry;
pub mod map;
pub mod policy;
pub mod prediction;
pub mod scalar;
pub mod scenario_tree;
pub mod world;

/// Working scalar of the planning pipeline.
pub type Scalar = f64;

pub type Point2d = geometry::Point2<Scalar>;
pub type Polyline2d = geometry::Polyline<Scalar>;
pub type Polygon2d = geometry::Polygon<Scalar>;
