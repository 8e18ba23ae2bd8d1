//! Planar primitives shared by the whole stack: points, polylines, simple
//! polygons, signed distances, occupancy unions, and the smooth aggregation
//! used by the penalty costs.
//!
//! Everything here is immutable after construction and all operations are
//! pure, so values can be shared freely across concurrent evaluations.

mod clip;
mod point;
mod polygon;
mod polyline;
mod smooth;

pub use clip::occupancy_union;
pub use point::Point2;
pub use polygon::{DistanceQuery, NearestFeature, Polygon};
pub use polyline::{Polyline, Projection};
pub use smooth::{smooth_aggregate, SmoothAggregate};

use thiserror::Error;

/// Clipping / degeneracy tolerance in meters (or m^2 where areas are meant).
pub const GEOM_EPS: f64 = 1e-9;

/// Minimum polygon area accepted by constructors and distance queries.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("polyline needs at least two points")]
    PolylineTooShort,
    #[error("polyline has coincident consecutive points")]
    CoincidentPoints,
    #[error("polygon needs at least three non-collinear vertices")]
    TooFewVertices,
    #[error("polygon area below degeneracy threshold")]
    DegeneratePolygon,
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("smooth aggregate over an empty set")]
    EmptyAggregate,
}
