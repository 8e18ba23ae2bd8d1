//! Minimal lane-level map: centerline polylines with adjacency, a drivable
//! boundary polygon, and the route the ego intends to follow.
//!
//! Concrete at `f64` — maps are configuration data, not hot numeric code.

use crate::geometry::{GeometryError, Point2, Polygon, Polyline, Projection};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub type Point2d = Point2<f64>;
pub type Polyline2d = Polyline<f64>;
pub type Polygon2d = Polygon<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LaneId(pub u32);

impl std::fmt::Display for LaneId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "lane{}", self.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    pub centerline: Polyline2d,
    pub width: f64,
    pub speed_limit: f64,
    pub left: Option<LaneId>,
    pub right: Option<LaneId>,
    pub successors: Vec<LaneId>,
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("duplicate lane id {0}")]
    DuplicateLane(LaneId),
    #[error("lane {0} references unknown lane {1}")]
    DanglingReference(LaneId, LaneId),
    #[error("unknown lane id {0}")]
    UnknownLane(LaneId),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Lane-level map with an explicit drivable-area boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaneMap {
    lanes: BTreeMap<LaneId, Lane>,
    drivable: Polygon2d,
}

impl LaneMap {
    pub fn new(lanes: Vec<Lane>, drivable: Polygon2d) -> Result<Self, MapError> {
        let mut by_id = BTreeMap::new();
        for lane in lanes {
            let id = lane.id;
            if by_id.insert(id, lane).is_some() {
                return Err(MapError::DuplicateLane(id));
            }
        }
        for lane in by_id.values() {
            for reference in lane
                .left
                .iter()
                .chain(lane.right.iter())
                .chain(lane.successors.iter())
            {
                if !by_id.contains_key(reference) {
                    return Err(MapError::DanglingReference(lane.id, *reference));
                }
            }
        }
        Ok(Self { lanes: by_id, drivable })
    }

    /// Straight multi-lane road along +x: lane `i` centered at
    /// `y = i * lane_width`, lane 0 rightmost, higher indices to the left.
    pub fn straight_road(
        num_lanes: u32,
        lane_width: f64,
        length: f64,
        speed_limit: f64,
    ) -> Result<Self, MapError> {
        let mut lanes = Vec::new();
        for i in 0..num_lanes {
            let y = f64::from(i) * lane_width;
            lanes.push(Lane {
                id: LaneId(i),
                centerline: Polyline::new(vec![
                    Point2::new(0.0, y),
                    Point2::new(length, y),
                ])?,
                width: lane_width,
                speed_limit,
                left: (i + 1 < num_lanes).then(|| LaneId(i + 1)),
                right: (i > 0).then(|| LaneId(i - 1)),
                successors: Vec::new(),
            });
        }
        let half = lane_width / 2.0;
        let top = f64::from(num_lanes - 1) * lane_width + half;
        let drivable = Polygon::aabb(Point2::new(0.0, -half), Point2::new(length, top))?;
        Self::new(lanes, drivable)
    }

    pub fn lane(&self, id: LaneId) -> Result<&Lane, MapError> {
        self.lanes.get(&id).ok_or(MapError::UnknownLane(id))
    }

    pub fn lanes(&self) -> impl Iterator<Item = &Lane> {
        self.lanes.values()
    }

    pub fn drivable_area(&self) -> &Polygon2d {
        &self.drivable
    }

    /// Lane whose centerline is laterally closest to `p`, with the
    /// projection; `None` only for an empty map.
    pub fn nearest_lane(&self, p: Point2d) -> Option<(LaneId, Projection<f64>)> {
        self.lanes
            .values()
            .map(|lane| (lane.id, lane.centerline.project(p)))
            .min_by(|a, b| {
                a.1.lateral
                    .abs()
                    .partial_cmp(&b.1.lateral.abs())
                    .expect("finite lateral offset")
            })
    }

    /// Lane containing `p`, allowing `slack` meters beyond the half-width.
    pub fn lane_at(&self, p: Point2d, slack: f64) -> Option<LaneId> {
        let (id, proj) = self.nearest_lane(p)?;
        let lane = &self.lanes[&id];
        (proj.lateral.abs() <= lane.width / 2.0 + slack).then_some(id)
    }

    /// Concatenated centerline of a lane sequence.
    pub fn sequence_centerline(&self, seq: &[LaneId]) -> Result<Polyline2d, MapError> {
        let mut pts: Vec<Point2d> = Vec::new();
        for id in seq {
            let lane = self.lane(*id)?;
            for p in lane.centerline.points() {
                if pts.last().is_none_or(|q| q.distance(*p) > 1e-9) {
                    pts.push(*p);
                }
            }
        }
        Polyline::new(pts).map_err(MapError::Geometry)
    }

    /// Lane sequence starting at `id`, following successors while the
    /// concatenated length stays below `min_length` (always at least one
    /// lane; stops at dead ends and at cycles).
    pub fn extend_sequence(&self, id: LaneId, min_length: f64) -> Result<Vec<LaneId>, MapError> {
        let mut seq = vec![id];
        let mut length = self.lane(id)?.centerline.total_length();
        let mut current = id;
        while length < min_length {
            let lane = self.lane(current)?;
            let Some(&next) = lane.successors.first() else {
                break;
            };
            if seq.contains(&next) {
                break;
            }
            length += self.lane(next)?.centerline.total_length();
            seq.push(next);
            current = next;
        }
        Ok(seq)
    }
}

/// Ordered set of lanes the ego is expected to traverse, with an optional
/// stop position (arc length along the first route lane).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Route {
    pub lanes: Vec<LaneId>,
    pub stop_position: Option<f64>,
}

impl Route {
    pub fn new(lanes: Vec<LaneId>) -> Self {
        Self { lanes, stop_position: None }
    }

    pub fn contains(&self, id: LaneId) -> bool {
        self.lanes.contains(&id)
    }
}
