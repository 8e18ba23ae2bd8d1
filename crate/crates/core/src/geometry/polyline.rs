use super::point::{closest_on_segment, Point2};
use super::{GeometryError, GEOM_EPS};
use crate::scalar::{real, Real};
use serde::{Deserialize, Serialize};

/// Piecewise-linear curve with a precomputed arc-length table.
///
/// Used for lane centerlines and reference paths. Arc length `s` runs from 0
/// at the first vertex; lateral offsets are positive to the left of travel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Polyline<T> {
    points: Vec<Point2<T>>,
    cumulative: Vec<T>,
}

/// Result of projecting a point onto a [`Polyline`].
#[derive(Debug, Clone, Copy)]
pub struct Projection<T> {
    /// Arc length of the nearest point, clamped to `[0, total_length]`.
    pub arc: T,
    /// Signed offset from the curve: positive left of travel, and equal in
    /// magnitude to the Euclidean distance to `foot`.
    pub lateral: T,
    /// Nearest point on the polyline.
    pub foot: Point2<T>,
    /// Index of the segment the foot lies on.
    pub segment: usize,
}

impl<T: Real> Polyline<T> {
    pub fn new(points: Vec<Point2<T>>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::PolylineTooShort);
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let eps = real::<T>(GEOM_EPS);
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(T::zero());
        for w in points.windows(2) {
            let d = w[0].distance(w[1]);
            if d <= eps {
                return Err(GeometryError::CoincidentPoints);
            }
            let last = *cumulative.last().unwrap();
            cumulative.push(last + d);
        }
        Ok(Self { points, cumulative })
    }

    #[inline]
    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    #[inline]
    pub fn total_length(&self) -> T {
        *self.cumulative.last().unwrap()
    }

    #[inline]
    pub fn first(&self) -> Point2<T> {
        self.points[0]
    }

    #[inline]
    pub fn last(&self) -> Point2<T> {
        *self.points.last().unwrap()
    }

    /// Segment index containing arc length `s` (clamped).
    fn segment_index(&self, s: T) -> usize {
        if s <= T::zero() {
            return 0;
        }
        if s >= self.total_length() {
            return self.points.len() - 2;
        }
        // Last entry strictly below s; cumulative is strictly increasing.
        let mut lo = 0usize;
        let mut hi = self.cumulative.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cumulative[mid] <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Point at arc length `s`, clamped to the curve's extent.
    pub fn point_at(&self, s: T) -> Point2<T> {
        let s = s.clamp(T::zero(), self.total_length());
        let i = self.segment_index(s);
        let seg_len = self.cumulative[i + 1] - self.cumulative[i];
        let t = (s - self.cumulative[i]) / seg_len;
        self.points[i].lerp(self.points[i + 1], t)
    }

    /// Unit tangent of the segment containing arc length `s`.
    pub fn direction_at(&self, s: T) -> Point2<T> {
        let i = self.segment_index(s.clamp(T::zero(), self.total_length()));
        (self.points[i + 1] - self.points[i])
            .normalized()
            .expect("constructor rejects zero-length segments")
    }

    /// Heading angle (radians) of the segment containing arc length `s`.
    pub fn heading_at(&self, s: T) -> T {
        let d = self.direction_at(s);
        d.y.atan2(d.x)
    }

    /// Point at arc length `s` displaced `lateral` to the left of travel.
    pub fn point_at_offset(&self, s: T, lateral: T) -> Point2<T> {
        self.point_at(s) + self.direction_at(s).perp().scale(lateral)
    }

    /// Nearest point on the curve, reported in arc-length/lateral form.
    ///
    /// `(arc, lateral)` minimizes the Euclidean distance to `p`; ties between
    /// adjacent segments resolve to the lower segment index.
    pub fn project(&self, p: Point2<T>) -> Projection<T> {
        let mut best: Option<(T, usize, Point2<T>, T)> = None;
        for i in 0..self.points.len() - 1 {
            let (foot, t) = closest_on_segment(p, self.points[i], self.points[i + 1]);
            let d = p.distance(foot);
            if best.is_none_or(|(bd, ..)| d < bd) {
                best = Some((d, i, foot, t));
            }
        }
        let (dist, segment, foot, t) = best.unwrap();
        let seg_len = self.cumulative[segment + 1] - self.cumulative[segment];
        let arc = self.cumulative[segment] + seg_len * t;
        let tangent = (self.points[segment + 1] - self.points[segment])
            .normalized()
            .expect("constructor rejects zero-length segments");
        let side = tangent.cross(p - foot);
        let lateral = if side < T::zero() { -dist } else { dist };
        Projection { arc, lateral, foot, segment }
    }

    /// Parallel curve displaced `lateral` to the left of travel.
    ///
    /// Vertices are shifted along the average of adjacent segment normals
    /// (miter join); offsets are expected to stay well below the local
    /// turning radius, which holds for lane-width displacements on road
    /// centerlines.
    pub fn offset(&self, lateral: T) -> Result<Self, GeometryError> {
        let n = self.points.len();
        let mut shifted = Vec::with_capacity(n);
        for i in 0..n {
            let before = if i > 0 {
                (self.points[i] - self.points[i - 1]).normalized()
            } else {
                None
            };
            let after = if i + 1 < n {
                (self.points[i + 1] - self.points[i]).normalized()
            } else {
                None
            };
            let tangent = match (before, after) {
                (Some(a), Some(b)) => (a + b).normalized().unwrap_or(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!("polyline has at least two points"),
            };
            shifted.push(self.points[i] + tangent.perp().scale(lateral));
        }
        Self::new(shifted)
    }

    /// Uniform resampling at spacing `step` (last point always included).
    pub fn resample(&self, step: T) -> Result<Self, GeometryError> {
        let total = self.total_length();
        let mut pts = Vec::new();
        let mut s = T::zero();
        while s < total {
            pts.push(self.point_at(s));
            s += step;
        }
        pts.push(self.last());
        Self::new(pts)
    }
}
