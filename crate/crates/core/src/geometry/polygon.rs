use super::point::{closest_on_segment, segment_distance, segments_intersect, Point2};
use super::{GeometryError, DEGENERATE_AREA, GEOM_EPS};
use crate::scalar::{real, Real};
use serde::{Deserialize, Serialize};

/// Simple polygon, stored counterclockwise without repeated first vertex.
///
/// Constructors normalize orientation, drop duplicate and collinear
/// vertices, and reject self-intersecting or degenerate rings, so every
/// value of this type is safe to use in distance queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Polygon<T> {
    vertices: Vec<Point2<T>>,
}

/// Boundary feature realizing a nearest-point query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NearestFeature {
    /// Interior of edge `i` (from vertex `i` to vertex `i + 1`).
    Edge(usize),
    /// Vertex `i`.
    Vertex(usize),
}

/// Signed distance together with the boundary point and feature realizing it.
#[derive(Debug, Clone, Copy)]
pub struct DistanceQuery<T> {
    /// Positive outside, negative inside, zero on the boundary.
    pub signed: T,
    /// Nearest boundary point.
    pub nearest: Point2<T>,
    /// Feature the nearest point lies on.
    pub feature: NearestFeature,
}

impl<T: Real> Polygon<T> {
    pub fn new(vertices: Vec<Point2<T>>) -> Result<Self, GeometryError> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let eps = real::<T>(GEOM_EPS);
        // Drop consecutive duplicates (including a repeated closing vertex).
        let mut ring: Vec<Point2<T>> = Vec::with_capacity(vertices.len());
        for p in vertices {
            if ring.last().is_none_or(|q| q.distance(p) > eps) {
                ring.push(p);
            }
        }
        while ring.len() >= 2 && ring[0].distance(*ring.last().unwrap()) <= eps {
            ring.pop();
        }
        // Drop collinear vertices. Repeat until stable: removing one vertex
        // can make its neighbor collinear too.
        loop {
            let n = ring.len();
            if n < 3 {
                return Err(GeometryError::TooFewVertices);
            }
            let mut removed = false;
            let mut kept = Vec::with_capacity(n);
            for i in 0..n {
                let prev = ring[(i + n - 1) % n];
                let cur = ring[i];
                let next = ring[(i + 1) % n];
                let cross = (cur - prev).cross(next - cur);
                if cross.abs() <= eps && !removed {
                    removed = true; // drop at most one per sweep to stay stable
                } else {
                    kept.push(cur);
                }
            }
            ring = kept;
            if !removed {
                break;
            }
        }
        let mut poly = Self { vertices: ring };
        // Simplicity first: a bowtie has zero signed area, and the crossing
        // is the more useful diagnosis than "degenerate".
        if !poly.is_simple() {
            return Err(GeometryError::SelfIntersecting);
        }
        let area = poly.signed_area();
        if area.abs() <= real::<T>(DEGENERATE_AREA) {
            return Err(GeometryError::DegeneratePolygon);
        }
        if area < T::zero() {
            poly.vertices.reverse();
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle given opposite corners.
    pub fn aabb(min: Point2<T>, max: Point2<T>) -> Result<Self, GeometryError> {
        Self::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    /// Oriented rectangle: vehicle footprint at a pose.
    pub fn rectangle(
        center: Point2<T>,
        heading: T,
        half_length: T,
        half_width: T,
    ) -> Result<Self, GeometryError> {
        let dir = Point2::from_angle(heading);
        let left = dir.perp();
        let corners = vec![
            center + dir.scale(half_length) - left.scale(half_width),
            center + dir.scale(half_length) + left.scale(half_width),
            center - dir.scale(half_length) + left.scale(half_width),
            center - dir.scale(half_length) - left.scale(half_width),
        ];
        Self::new(corners)
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2<T>] {
        &self.vertices
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // constructors guarantee at least three vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2<T>, Point2<T>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn signed_area(&self) -> T {
        let mut two_a = T::zero();
        for (a, b) in self.edges() {
            two_a += a.cross(b);
        }
        two_a / real::<T>(2.0)
    }

    /// Enclosed area (non-negative; vertices are counterclockwise).
    pub fn area(&self) -> T {
        self.signed_area()
    }

    pub fn centroid(&self) -> Point2<T> {
        let mut cx = T::zero();
        let mut cy = T::zero();
        let mut two_a = T::zero();
        for (a, b) in self.edges() {
            let w = a.cross(b);
            cx += (a.x + b.x) * w;
            cy += (a.y + b.y) * w;
            two_a += w;
        }
        let k = T::one() / (real::<T>(3.0) * two_a);
        Point2::new(cx * k, cy * k)
    }

    fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            for j in i + 1..n {
                // Skip the edge itself and the two adjacent edges.
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let (c, d) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Winding-number containment; boundary points count as inside.
    pub fn contains(&self, p: Point2<T>) -> bool {
        let eps = real::<T>(GEOM_EPS);
        let mut winding = 0i32;
        for (a, b) in self.edges() {
            // On-edge check first so boundary points are deterministic.
            let (foot, _) = closest_on_segment(p, a, b);
            if p.distance(foot) <= eps {
                return true;
            }
            if a.y <= p.y {
                if b.y > p.y && (b - a).cross(p - a) > T::zero() {
                    winding += 1;
                }
            } else if b.y <= p.y && (b - a).cross(p - a) < T::zero() {
                winding -= 1;
            }
        }
        winding != 0
    }

    /// Signed distance and the boundary feature that realizes it.
    ///
    /// The feature drives exact curvature information downstream: nearest
    /// points on edge interiors have zero boundary curvature, nearest
    /// vertices behave like point obstacles.
    pub fn distance_query(&self, p: Point2<T>) -> DistanceQuery<T> {
        let eps = real::<T>(GEOM_EPS);
        let n = self.vertices.len();
        let mut best_d = T::max_value().unwrap_or_else(T::one);
        let mut best_point = self.vertices[0];
        let mut best_seg = 0usize;
        let mut best_t = T::zero();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let (foot, t) = closest_on_segment(p, a, b);
            let d = p.distance(foot);
            if d < best_d {
                best_d = d;
                best_point = foot;
                best_seg = i;
                best_t = t;
            }
        }
        let feature = if best_t <= eps {
            NearestFeature::Vertex(best_seg)
        } else if best_t >= T::one() - eps {
            NearestFeature::Vertex((best_seg + 1) % n)
        } else {
            NearestFeature::Edge(best_seg)
        };
        let signed = if best_d <= eps {
            T::zero()
        } else if self.contains(p) {
            -best_d
        } else {
            best_d
        };
        DistanceQuery { signed, nearest: best_point, feature }
    }

    /// Signed distance: positive outside, negative inside, zero on boundary.
    #[inline]
    pub fn signed_distance(&self, p: Point2<T>) -> T {
        self.distance_query(p).signed
    }

    /// Axis-aligned bounding box as `(min, max)` corners.
    pub fn bounds(&self) -> (Point2<T>, Point2<T>) {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices[1..] {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        (min, max)
    }

    /// Whether the two polygons share any point (touching counts).
    pub fn intersects(&self, other: &Self) -> bool {
        let (amin, amax) = self.bounds();
        let (bmin, bmax) = other.bounds();
        if amax.x < bmin.x || bmax.x < amin.x || amax.y < bmin.y || bmax.y < amin.y {
            return false;
        }
        for (a, b) in self.edges() {
            for (c, d) in other.edges() {
                if segments_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        self.contains(other.vertices[0]) || other.contains(self.vertices[0])
    }

    /// Minimum distance between the two polygons; zero when they intersect.
    pub fn distance_to(&self, other: &Self) -> T {
        if self.intersects(other) {
            return T::zero();
        }
        let mut best = T::max_value().unwrap_or_else(T::one);
        for (a, b) in self.edges() {
            for (c, d) in other.edges() {
                best = best.min(segment_distance(a, b, c, d));
            }
        }
        best
    }

}
