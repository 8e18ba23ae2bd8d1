use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// Point (or free vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self { x: T::zero(), y: T::zero() }
    }

    #[inline]
    pub fn dot(self, rhs: Self) -> T {
        self.x * rhs.x + self.y * rhs.y
    }

    /// z-component of the 3-d cross product; positive when `rhs` lies
    /// counterclockwise of `self`.
    #[inline]
    pub fn cross(self, rhs: Self) -> T {
        self.x * rhs.y - self.y * rhs.x
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance(self, rhs: Self) -> T {
        (self - rhs).norm()
    }

    #[inline]
    pub fn scale(self, k: T) -> Self {
        Self { x: self.x * k, y: self.y * k }
    }

    /// Counterclockwise perpendicular (left normal of a direction vector).
    #[inline]
    pub fn perp(self) -> Self {
        Self { x: -self.y, y: self.x }
    }

    /// Unit vector in the same direction; `None` for (near-)zero input.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n <= T::default_epsilon() {
            None
        } else {
            Some(self.scale(T::one() / n))
        }
    }

    #[inline]
    pub fn lerp(self, rhs: Self, t: T) -> Self {
        self + (rhs - self).scale(t)
    }

    #[inline]
    pub fn from_angle(theta: T) -> Self {
        Self { x: theta.cos(), y: theta.sin() }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Real> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self { x: self.x + rhs.x, y: self.y + rhs.y }
    }
}

impl<T: Real> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self { x: self.x - rhs.x, y: self.y - rhs.y }
    }
}

impl<T: Real> Neg for Point2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self { x: -self.x, y: -self.y }
    }
}

impl<T: Real> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, k: T) -> Self {
        self.scale(k)
    }
}

/// Nearest point on segment `ab` to `p`, with its parameter in `[0, 1]`.
pub(crate) fn closest_on_segment<T: Real>(
    p: Point2<T>,
    a: Point2<T>,
    b: Point2<T>,
) -> (Point2<T>, T) {
    let ab = b - a;
    let denom = ab.norm_squared();
    if denom <= T::default_epsilon() {
        return (a, T::zero());
    }
    let t = ((p - a).dot(ab) / denom).clamp(T::zero(), T::one());
    (a.lerp(b, t), t)
}

/// Minimum distance between segments `ab` and `cd`.
pub(crate) fn segment_distance<T: Real>(
    a: Point2<T>,
    b: Point2<T>,
    c: Point2<T>,
    d: Point2<T>,
) -> T {
    if segments_intersect(a, b, c, d) {
        return T::zero();
    }
    let (q0, _) = closest_on_segment(c, a, b);
    let (q1, _) = closest_on_segment(d, a, b);
    let (q2, _) = closest_on_segment(a, c, d);
    let (q3, _) = closest_on_segment(b, c, d);
    let d0 = q0.distance(c);
    let d1 = q1.distance(d);
    let d2 = q2.distance(a);
    let d3 = q3.distance(b);
    d0.min(d1).min(d2.min(d3))
}

/// Whether closed segments `ab` and `cd` share at least one point.
pub(crate) fn segments_intersect<T: Real>(
    a: Point2<T>,
    b: Point2<T>,
    c: Point2<T>,
    d: Point2<T>,
) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    if ((d1 > T::zero() && d2 < T::zero()) || (d1 < T::zero() && d2 > T::zero()))
        && ((d3 > T::zero() && d4 < T::zero()) || (d3 < T::zero() && d4 > T::zero()))
    {
        return true;
    }
    let on = |s: T, p: Point2<T>, u: Point2<T>, v: Point2<T>| {
        s == T::zero()
            && p.x >= u.x.min(v.x)
            && p.x <= u.x.max(v.x)
            && p.y >= u.y.min(v.y)
            && p.y <= u.y.max(v.y)
    };
    on(d1, c, a, b) || on(d2, d, a, b) || on(d3, a, c, d) || on(d4, b, c, d)
}

/// Intersection point of segments `ab` and `cd` when they properly cross.
pub(crate) fn segment_crossing<T: Real>(
    a: Point2<T>,
    b: Point2<T>,
    c: Point2<T>,
    d: Point2<T>,
) -> Option<Point2<T>> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    if denom.abs() <= T::default_epsilon() {
        return None;
    }
    let t = (c - a).cross(s) / denom;
    let u = (c - a).cross(r) / denom;
    if t >= T::zero() && t <= T::one() && u >= T::zero() && u <= T::one() {
        Some(a + r.scale(t))
    } else {
        None
    }
}
