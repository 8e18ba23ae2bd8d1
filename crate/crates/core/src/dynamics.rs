//! Kinematic bicycle model: the state-transition function shared by the
//! planner and the simulator, plus its exact linearization.
//!
//! The state is (x, y, heading, speed, acceleration, steering angle) and the
//! controls are rates (jerk, steering rate), so comfort costs can penalize
//! jerk and steering rate directly as decision variables. Integration is
//! explicit Euler; the simulator substeps for fidelity, the planner uses its
//! own coarser step.

use crate::geometry::{Point2, Polygon};
use crate::scalar::{real, Real};
use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

pub type StateVector<T> = SVector<T, 6>;
pub type ControlVector<T> = SVector<T, 2>;
pub type StateMatrix<T> = SMatrix<T, 6, 6>;
pub type InputMatrix<T> = SMatrix<T, 6, 2>;

pub const STATE_DIM: usize = 6;
pub const CONTROL_DIM: usize = 2;

/// Ego vehicle state. Position is the geometric center of the footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoState<T> {
    pub x: T,
    pub y: T,
    /// Heading angle, radians, counterclockwise from +x.
    pub heading: T,
    /// Forward speed, m/s; never negative.
    pub speed: T,
    /// Longitudinal acceleration, m/s^2.
    pub accel: T,
    /// Steering angle, radians.
    pub steer: T,
}

impl<T: Real> EgoState<T> {
    pub fn new(x: T, y: T, heading: T, speed: T) -> Self {
        Self { x, y, heading, speed, accel: T::zero(), steer: T::zero() }
    }

    #[inline]
    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }

    #[inline]
    pub fn direction(&self) -> Point2<T> {
        Point2::from_angle(self.heading)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.heading.is_finite()
            && self.speed.is_finite()
            && self.accel.is_finite()
            && self.steer.is_finite()
    }

    pub fn to_vector(&self) -> StateVector<T> {
        StateVector::from([self.x, self.y, self.heading, self.speed, self.accel, self.steer])
    }

    pub fn from_vector(v: &StateVector<T>) -> Self {
        Self { x: v[0], y: v[1], heading: v[2], speed: v[3], accel: v[4], steer: v[5] }
    }
}

/// Rate-level control input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Control<T> {
    /// Longitudinal jerk, m/s^3.
    pub jerk: T,
    /// Steering rate, rad/s.
    pub steer_rate: T,
}

impl<T: Real> Control<T> {
    pub fn new(jerk: T, steer_rate: T) -> Self {
        Self { jerk, steer_rate }
    }

    pub fn zero() -> Self {
        Self { jerk: T::zero(), steer_rate: T::zero() }
    }

    pub fn is_finite(&self) -> bool {
        self.jerk.is_finite() && self.steer_rate.is_finite()
    }

    pub fn to_vector(&self) -> ControlVector<T> {
        ControlVector::from([self.jerk, self.steer_rate])
    }

    pub fn from_vector(v: &ControlVector<T>) -> Self {
        Self { jerk: v[0], steer_rate: v[1] }
    }
}

/// Vehicle geometry and the box bounds used by the kinematic penalty cost.
///
/// Bounds are stored per state / control dimension in vector order
/// (x, y, heading, speed, accel, steer) and (jerk, steer_rate). Dimensions
/// that are effectively unbounded use +/-1e9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: nalgebra::Scalar + Serialize",
    deserialize = "T: nalgebra::Scalar + Deserialize<'de>"
))]
pub struct VehicleParams<T> {
    /// Wheelbase, meters.
    pub wheelbase: T,
    pub half_length: T,
    pub half_width: T,
    pub state_lower: StateVector<T>,
    pub state_upper: StateVector<T>,
    pub control_lower: ControlVector<T>,
    pub control_upper: ControlVector<T>,
}

impl<T: Real> Default for VehicleParams<T> {
    fn default() -> Self {
        let unbounded = real::<T>(1e9);
        Self {
            wheelbase: real(2.8),
            half_length: real(2.4),
            half_width: real(0.95),
            state_lower: StateVector::from([
                -unbounded,
                -unbounded,
                -unbounded,
                T::zero(),      // no reverse
                real(-6.0),     // braking authority
                real(-0.6),     // steering lock
            ]),
            state_upper: StateVector::from([
                unbounded,
                unbounded,
                unbounded,
                real(20.0),
                real(2.5),
                real(0.6),
            ]),
            control_lower: ControlVector::from([real(-8.0), real(-0.5)]),
            control_upper: ControlVector::from([real(8.0), real(0.5)]),
        }
    }
}

impl<T: Real> VehicleParams<T> {
    #[inline]
    pub fn max_steer(&self) -> T {
        self.state_upper[5]
    }

    /// Rectangular footprint at a pose.
    pub fn footprint(&self, state: &EgoState<T>) -> Polygon<T> {
        Polygon::rectangle(state.position(), state.heading, self.half_length, self.half_width)
            .expect("positive vehicle dimensions")
    }
}

/// One explicit-Euler step of the bicycle model.
///
/// Speed clamps at zero (no reverse) and the steering angle clamps at the
/// steering lock; everything else integrates freely — staying within the
/// remaining bounds is the kinematic cost's job, not the integrator's.
pub fn step<T: Real>(
    s: &EgoState<T>,
    u: &Control<T>,
    dt: T,
    params: &VehicleParams<T>,
) -> EgoState<T> {
    debug_assert!(s.is_finite() && u.is_finite(), "non-finite dynamics input");
    debug_assert!(dt > T::zero());
    let max_steer = params.max_steer();
    EgoState {
        x: s.x + s.speed * s.heading.cos() * dt,
        y: s.y + s.speed * s.heading.sin() * dt,
        heading: s.heading + s.speed * s.steer.tan() / params.wheelbase * dt,
        speed: (s.speed + s.accel * dt).max(T::zero()),
        accel: s.accel + u.jerk * dt,
        steer: (s.steer + u.steer_rate * dt).clamp(-max_steer, max_steer),
    }
}

/// Exact Jacobians (A, B) of [`step`] with respect to state and control.
///
/// Valid away from the clamp boundaries (speed > 0, |steer| < lock), which
/// is where the solver evaluates it.
pub fn linearize<T: Real>(
    s: &EgoState<T>,
    _u: &Control<T>,
    dt: T,
    params: &VehicleParams<T>,
) -> (StateMatrix<T>, InputMatrix<T>) {
    let (sin_h, cos_h) = s.heading.sin_cos();
    let tan_d = s.steer.tan();
    let sec2_d = T::one() + tan_d * tan_d;
    let l = params.wheelbase;

    let mut a = StateMatrix::identity();
    a[(0, 2)] = -s.speed * sin_h * dt;
    a[(0, 3)] = cos_h * dt;
    a[(1, 2)] = s.speed * cos_h * dt;
    a[(1, 3)] = sin_h * dt;
    a[(2, 3)] = tan_d / l * dt;
    a[(2, 5)] = s.speed * sec2_d / l * dt;
    a[(3, 4)] = dt;

    let mut b = InputMatrix::zeros();
    b[(4, 0)] = dt;
    b[(5, 1)] = dt;
    (a, b)
}
