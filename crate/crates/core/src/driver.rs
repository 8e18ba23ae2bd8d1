//! Reactive driver models: IDM for longitudinal control, pure pursuit for
//! lateral control, and the simple unicycle update used for surrounding
//! agents. The ego uses the same models but is integrated through the
//! bicycle dynamics so its simulated trajectories are feasible seeds for
//! the trajectory optimizer.

use crate::dynamics::{step, Control, EgoState, VehicleParams};
use crate::map::{Point2d, Polyline2d};
use crate::world::AgentState;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverModelParams {
    /// Free-road target speed, m/s.
    pub desired_speed: f64,
    /// Desired time headway, seconds.
    pub headway: f64,
    /// Standstill minimum gap, meters.
    pub min_gap: f64,
    /// Maximum acceleration, m/s^2.
    pub max_accel: f64,
    /// Comfortable deceleration, m/s^2 (positive).
    pub comfort_decel: f64,
    /// Pure-pursuit lookahead = max(min_lookahead, lookahead_gain * speed).
    pub lookahead_gain: f64,
    pub min_lookahead: f64,
}

impl Default for DriverModelParams {
    fn default() -> Self {
        Self {
            desired_speed: 10.0,
            headway: 1.2,
            min_gap: 2.0,
            max_accel: 2.0,
            comfort_decel: 3.0,
            lookahead_gain: 0.8,
            min_lookahead: 4.0,
        }
    }
}

impl DriverModelParams {
    pub fn with_desired_speed(mut self, v: f64) -> Self {
        self.desired_speed = v;
        self
    }

    pub fn lookahead(&self, speed: f64) -> f64 {
        (self.lookahead_gain * speed).max(self.min_lookahead)
    }
}

/// IDM acceleration. `leader` is `(gap, leader_speed)` to the nearest
/// vehicle ahead, bumper-to-bumper; `None` on a free road.
pub fn idm_accel(speed: f64, leader: Option<(f64, f64)>, p: &DriverModelParams) -> f64 {
    let v0 = p.desired_speed.max(0.1);
    let free = 1.0 - (speed / v0).powi(4);
    let interaction = match leader {
        Some((gap, v_lead)) => {
            let dv = speed - v_lead;
            let s_star = p.min_gap
                + (speed * p.headway + speed * dv / (2.0 * (p.max_accel * p.comfort_decel).sqrt()))
                    .max(0.0);
            let s = gap.max(0.1);
            (s_star / s).powi(2)
        }
        None => 0.0,
    };
    p.max_accel * (free - interaction)
}

/// Pure-pursuit curvature command toward a reference path.
pub fn pure_pursuit_curvature(
    path: &Polyline2d,
    position: Point2d,
    heading: f64,
    speed: f64,
    p: &DriverModelParams,
) -> f64 {
    let lookahead = p.lookahead(speed);
    let proj = path.project(position);
    let goal = path.point_at(proj.arc + lookahead);
    let to_goal = goal - position;
    let dist = to_goal.norm().max(1.0);
    let bearing = to_goal.y.atan2(to_goal.x);
    let alpha = wrap_angle(bearing - heading);
    (2.0 * alpha.sin() / dist).clamp(-0.5, 0.5)
}

/// Wrap to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r > std::f64::consts::PI {
        r -= two_pi;
    } else if r <= -std::f64::consts::PI {
        r += two_pi;
    }
    r
}

/// One unicycle step for a surrounding agent.
pub fn step_agent(s: &AgentState, accel: f64, curvature: f64, dt: f64) -> AgentState {
    AgentState {
        x: s.x + s.speed * s.heading.cos() * dt,
        y: s.y + s.speed * s.heading.sin() * dt,
        heading: wrap_angle(s.heading + s.speed * curvature * dt),
        speed: (s.speed + accel * dt).max(0.0),
    }
}

/// One ego step: IDM/pure-pursuit targets realized through the bicycle
/// dynamics via rate-limited jerk and steering-rate commands.
pub fn step_ego_toward(
    s: &EgoState<f64>,
    path: &Polyline2d,
    accel_target: f64,
    dt: f64,
    driver: &DriverModelParams,
    vehicle: &VehicleParams<f64>,
) -> EgoState<f64> {
    let kappa = pure_pursuit_curvature(path, s.position(), s.heading, s.speed, driver);
    let steer_target = (vehicle.wheelbase * kappa)
        .atan()
        .clamp(vehicle.state_lower[5], vehicle.state_upper[5]);
    let accel_target = accel_target.clamp(vehicle.state_lower[4], vehicle.state_upper[4]);
    let jerk = ((accel_target - s.accel) / dt).clamp(vehicle.control_lower[0], vehicle.control_upper[0]);
    let steer_rate =
        ((steer_target - s.steer) / dt).clamp(vehicle.control_lower[1], vehicle.control_upper[1]);
    step(s, &Control::new(jerk, steer_rate), dt, vehicle)
}
