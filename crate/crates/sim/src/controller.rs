//! Trajectory-tree tracking: pick the branch whose scenario best matches
//! the observed agents, then apply the matched node's control plus
//! proportional feedback on longitudinal and lateral error.

use crate::config::ControllerGains;
use branchplan_core::driver::wrap_angle;
use branchplan_core::dynamics::{Control, EgoState, VehicleParams};
use branchplan_core::scenario_tree::ScenarioTree;
use branchplan_core::world::{AgentId, AgentState};
use branchplan_solver::TrajectoryTree;

#[derive(Debug, Clone, Copy)]
pub struct TrackerOutput {
    pub control: Control<f64>,
    /// Branch whose scenario best matches the observed agents.
    pub branch: usize,
    /// True when the tree was too old and comfort braking was substituted.
    pub stale: bool,
}

/// Control for the current tick given the latest planned tree.
///
/// `age` is the time since the tree's root, so `age / tree.dt` locates the
/// current step. Before the branchpoint the shared trunk is tracked; after
/// it, the branch with the smallest summed key-vehicle positional error at
/// the current step. A stale tree degrades to comfort braking.
pub fn controller_track(
    tree: &TrajectoryTree<f64>,
    scenarios: &ScenarioTree,
    age: f64,
    ego: &EgoState<f64>,
    observed: &[(AgentId, AgentState)],
    vehicle: &VehicleParams<f64>,
    gains: &ControllerGains,
) -> TrackerOutput {
    if age > gains.max_age {
        return TrackerOutput { control: comfort_braking(ego, gains, vehicle), branch: 0, stale: true };
    }

    let step = ((age / tree.dt).round() as usize).min(tree.horizon);
    let branch = best_branch(scenarios, step, observed);

    // Track the node one step ahead; the control into that node (stored for
    // steps 1..=horizon) is the feedforward for the interval the ego is in.
    let states = tree.branch_states(branch);
    let controls = tree.branch_controls(branch);
    let target = (step + 1).min(tree.horizon);
    let ref_state = states[target];
    let ff = controls[target - 1];

    // Errors in the reference frame.
    let (sin_h, cos_h) = ref_state.heading.sin_cos();
    let dx = ref_state.x - ego.x;
    let dy = ref_state.y - ego.y;
    let e_long = dx * cos_h + dy * sin_h;
    let e_lat = -dx * sin_h + dy * cos_h;
    let e_speed = ref_state.speed - ego.speed;
    let e_heading = wrap_angle(ref_state.heading - ego.heading);

    let a_desired = ref_state.accel + gains.k_speed * e_speed + gains.k_arc * e_long;
    let jerk = ff.jerk + gains.k_accel * (a_desired - ego.accel);
    // Positive cross-track error (reference to the left) steers left.
    let steer_desired =
        ref_state.steer + gains.k_lateral * e_lat + gains.k_heading * e_heading;
    let steer_rate = ff.steer_rate + gains.k_steer * (steer_desired - ego.steer);

    TrackerOutput { control: clamp_control(jerk, steer_rate, vehicle), branch, stale: false }
}

/// Branch whose scenario's predicted key-vehicle positions are closest to
/// the observations at `step` (summed Euclidean error; ties take the lower
/// index, i.e. the more probable branch).
pub fn best_branch(
    scenarios: &ScenarioTree,
    step: usize,
    observed: &[(AgentId, AgentState)],
) -> usize {
    let mut best = 0;
    let mut best_err = f64::INFINITY;
    for (k, scenario) in scenarios.scenarios.iter().enumerate() {
        let mut err = 0.0;
        for (id, states) in &scenario.agents {
            if let Some((_, obs)) = observed.iter().find(|(o, _)| o == id) {
                let t = step.min(states.len() - 1);
                err += obs.position().distance(states[t].position());
            }
        }
        if err < best_err {
            best_err = err;
            best = k;
        }
    }
    best
}

/// Fallback control when no usable tree exists: brake comfortably to a
/// stop and center the steering.
pub fn comfort_braking(
    ego: &EgoState<f64>,
    gains: &ControllerGains,
    vehicle: &VehicleParams<f64>,
) -> Control<f64> {
    let target_accel = if ego.speed > 0.1 { -gains.comfort_decel } else { 0.0 };
    let jerk = gains.k_accel * (target_accel - ego.accel);
    let steer_rate = gains.k_steer * (0.0 - ego.steer);
    clamp_control(jerk, steer_rate, vehicle)
}

fn clamp_control(jerk: f64, steer_rate: f64, vehicle: &VehicleParams<f64>) -> Control<f64> {
    Control::new(
        jerk.clamp(vehicle.control_lower[0], vehicle.control_upper[0]),
        steer_rate.clamp(vehicle.control_lower[1], vehicle.control_upper[1]),
    )
}
