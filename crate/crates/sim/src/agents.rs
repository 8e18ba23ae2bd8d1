//! Episode-side agent behaviors: scripted state replay, reactive IDM lane
//! following, and timed intention switches (the cut-in trigger).

use crate::config::{AgentConfig, BehaviorConfig};
use branchplan_core::driver::{
    idm_accel, pure_pursuit_curvature, step_agent, wrap_angle, DriverModelParams,
};
use branchplan_core::map::{LaneId, LaneMap, Point2d};
use branchplan_core::world::{Agent, AgentState};

/// How many past observations each agent keeps; the planner's lateral
/// intention vote averages over this window.
pub const HISTORY_WINDOW: usize = 15;

/// Neighbor summary used for leader scans: position, speed, half length.
pub type NeighborInfo = (Point2d, f64, f64);

pub struct SimAgent {
    /// Planner-facing view: id, geometry, current state, history.
    pub agent: Agent,
    behavior: BehaviorConfig,
    driver: DriverModelParams,
}

impl SimAgent {
    pub fn new(cfg: &AgentConfig) -> Self {
        let [x, y, heading, speed] = cfg.state;
        let agent = Agent::new(
            branchplan_core::world::AgentId(cfg.id),
            cfg.half_length,
            cfg.half_width,
            AgentState::new(x, y, heading, speed),
        );
        let desired = match &cfg.behavior {
            BehaviorConfig::Scripted { .. } => speed,
            BehaviorConfig::Reactive { desired_speed, .. } => *desired_speed,
            BehaviorConfig::IntentionSwitch { desired_speed, .. } => *desired_speed,
        };
        Self {
            agent,
            behavior: cfg.behavior.clone(),
            driver: DriverModelParams::default().with_desired_speed(desired),
        }
    }

    /// Advance to `t_next = t_now + dt` and record the new state in the
    /// observation history.
    pub fn step(&mut self, t_next: f64, dt: f64, map: &LaneMap, neighbors: &[NeighborInfo]) {
        let next = match &self.behavior {
            BehaviorConfig::Scripted { states, dt: script_dt } => {
                sample_script(states, *script_dt, t_next)
            }
            BehaviorConfig::Reactive { lane, .. } => {
                self.follow_lane(LaneId(*lane), dt, map, neighbors)
            }
            BehaviorConfig::IntentionSwitch { lane, target_lane, at_time, .. } => {
                let target = if t_next < *at_time { LaneId(*lane) } else { LaneId(*target_lane) };
                self.follow_lane(target, dt, map, neighbors)
            }
        };
        self.agent.observe(next, HISTORY_WINDOW);
    }

    fn follow_lane(
        &self,
        lane: LaneId,
        dt: f64,
        map: &LaneMap,
        neighbors: &[NeighborInfo],
    ) -> AgentState {
        let now = self.agent.state;
        let line = &map.lane(lane).expect("validated lane reference").centerline;
        let proj = line.project(now.position());
        let leader = neighbors
            .iter()
            .filter_map(|&(pos, speed, half_length)| {
                let other = line.project(pos);
                if other.lateral.abs() > 1.75 {
                    return None;
                }
                let gap = other.arc - proj.arc - half_length - self.agent.half_length;
                (other.arc > proj.arc && gap < 80.0).then_some((gap, speed))
            })
            .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite gap"));
        let accel = idm_accel(now.speed, leader, &self.driver);
        let kappa = pure_pursuit_curvature(line, now.position(), now.heading, now.speed, &self.driver);
        step_agent(&now, accel, kappa, dt)
    }
}

/// Linear interpolation into a scripted state table; past the end the agent
/// continues at constant velocity from the final row.
fn sample_script(states: &[[f64; 4]], script_dt: f64, t: f64) -> AgentState {
    let to_state = |row: &[f64; 4]| AgentState::new(row[0], row[1], row[2], row[3]);
    let last = states.len() - 1;
    let idx = t / script_dt;
    if idx >= last as f64 {
        let s = to_state(&states[last]);
        let extra = t - last as f64 * script_dt;
        return AgentState::new(
            s.x + s.speed * s.heading.cos() * extra,
            s.y + s.speed * s.heading.sin() * extra,
            s.heading,
            s.speed,
        );
    }
    let lo = idx.floor() as usize;
    let frac = idx - lo as f64;
    let a = to_state(&states[lo]);
    let b = to_state(&states[lo + 1]);
    AgentState::new(
        a.x + (b.x - a.x) * frac,
        a.y + (b.y - a.y) * frac,
        a.heading + wrap_angle(b.heading - a.heading) * frac,
        a.speed + (b.speed - a.speed) * frac,
    )
}
