//! World configuration files: map, agents with behavior scripts, ego route,
//! planner parameters, noise schedule, and batch randomization ranges.
//!
//! The on-disk format is TOML with a `schema_version` field; see the
//! shipped files under `scenarios/` for the full shape.

use branchplan_core::dynamics::EgoState;
use branchplan_core::map::{Lane, LaneId, LaneMap, Point2d, Polygon2d, Route};
use branchplan_core::world::{Agent, AgentId, AgentState, WorldSnapshot};
use branchplan_core::geometry::Polyline;
use branchplan_engine::{PlannerParams, RewardWeights};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("{0}")]
    Invalid(String),
    #[error("map: {0}")]
    Map(#[from] branchplan_core::map::MapError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    pub schema_version: u32,
    pub map: MapConfig,
    pub ego: EgoConfig,
    #[serde(default)]
    pub agents: Vec<AgentConfig>,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub episode: EpisodeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub randomization: Option<RandomizationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub lanes: Vec<LaneConfig>,
    /// Explicit drivable polygon; defaults to the bounding box of the lanes
    /// widened by half a lane width on each side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drivable: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneConfig {
    pub id: u32,
    pub centerline: Vec<[f64; 2]>,
    pub width: f64,
    pub speed_limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub successors: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoConfig {
    /// x, y, heading, speed.
    pub state: [f64; 4],
    /// Route lanes; empty permits all lanes.
    #[serde(default)]
    pub route: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_position: Option<f64>,
    pub desired_speed: f64,
    /// Arc length along the route at which the episode completes.
    pub goal_arc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub id: u32,
    pub half_length: f64,
    pub half_width: f64,
    /// x, y, heading, speed.
    pub state: [f64; 4],
    pub behavior: BehaviorConfig,
}

/// How an agent evolves during the episode. Scripted agents replay a state
/// table; reactive agents follow a lane with IDM; intention switchers track
/// one lane until a trigger time, then another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BehaviorConfig {
    Scripted {
        /// Rows of x, y, heading, speed sampled at `dt`.
        states: Vec<[f64; 4]>,
        dt: f64,
    },
    Reactive {
        lane: u32,
        desired_speed: f64,
    },
    IntentionSwitch {
        lane: u32,
        target_lane: u32,
        at_time: f64,
        desired_speed: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    /// CVaR risk level in (0, 1].
    pub alpha: f64,
    /// Scenario divergence threshold, meters.
    pub theta: f64,
    /// Latest branch time, seconds.
    pub tau_max: f64,
    /// Planning step, seconds.
    pub dt: f64,
    /// Planning horizon, steps.
    pub horizon: usize,
    /// Control loop rate, Hz.
    pub control_hz: u32,
    /// Replanning rate, Hz; must divide `control_hz`.
    pub replan_hz: u32,
    pub hysteresis_margin: f64,
    pub reward: RewardWeights,
    pub gains: ControllerGains,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            theta: 0.5,
            tau_max: 3.0,
            dt: 0.2,
            horizon: 25,
            control_hz: 20,
            replan_hz: 5,
            hysteresis_margin: 0.3,
            reward: RewardWeights::default(),
            gains: ControllerGains::default(),
        }
    }
}

/// Proportional feedback gains of the tracking controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerGains {
    /// Jerk per m/s² of acceleration error.
    pub k_accel: f64,
    /// Acceleration per m/s of speed error (enters through jerk).
    pub k_speed: f64,
    /// Acceleration per meter of along-track error.
    pub k_arc: f64,
    /// Steer rate per radian of steering error.
    pub k_steer: f64,
    /// Steering per meter of cross-track error (enters through steer rate).
    pub k_lateral: f64,
    /// Steering per radian of heading error.
    pub k_heading: f64,
    /// Trees older than this are stale, seconds.
    pub max_age: f64,
    /// Braking used on a stale tree, m/s².
    pub comfort_decel: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            k_accel: 4.0,
            k_speed: 1.5,
            k_arc: 0.4,
            k_steer: 4.0,
            k_lateral: 0.12,
            k_heading: 0.8,
            max_age: 0.6,
            comfort_decel: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeConfig {
    /// Hard episode cutoff, seconds.
    pub timeout: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self { timeout: 30.0 }
    }
}

/// Prediction-noise schedule: between `from` and `until`, intentions of
/// `agent` targeting `lane` get `boost` of the remaining probability mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub agent: u32,
    pub lane: u32,
    pub boost: f64,
    pub from: f64,
    pub until: f64,
}

/// Per-episode batch randomization, applied to intention-switch agents:
/// initial gap ahead of the ego, switch trigger time, and initial speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomizationConfig {
    /// Longitudinal gap range ahead of the ego, meters.
    pub gap: [f64; 2],
    /// Trigger time range, seconds.
    pub trigger: [f64; 2],
    /// Initial speed range, m/s.
    pub speed: [f64; 2],
}

impl WorldConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion(self.schema_version));
        }
        if self.map.lanes.is_empty() {
            return Err(invalid("map has no lanes"));
        }
        let lane_exists = |id: u32| self.map.lanes.iter().any(|l| l.id == id);
        for lane in &self.map.lanes {
            for (name, reference) in [("left", lane.left), ("right", lane.right)] {
                if let Some(other) = reference {
                    if !lane_exists(other) {
                        return Err(invalid(format!(
                            "lane {} references unknown {name} lane {other}",
                            lane.id
                        )));
                    }
                }
            }
            for &succ in &lane.successors {
                if !lane_exists(succ) {
                    return Err(invalid(format!(
                        "lane {} references unknown successor {succ}",
                        lane.id
                    )));
                }
            }
            if lane.centerline.len() < 2 {
                return Err(invalid(format!("lane {} centerline too short", lane.id)));
            }
            if lane.width <= 0.0 || lane.speed_limit <= 0.0 {
                return Err(invalid(format!("lane {} has non-positive width or limit", lane.id)));
            }
        }
        for &id in &self.ego.route {
            if !lane_exists(id) {
                return Err(invalid(format!("route references unknown lane {id}")));
            }
        }
        if self.ego.goal_arc <= 0.0 {
            return Err(invalid("goal_arc must be positive"));
        }
        if self.ego.desired_speed <= 0.0 {
            return Err(invalid("desired_speed must be positive"));
        }
        let mut seen = Vec::new();
        for agent in &self.agents {
            if seen.contains(&agent.id) {
                return Err(invalid(format!("duplicate agent id {}", agent.id)));
            }
            seen.push(agent.id);
            if agent.half_length <= 0.0 || agent.half_width <= 0.0 {
                return Err(invalid(format!("agent {} has non-positive dimensions", agent.id)));
            }
            match &agent.behavior {
                BehaviorConfig::Scripted { states, dt } => {
                    if states.is_empty() {
                        return Err(invalid(format!("agent {} script is empty", agent.id)));
                    }
                    if *dt <= 0.0 {
                        return Err(invalid(format!("agent {} script dt must be positive", agent.id)));
                    }
                }
                BehaviorConfig::Reactive { lane, desired_speed } => {
                    if !lane_exists(*lane) {
                        return Err(invalid(format!("agent {} references unknown lane {lane}", agent.id)));
                    }
                    if *desired_speed < 0.0 {
                        return Err(invalid(format!("agent {} desired speed negative", agent.id)));
                    }
                }
                BehaviorConfig::IntentionSwitch { lane, target_lane, at_time, desired_speed } => {
                    for id in [lane, target_lane] {
                        if !lane_exists(*id) {
                            return Err(invalid(format!(
                                "agent {} references unknown lane {id}",
                                agent.id
                            )));
                        }
                    }
                    if *at_time < 0.0 {
                        return Err(invalid(format!("agent {} switch time negative", agent.id)));
                    }
                    if *desired_speed < 0.0 {
                        return Err(invalid(format!("agent {} desired speed negative", agent.id)));
                    }
                }
            }
        }
        let p = &self.planner;
        if !(0.0 < p.alpha && p.alpha <= 1.0) {
            return Err(invalid("alpha must be in (0, 1]"));
        }
        if p.theta <= 0.0 || p.tau_max <= 0.0 || p.dt <= 0.0 {
            return Err(invalid("theta, tau_max, and dt must be positive"));
        }
        if p.horizon < 2 {
            return Err(invalid("horizon must be at least 2 steps"));
        }
        if p.control_hz == 0 || p.replan_hz == 0 || p.control_hz % p.replan_hz != 0 {
            return Err(invalid("replan_hz must divide control_hz"));
        }
        if self.episode.timeout <= 0.0 {
            return Err(invalid("timeout must be positive"));
        }
        if let Some(noise) = &self.noise {
            if !self.agents.iter().any(|a| a.id == noise.agent) {
                return Err(invalid(format!("noise references unknown agent {}", noise.agent)));
            }
            if !lane_exists(noise.lane) {
                return Err(invalid(format!("noise references unknown lane {}", noise.lane)));
            }
            if !(0.0..1.0).contains(&noise.boost) {
                return Err(invalid("noise boost must be in [0, 1)"));
            }
            if noise.from < 0.0 || noise.until < noise.from {
                return Err(invalid("noise window must be ordered and non-negative"));
            }
        }
        if let Some(r) = &self.randomization {
            for (name, range) in [("gap", r.gap), ("trigger", r.trigger), ("speed", r.speed)] {
                if !(range[0] <= range[1]) || range[0] < 0.0 {
                    return Err(invalid(format!("randomization {name} range invalid")));
                }
            }
        }
        Ok(())
    }

    pub fn lane_map(&self) -> Result<LaneMap, ConfigError> {
        let lanes: Vec<Lane> = self
            .map
            .lanes
            .iter()
            .map(|cfg| {
                let points: Vec<Point2d> =
                    cfg.centerline.iter().map(|&[x, y]| Point2d::new(x, y)).collect();
                Ok(Lane {
                    id: LaneId(cfg.id),
                    centerline: Polyline::new(points)?,
                    width: cfg.width,
                    speed_limit: cfg.speed_limit,
                    left: cfg.left.map(LaneId),
                    right: cfg.right.map(LaneId),
                    successors: cfg.successors.iter().copied().map(LaneId).collect(),
                })
            })
            .collect::<Result<_, branchplan_core::map::MapError>>()?;

        let drivable = match &self.map.drivable {
            Some(points) => {
                let pts: Vec<Point2d> = points.iter().map(|&[x, y]| Point2d::new(x, y)).collect();
                Polygon2d::new(pts).map_err(branchplan_core::map::MapError::from)?
            }
            None => {
                let mut min = Point2d::new(f64::INFINITY, f64::INFINITY);
                let mut max = Point2d::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                let mut half = 0.0f64;
                for lane in &self.map.lanes {
                    half = half.max(lane.width / 2.0);
                    for &[x, y] in &lane.centerline {
                        min = Point2d::new(min.x.min(x), min.y.min(y));
                        max = Point2d::new(max.x.max(x), max.y.max(y));
                    }
                }
                Polygon2d::aabb(
                    Point2d::new(min.x, min.y - half),
                    Point2d::new(max.x, max.y + half),
                )
                .map_err(branchplan_core::map::MapError::from)?
            }
        };
        Ok(LaneMap::new(lanes, drivable)?)
    }

    pub fn route(&self) -> Route {
        let mut route = Route::new(self.ego.route.iter().copied().map(LaneId).collect());
        route.stop_position = self.ego.stop_position;
        route
    }

    pub fn initial_ego(&self) -> EgoState<f64> {
        let [x, y, heading, speed] = self.ego.state;
        EgoState::new(x, y, heading, speed)
    }

    pub fn initial_agents(&self) -> Vec<Agent> {
        self.agents
            .iter()
            .map(|cfg| {
                let [x, y, heading, speed] = cfg.state;
                Agent::new(
                    AgentId(cfg.id),
                    cfg.half_length,
                    cfg.half_width,
                    AgentState::new(x, y, heading, speed),
                )
            })
            .collect()
    }

    pub fn initial_world(&self) -> WorldSnapshot {
        WorldSnapshot::new(0.0, self.initial_ego(), self.initial_agents())
    }

    /// Planner parameters with this config's risk level, divergence
    /// settings, horizon, desired speed, and reward weights applied.
    pub fn planner_params(&self) -> PlannerParams {
        let mut params = PlannerParams::default();
        params.rcp.alpha = self.planner.alpha;
        params.divergence.theta = self.planner.theta;
        params.divergence.tau_max = self.planner.tau_max;
        params.divergence.dt = self.planner.dt;
        params.forward_sim.dt = self.planner.dt;
        params.forward_sim.horizon_steps = self.planner.horizon;
        params.prediction.dt = self.planner.dt;
        params.prediction.horizon_steps = self.planner.horizon;
        params.forward_sim.ego_driver.desired_speed = self.ego.desired_speed;
        params.hysteresis_margin = self.planner.hysteresis_margin;
        params.reward = self.planner.reward.clone();
        params
    }

    pub fn control_dt(&self) -> f64 {
        1.0 / f64::from(self.planner.control_hz)
    }

    /// Control ticks between replans.
    pub fn replan_every(&self) -> u32 {
        self.planner.control_hz / self.planner.replan_hz
    }
}
