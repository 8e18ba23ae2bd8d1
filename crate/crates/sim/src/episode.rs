//! One deterministic episode: fixed-step control loop with periodic
//! replanning, tree tracking, synchronous agent propagation, and a full
//! trace for export.

use crate::agents::SimAgent;
use crate::config::{ConfigError, WorldConfig};
use crate::controller::{comfort_braking, controller_track};
use crate::metrics::EpisodeMetrics;
use branchplan_core::dynamics::{self, EgoState, VehicleParams};
use branchplan_core::geometry::Polygon;
use branchplan_core::map::{LaneId, LaneMap, Polyline2d};
use branchplan_core::policy::PolicySpec;
use branchplan_core::prediction::{inject_noise, predict_agent, IntentionSet};
use branchplan_core::world::WorldSnapshot;
use branchplan_engine::{plan, plan_predicted, BranchMode, PlanResult, PlannerParams};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("map: {0}")]
    Map(#[from] branchplan_core::map::MapError),
}

/// Planner arms of the ablation study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AblationMode {
    /// Plan on the most likely scenario only.
    NoBranch,
    /// Branch at a fixed time offset, seconds.
    FixedBranch(f64),
    /// Divergence-driven branch time, risk-neutral.
    DynamicBranch,
    /// Divergence-driven branch time with CVaR level α.
    DynamicBranchRisk(f64),
}

impl AblationMode {
    pub fn label(&self) -> &'static str {
        match self {
            AblationMode::NoBranch => "none",
            AblationMode::FixedBranch(_) => "fixed",
            AblationMode::DynamicBranch => "dyn",
            AblationMode::DynamicBranchRisk(_) => "dyn-risk",
        }
    }

    /// Table-style row name.
    pub fn row_name(&self) -> &'static str {
        match self {
            AblationMode::NoBranch => "w/o branch",
            AblationMode::FixedBranch(_) => "Fixed branch",
            AblationMode::DynamicBranch => "Dyna branch",
            AblationMode::DynamicBranchRisk(_) => "Dyna branch + Risk",
        }
    }

    fn apply(&self, params: &mut PlannerParams) {
        match *self {
            AblationMode::NoBranch => {
                params.branch_mode = BranchMode::MostLikelyOnly;
                params.rcp.alpha = 1.0;
            }
            AblationMode::FixedBranch(tau) => {
                params.branch_mode = BranchMode::Fixed(tau);
                params.rcp.alpha = 1.0;
            }
            AblationMode::DynamicBranch => {
                params.branch_mode = BranchMode::Dynamic;
                params.rcp.alpha = 1.0;
            }
            AblationMode::DynamicBranchRisk(alpha) => {
                params.branch_mode = BranchMode::Dynamic;
                params.rcp.alpha = alpha;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoSample {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub accel: f64,
    pub steer: f64,
}

impl From<EgoState<f64>> for EgoSample {
    fn from(s: EgoState<f64>) -> Self {
        Self { x: s.x, y: s.y, heading: s.heading, speed: s.speed, accel: s.accel, steer: s.steer }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSample {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: f64,
    pub ego: EgoSample,
    /// Applied control: jerk, steer rate.
    pub control: [f64; 2],
    /// Label of the policy whose tree is being tracked.
    pub policy: String,
    /// Branch selected by the tracker.
    pub branch: usize,
    /// Last replan failed or reported an all-unsafe scenario set.
    pub degraded: bool,
    /// Tree was stale; comfort braking substituted.
    pub stale: bool,
    pub agents: Vec<AgentSample>,
}

/// Planned tree geometry recorded at each replan, for overlay plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSnapshot {
    pub t: f64,
    pub policy: String,
    /// Root-to-leaf xy paths, one per branch.
    pub branches: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceAgentInfo {
    pub id: u32,
    pub half_length: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpisodeOutcome {
    Completed,
    Collision,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub schema_version: u32,
    pub control_dt: f64,
    pub plan_dt: f64,
    pub ego_half_length: f64,
    pub ego_half_width: f64,
    pub agents: Vec<TraceAgentInfo>,
    pub steps: Vec<TraceStep>,
    pub plans: Vec<PlanSnapshot>,
    pub outcome: EpisodeOutcome,
    /// Times the selected policy changed between consecutive replans.
    pub policy_switches: u32,
}

/// Per-episode randomization: intention-switch agents get a fresh gap ahead
/// of the ego, trigger time, and initial speed drawn from the configured
/// ranges. Without a `[randomization]` section the config passes through.
pub fn apply_randomization(cfg: &WorldConfig, seed: u64) -> Result<WorldConfig, SimError> {
    let Some(ranges) = cfg.randomization.clone() else {
        return Ok(cfg.clone());
    };
    let map = cfg.lane_map()?;
    let mut out = cfg.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ego = cfg.initial_ego();
    for agent in &mut out.agents {
        let crate::config::BehaviorConfig::IntentionSwitch { lane, at_time, desired_speed, .. } =
            &mut agent.behavior
        else {
            continue;
        };
        let gap = draw(&mut rng, ranges.gap);
        let trigger = draw(&mut rng, ranges.trigger);
        let speed = draw(&mut rng, ranges.speed);

        let line = &map.lane(LaneId(*lane))?.centerline;
        let ego_arc = line.project(ego.position()).arc;
        let arc = (ego_arc + gap).min(line.total_length());
        let position = line.point_at(arc);
        let heading = line.heading_at(arc);
        agent.state = [position.x, position.y, heading, speed];
        *at_time = trigger;
        *desired_speed = speed;
    }
    Ok(out)
}

fn draw(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..range[1])
    }
}

/// Reference line the episode measures progress along.
fn progress_line(cfg: &WorldConfig, map: &LaneMap) -> Result<Polyline2d, SimError> {
    let route = cfg.route();
    if route.lanes.is_empty() {
        let ego = cfg.initial_ego();
        let lane = map
            .nearest_lane(ego.position())
            .map(|(id, _)| id)
            .ok_or(branchplan_core::map::MapError::UnknownLane(LaneId(0)))?;
        Ok(map.lane(lane)?.centerline.clone())
    } else {
        Ok(map.sequence_centerline(&route.lanes)?)
    }
}

pub fn run_episode(
    cfg: &WorldConfig,
    mode: AblationMode,
    seed: u64,
) -> Result<(EpisodeMetrics, Trace), SimError> {
    let cfg = apply_randomization(cfg, seed)?;
    let map = cfg.lane_map()?;
    let route = cfg.route();
    let mut params = cfg.planner_params();
    mode.apply(&mut params);
    let vehicle: VehicleParams<f64> = params.vehicle.clone();
    let gains = cfg.planner.gains.clone();
    let progress = progress_line(&cfg, &map)?;

    let control_dt = cfg.control_dt();
    let replan_every = cfg.replan_every();
    let max_ticks = (cfg.episode.timeout / control_dt).round() as u64;

    let mut ego = cfg.initial_ego();
    let mut agents: Vec<SimAgent> = cfg.agents.iter().map(SimAgent::new).collect();

    let mut trace = Trace {
        schema_version: TRACE_SCHEMA_VERSION,
        control_dt,
        plan_dt: cfg.planner.dt,
        ego_half_length: vehicle.half_length,
        ego_half_width: vehicle.half_width,
        agents: agents
            .iter()
            .map(|a| TraceAgentInfo {
                id: a.agent.id.0,
                half_length: a.agent.half_length,
                half_width: a.agent.half_width,
            })
            .collect(),
        steps: Vec::new(),
        plans: Vec::new(),
        outcome: EpisodeOutcome::Timeout,
        policy_switches: 0,
    };

    let mut current: Option<(PlanResult, f64)> = None;
    let mut previous_policy: Option<PolicySpec> = None;
    let mut degraded = false;

    // Streaming accumulators; the trace recomputation must reproduce them.
    let mut speed_sum = 0.0;
    let mut accel_sq_sum = 0.0;
    let mut max_abs_accel = 0.0f64;
    let mut max_decel = 0.0f64;
    let mut min_distance = f64::INFINITY;

    let mut t = 0.0;
    for tick in 0..max_ticks {
        if tick % u64::from(replan_every) == 0 {
            let world = WorldSnapshot::new(
                t,
                ego,
                agents.iter().map(|a| a.agent.clone()).collect(),
            );
            let attempt = replan(&cfg, &world, &map, &route, previous_policy.as_ref(), &params, t);
            match attempt {
                Ok(result) => {
                    degraded = result.degraded;
                    if let Some(prev) = &previous_policy {
                        if prev.label() != result.policy().label() {
                            trace.policy_switches += 1;
                        }
                    }
                    previous_policy = Some(result.policy().clone());
                    trace.plans.push(PlanSnapshot {
                        t,
                        policy: result.policy().label(),
                        branches: (0..result.tree().num_branches)
                            .map(|k| {
                                result
                                    .tree()
                                    .branch_states(k)
                                    .iter()
                                    .map(|s| [s.x, s.y])
                                    .collect()
                            })
                            .collect(),
                    });
                    current = Some((result, t));
                }
                Err(_) => {
                    // Keep tracking the old tree until it goes stale.
                    degraded = true;
                }
            }
        }

        let observed: Vec<_> = agents.iter().map(|a| (a.agent.id, a.agent.state)).collect();
        let tracked = match &current {
            Some((result, planned_at)) => controller_track(
                result.tree(),
                result.scenarios(),
                t - planned_at,
                &ego,
                &observed,
                &vehicle,
                &gains,
            ),
            None => crate::controller::TrackerOutput {
                control: comfort_braking(&ego, &gains, &vehicle),
                branch: 0,
                stale: true,
            },
        };

        trace.steps.push(TraceStep {
            t,
            ego: ego.into(),
            control: [tracked.control.jerk, tracked.control.steer_rate],
            policy: previous_policy.as_ref().map(PolicySpec::label).unwrap_or_default(),
            branch: tracked.branch,
            degraded,
            stale: tracked.stale,
            agents: agents
                .iter()
                .map(|a| AgentSample {
                    id: a.agent.id.0,
                    x: a.agent.state.x,
                    y: a.agent.state.y,
                    heading: a.agent.state.heading,
                    speed: a.agent.state.speed,
                })
                .collect(),
        });

        speed_sum += ego.speed;
        accel_sq_sum += ego.accel * ego.accel;
        max_abs_accel = max_abs_accel.max(ego.accel.abs());
        max_decel = max_decel.max(-ego.accel);
        let pre_step_poly = Polygon::rectangle(
            ego.position(),
            ego.heading,
            vehicle.half_length,
            vehicle.half_width,
        )
        .expect("positive vehicle dimensions");
        for agent in &agents {
            min_distance = min_distance.min(pre_step_poly.distance_to(&agent.agent.footprint()));
        }

        // Synchronous update: agents react to the pre-step world.
        let positions: Vec<_> = agents
            .iter()
            .map(|a| (a.agent.state.position(), a.agent.state.speed, a.agent.half_length))
            .collect();
        let t_next = t + control_dt;
        for (i, agent) in agents.iter_mut().enumerate() {
            let mut neighbors: Vec<_> = positions
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, n)| *n)
                .collect();
            neighbors.push((ego.position(), ego.speed, vehicle.half_length));
            agent.step(t_next, control_dt, &map, &neighbors);
        }
        ego = dynamics::step(&ego, &tracked.control, control_dt, &vehicle);
        t = t_next;

        let ego_poly = Polygon::rectangle(
            ego.position(),
            ego.heading,
            vehicle.half_length,
            vehicle.half_width,
        )
        .expect("positive vehicle dimensions");
        if agents.iter().any(|a| ego_poly.intersects(&a.agent.footprint())) {
            trace.outcome = EpisodeOutcome::Collision;
            break;
        }
        if progress.project(ego.position()).arc >= cfg.ego.goal_arc {
            trace.outcome = EpisodeOutcome::Completed;
            break;
        }
    }

    let n = trace.steps.len().max(1) as f64;
    let metrics = EpisodeMetrics {
        completion_time: trace.steps.last().map_or(0.0, |s| s.t + control_dt),
        avg_speed: speed_sum / n,
        rms_accel: (accel_sq_sum / n).sqrt(),
        max_abs_accel,
        max_decel: max_decel.max(0.0),
        min_distance,
        success: trace.outcome != EpisodeOutcome::Collision,
    };
    Ok((metrics, trace))
}

fn replan(
    cfg: &WorldConfig,
    world: &WorldSnapshot,
    map: &LaneMap,
    route: &branchplan_core::map::Route,
    previous: Option<&PolicySpec>,
    params: &PlannerParams,
    t: f64,
) -> Result<PlanResult, branchplan_solver::SolverError> {
    let noisy = cfg
        .noise
        .as_ref()
        .filter(|n| t >= n.from && t <= n.until);
    match noisy {
        None => plan(world, map, route, previous, params),
        Some(noise) => {
            let predictions: Vec<IntentionSet> = world
                .agents()
                .iter()
                .map(|agent| {
                    let set = predict_agent(agent, map, &params.prediction);
                    if agent.id.0 == noise.agent {
                        inject_noise(&set, LaneId(noise.lane), noise.boost)
                    } else {
                        set
                    }
                })
                .collect();
            plan_predicted(world, map, route, previous, &predictions, params)
        }
    }
}

