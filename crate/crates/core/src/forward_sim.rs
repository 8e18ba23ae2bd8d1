//! Policy-conditioned closed-loop forward simulation.
//!
//! For each (policy, intention combination) pair this renders one scenario:
//! key vehicles — agents whose predicted occupancy interacts with the
//! policy's corridor — are re-simulated closed-loop with IDM + pure pursuit,
//! everyone else replays their predicted trajectory open-loop, and the ego
//! follows a policy-conditioned driver model. Scenarios failing a safety
//! assessment are re-rendered with a passive fallback ego (comfort braking
//! plus lateral avoidance), so every combination yields exactly one
//! scenario and the probabilities keep summing to one.

use crate::driver::{idm_accel, pure_pursuit_curvature, step_agent, step_ego_toward, DriverModelParams};
use crate::dynamics::{EgoState, VehicleParams};
use crate::geometry::{occupancy_union, Polygon, Polyline};
use crate::map::{LaneId, LaneMap, Point2d, Polygon2d, Polyline2d};
use crate::policy::{policy_reference_line, LongitudinalPolicy, PolicyConfig, PolicySpec};
use crate::prediction::{IntentionCombination, IntentionSet, PredictedTrajectory};
use crate::world::{AgentId, AgentState, WorldSnapshot};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardSimConfig {
    pub dt: f64,
    pub horizon_steps: usize,
    /// Footprint inflation when building reachable sets, meters.
    pub frs_inflation: f64,
    /// Extra corridor width beyond the vehicle width, meters.
    pub corridor_margin: f64,
    pub max_key_vehicles: usize,
    /// Lateral window for leader detection along a reference line, meters.
    pub leader_lateral_window: f64,
    /// Leader search range, meters.
    pub leader_range: f64,
    /// Speed offset applied by Accelerate / Decelerate agent intentions, m/s.
    pub action_speed_delta: f64,
    pub lane_slack: f64,
    pub ego_driver: DriverModelParams,
    pub agent_driver: DriverModelParams,
    pub policy: PolicyConfig,
}

impl Default for ForwardSimConfig {
    fn default() -> Self {
        Self {
            dt: 0.2,
            horizon_steps: 25,
            frs_inflation: 0.2,
            corridor_margin: 0.5,
            max_key_vehicles: 4,
            leader_lateral_window: 1.75,
            leader_range: 80.0,
            action_speed_delta: 2.5,
            lane_slack: 1.0,
            ego_driver: DriverModelParams::default(),
            agent_driver: DriverModelParams::default(),
            policy: PolicyConfig::default(),
        }
    }
}

/// Non-probabilistic spatial-temporal occupancy of one agent: per-step
/// union of all predicted footprints, inflated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForwardReachableSet {
    pub agent: AgentId,
    /// One entry per step (horizon + 1), each a disjoint polygon cover.
    pub steps: Vec<Vec<Polygon2d>>,
}

impl ForwardReachableSet {
    pub fn contains(&self, step: usize, p: Point2d) -> bool {
        self.steps[step].iter().any(|poly| poly.contains(p))
    }

    pub fn intersects(&self, step: usize, footprint: &Polygon2d) -> bool {
        self.steps[step].iter().any(|poly| poly.intersects(footprint))
    }
}

/// Per-step union of predicted footprints, inflated by `inflation`.
pub fn compute_frs(
    agent: AgentId,
    half_length: f64,
    half_width: f64,
    predictions: &[&PredictedTrajectory],
    inflation: f64,
) -> ForwardReachableSet {
    assert!(!predictions.is_empty(), "reachable set needs at least one prediction");
    let horizon = predictions[0].states.len();
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let footprints: Vec<Polygon2d> = predictions
            .iter()
            .map(|traj| {
                let s = traj.states[t];
                Polygon::rectangle(
                    s.position(),
                    s.heading,
                    half_length + inflation,
                    half_width + inflation,
                )
                .expect("positive footprint dimensions")
            })
            .collect();
        steps.push(occupancy_union(&footprints));
    }
    ForwardReachableSet { agent, steps }
}

/// One simulated joint future under a specific policy and intention
/// combination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub policy: PolicySpec,
    pub combination: IntentionCombination,
    /// Ego trajectory, `horizon_steps + 1` states.
    pub ego: Vec<EgoState<f64>>,
    /// Per-agent trajectories, sorted by id, same length as `ego`.
    pub agents: Vec<(AgentId, Vec<AgentState>)>,
    pub probability: f64,
    /// True when the passive fallback ego replaced the nominal driver.
    pub fallback: bool,
    /// False when even the fallback failed the safety assessment.
    pub safe: bool,
}

impl Scenario {
    pub fn agent_states(&self, id: AgentId) -> Option<&[AgentState]> {
        self.agents
            .binary_search_by_key(&id, |(a, _)| *a)
            .ok()
            .map(|i| self.agents[i].1.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SafetyOutcome {
    Pass,
    Fail { step: usize, agent: AgentId },
}

/// Renders policy-conditioned scenarios from a shared prediction.
pub struct ScenarioRenderer<'a> {
    pub map: &'a LaneMap,
    pub world: &'a WorldSnapshot,
    pub vehicle: &'a VehicleParams<f64>,
    pub predictions: &'a [IntentionSet],
    pub config: &'a ForwardSimConfig,
    /// Multi-modal FRS per agent, aligned with `predictions`.
    frs: Vec<ForwardReachableSet>,
}

impl<'a> ScenarioRenderer<'a> {
    pub fn new(
        map: &'a LaneMap,
        world: &'a WorldSnapshot,
        vehicle: &'a VehicleParams<f64>,
        predictions: &'a [IntentionSet],
        config: &'a ForwardSimConfig,
    ) -> Self {
        for set in predictions {
            for traj in &set.trajectories {
                assert_eq!(
                    traj.states.len(),
                    config.horizon_steps + 1,
                    "prediction horizon must match the simulation horizon"
                );
            }
        }
        let frs = predictions
            .iter()
            .map(|set| {
                let agent = world.agent(set.agent).expect("prediction for unknown agent");
                let trajs: Vec<&PredictedTrajectory> = set.trajectories.iter().collect();
                compute_frs(
                    set.agent,
                    agent.half_length,
                    agent.half_width,
                    &trajs,
                    config.frs_inflation,
                )
            })
            .collect();
        Self { map, world, vehicle, predictions, config, frs }
    }

    pub fn frs_for(&self, id: AgentId) -> Option<&ForwardReachableSet> {
        self.frs.iter().find(|f| f.agent == id)
    }

    fn ego_lane(&self) -> LaneId {
        self.map
            .lane_at(self.world.ego.position(), self.config.lane_slack)
            .or_else(|| self.map.nearest_lane(self.world.ego.position()).map(|(id, _)| id))
            .expect("map has at least one lane")
    }

    fn reference_length(&self) -> f64 {
        let cruise = self
            .config
            .ego_driver
            .desired_speed
            .max(self.world.ego.speed);
        cruise * self.config.dt * self.config.horizon_steps as f64 + 40.0
    }

    /// Corridor polygon around the policy's reference line, from the ego's
    /// arc position forward.
    fn policy_corridor(&self, policy: &PolicySpec) -> Polygon2d {
        let current = self.ego_lane();
        let line = policy_reference_line(
            policy,
            self.map,
            self.world,
            current,
            self.reference_length(),
            self.vehicle.half_width,
            &self.config.policy,
        );
        let start = line.project(self.world.ego.position()).arc;
        let end = (start + self.reference_length()).min(line.total_length());
        let ahead = trim_polyline(&line, start, end);
        // Swept strip of the ego driving the reference line, plus margin.
        let half = self.vehicle.half_width + self.config.corridor_margin / 2.0;
        corridor_polygon(&ahead, half)
    }

    /// Key vehicles: agents whose chosen-intention occupancy crosses the
    /// policy corridor, plus the nearest leader on the current lane, capped
    /// by ascending distance.
    pub fn select_key_vehicles(
        &self,
        combo: &IntentionCombination,
        policy: &PolicySpec,
    ) -> Vec<AgentId> {
        let corridor = self.policy_corridor(policy);
        let ego_pos = self.world.ego.position();
        let mut keys: Vec<(f64, AgentId)> = Vec::new();

        for (id, traj) in &combo.choices {
            let agent = self.world.agent(*id).expect("combo references unknown agent");
            let crosses = traj.states.iter().any(|s| {
                let fp = Polygon::rectangle(
                    s.position(),
                    s.heading,
                    agent.half_length + self.config.frs_inflation,
                    agent.half_width + self.config.frs_inflation,
                )
                .expect("positive footprint dimensions");
                fp.intersects(&corridor)
            });
            if crosses {
                keys.push((ego_pos.distance(agent.state.position()), *id));
            }
        }

        // Nearest leader on the current lane joins regardless of corridor.
        let lane = self.map.lane(self.ego_lane()).expect("valid ego lane");
        let ego_arc = lane.centerline.project(ego_pos).arc;
        let leader = self
            .world
            .agents()
            .iter()
            .filter_map(|agent| {
                let proj = lane.centerline.project(agent.state.position());
                (proj.lateral.abs() <= lane.width / 2.0 && proj.arc > ego_arc)
                    .then_some((proj.arc - ego_arc, agent.id))
            })
            .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite arc"));
        if let Some((_, id)) = leader {
            if !keys.iter().any(|(_, k)| *k == id) {
                keys.push((ego_pos.distance(self.world.agent(id).unwrap().state.position()), id));
            }
        }

        keys.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distance").then(a.1.cmp(&b.1)));
        keys.truncate(self.config.max_key_vehicles);
        let mut ids: Vec<AgentId> = keys.into_iter().map(|(_, id)| id).collect();
        ids.sort();
        ids
    }

    /// Closed-loop rollout of one combination under `policy`.
    pub fn simulate_scenario(
        &self,
        combo: &IntentionCombination,
        key_vehicles: &[AgentId],
        policy: &PolicySpec,
    ) -> Scenario {
        self.rollout(combo, key_vehicles, policy, None)
    }

    /// Whether the rendered scenario keeps the ego clear of key-vehicle
    /// footprints and non-key reachable sets at every step.
    pub fn safety_assess(&self, scenario: &Scenario, key_vehicles: &[AgentId]) -> SafetyOutcome {
        for t in 0..scenario.ego.len() {
            let ego_fp = self.vehicle.footprint(&scenario.ego[t]);
            for (id, states) in &scenario.agents {
                let agent = self.world.agent(*id).expect("scenario references unknown agent");
                if key_vehicles.contains(id) {
                    if agent.footprint_at(&states[t]).intersects(&ego_fp) {
                        return SafetyOutcome::Fail { step: t, agent: *id };
                    }
                } else if let Some(frs) = self.frs_for(*id) {
                    if frs.intersects(t, &ego_fp) {
                        return SafetyOutcome::Fail { step: t, agent: *id };
                    }
                }
            }
        }
        SafetyOutcome::Pass
    }

    /// Re-render with the passive fallback ego after a failed assessment.
    pub fn simulate_with_fallback(
        &self,
        combo: &IntentionCombination,
        key_vehicles: &[AgentId],
        policy: &PolicySpec,
        violation: (usize, AgentId),
    ) -> Scenario {
        let mut scenario = self.rollout(combo, key_vehicles, policy, Some(violation));
        scenario.fallback = true;
        scenario
    }

    /// Exactly one scenario per combination: the closed-loop pass when it
    /// assesses safe, otherwise the fallback pass (flagged; `safe = false`
    /// when even the fallback fails).
    pub fn render(&self, combos: &[IntentionCombination], policy: &PolicySpec) -> Vec<Scenario> {
        combos
            .iter()
            .map(|combo| {
                let keys = self.select_key_vehicles(combo, policy);
                let mut scenario = self.simulate_scenario(combo, &keys, policy);
                match self.safety_assess(&scenario, &keys) {
                    SafetyOutcome::Pass => {
                        scenario.safe = true;
                        scenario
                    }
                    SafetyOutcome::Fail { step, agent } => {
                        let mut fb =
                            self.simulate_with_fallback(combo, &keys, policy, (step, agent));
                        fb.safe = self.safety_assess(&fb, &keys) == SafetyOutcome::Pass;
                        fb
                    }
                }
            })
            .collect()
    }

    // ------------------------------------------------------------------

    fn rollout(
        &self,
        combo: &IntentionCombination,
        key_vehicles: &[AgentId],
        policy: &PolicySpec,
        fallback_from: Option<(usize, AgentId)>,
    ) -> Scenario {
        let cfg = self.config;
        let current_lane = self.ego_lane();
        let lane = self.map.lane(current_lane).expect("valid ego lane");

        // Ego reference geometry and set speed.
        let ego_line = match fallback_from {
            None => policy_reference_line(
                policy,
                self.map,
                self.world,
                current_lane,
                self.reference_length(),
                self.vehicle.half_width,
                &cfg.policy,
            ),
            Some((step, agent)) => self.fallback_line(lane, step, agent, combo),
        };
        let ego_desired = policy.desired_speed(
            cfg.ego_driver.desired_speed,
            lane.speed_limit,
            &cfg.policy,
        );
        let ego_driver = cfg.ego_driver.with_desired_speed(ego_desired);

        // Key vehicles drive their chosen intention closed-loop; everyone
        // else replays the prediction.
        struct KeyAgent {
            idx: usize, // into world agents order of scenario.agents
            line: Option<Polyline2d>,
            driver: DriverModelParams,
            half_length: f64,
        }
        let mut agents: Vec<(AgentId, Vec<AgentState>)> = Vec::new();
        let mut keys: Vec<KeyAgent> = Vec::new();
        for (idx, (id, traj)) in combo.choices.iter().enumerate() {
            let agent = self.world.agent(*id).expect("combo references unknown agent");
            agents.push((*id, vec![agent.state]));
            if key_vehicles.contains(id) {
                let line = (!traj.intention.lane_sequence.is_empty())
                    .then(|| {
                        self.map
                            .sequence_centerline(&traj.intention.lane_sequence)
                            .expect("validated lane sequence")
                    });
                let delta = match traj.intention.longitudinal {
                    crate::prediction::LongitudinalAction::Maintain => 0.0,
                    crate::prediction::LongitudinalAction::Accelerate => cfg.action_speed_delta,
                    crate::prediction::LongitudinalAction::Decelerate => -cfg.action_speed_delta,
                };
                let driver = cfg
                    .agent_driver
                    .with_desired_speed((agent.state.speed + delta).max(0.0));
                keys.push(KeyAgent { idx, line, driver, half_length: agent.half_length });
            }
        }

        let mut ego_traj = vec![self.world.ego];
        for t in 0..cfg.horizon_steps {
            let ego_now = *ego_traj.last().unwrap();
            // Current positions of every vehicle for leader scans.
            let others: Vec<(Point2d, f64, f64)> = agents
                .iter()
                .map(|(id, states)| {
                    let s = if key_vehicles.contains(id) {
                        *states.last().unwrap()
                    } else {
                        let (_, traj) = combo
                            .choices
                            .iter()
                            .find(|(a, _)| a == id)
                            .expect("agent in combo");
                        traj.states[t]
                    };
                    let agent = self.world.agent(*id).unwrap();
                    (s.position(), s.speed, agent.half_length)
                })
                .collect();

            // Ego step.
            let ego_next = match fallback_from {
                None => {
                    let mut leader = self.leader_on(
                        &ego_line,
                        ego_now.position(),
                        self.vehicle.half_length,
                        &others,
                    );
                    if let LongitudinalPolicy::StopAt(stop_arc) = policy.longitudinal {
                        let ego_arc = ego_line.project(ego_now.position()).arc;
                        let gap = stop_arc - ego_arc - self.vehicle.half_length;
                        leader = match leader {
                            Some((g, v)) if g < gap => Some((g, v)),
                            _ => Some((gap, 0.0)),
                        };
                    }
                    let accel = idm_accel(ego_now.speed, leader, &ego_driver);
                    step_ego_toward(&ego_now, &ego_line, accel, cfg.dt, &ego_driver, self.vehicle)
                }
                Some(_) => {
                    // Passive fallback: comfort braking to a stop.
                    let accel = if ego_now.speed > 0.1 {
                        -cfg.ego_driver.comfort_decel
                    } else {
                        0.0
                    };
                    step_ego_toward(
                        &ego_now,
                        &ego_line,
                        accel,
                        cfg.dt,
                        &cfg.ego_driver,
                        self.vehicle,
                    )
                }
            };
            ego_traj.push(ego_next);

            // Agent steps.
            for key in &keys {
                let now = *agents[key.idx].1.last().unwrap();
                let next = match &key.line {
                    Some(line) => {
                        // Neighbors: ego plus every other agent.
                        let mut candidates: Vec<(Point2d, f64, f64)> = vec![(
                            ego_now.position(),
                            ego_now.speed,
                            self.vehicle.half_length,
                        )];
                        for (j, other) in others.iter().enumerate() {
                            if j != key.idx {
                                candidates.push(*other);
                            }
                        }
                        let leader =
                            self.leader_on(line, now.position(), key.half_length, &candidates);
                        let accel = idm_accel(now.speed, leader, &key.driver);
                        let kappa = pure_pursuit_curvature(
                            line,
                            now.position(),
                            now.heading,
                            now.speed,
                            &key.driver,
                        );
                        step_agent(&now, accel, kappa, cfg.dt)
                    }
                    // Off-map key vehicle: constant velocity.
                    None => step_agent(&now, 0.0, 0.0, cfg.dt),
                };
                agents[key.idx].1.push(next);
            }
            for (id, states) in agents.iter_mut() {
                if !key_vehicles.contains(id) {
                    let traj = combo.trajectory_for(*id).expect("agent in combo");
                    states.push(traj.states[t + 1]);
                }
            }
        }

        Scenario {
            policy: policy.clone(),
            combination: combo.clone(),
            ego: ego_traj,
            agents,
            probability: combo.probability,
            fallback: false,
            safe: false,
        }
    }

    /// Gap and speed of the nearest leader along `line`, if any.
    fn leader_on(
        &self,
        line: &Polyline2d,
        own_position: Point2d,
        own_half_length: f64,
        candidates: &[(Point2d, f64, f64)],
    ) -> Option<(f64, f64)> {
        let cfg = self.config;
        let own_arc = line.project(own_position).arc;
        let mut best: Option<(f64, f64)> = None;
        for (pos, speed, half_len) in candidates {
            let proj = line.project(*pos);
            if proj.lateral.abs() > cfg.leader_lateral_window {
                continue;
            }
            let ahead = proj.arc - own_arc;
            if ahead <= 0.1 || ahead > cfg.leader_range {
                continue;
            }
            let gap = ahead - half_len - own_half_length;
            if best.is_none_or(|(g, _)| gap < g) {
                best = Some((gap, *speed));
            }
        }
        best
    }

    /// Fallback reference: current lane, shifted away from the violator
    /// when the lane width permits.
    fn fallback_line(
        &self,
        lane: &crate::map::Lane,
        step: usize,
        agent: AgentId,
        combo: &IntentionCombination,
    ) -> Polyline2d {
        let violator_pos = combo
            .trajectory_for(agent)
            .map(|traj| traj.states[step.min(traj.states.len() - 1)].position())
            .unwrap_or_else(|| self.world.agent(agent).expect("known agent").state.position());
        let violator_lateral = lane.centerline.project(violator_pos).lateral;
        let available = lane.width / 2.0 - self.vehicle.half_width - 0.2;
        if available <= 0.05 {
            return lane.centerline.clone();
        }
        let shift = -violator_lateral.signum() * available.min(0.8);
        lane.centerline.offset(shift).unwrap_or_else(|_| lane.centerline.clone())
    }
}

/// Sub-polyline over `[start, end]` arc length.
fn trim_polyline(line: &Polyline2d, start: f64, end: f64) -> Polyline2d {
    let end = end.min(line.total_length());
    let start = start.clamp(0.0, (end - 0.5).max(0.0));
    let n = (((end - start) / 5.0).ceil() as usize).max(1);
    let mut pts = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let arc = start + (end - start) * i as f64 / n as f64;
        let p = line.point_at(arc);
        if pts.last().is_none_or(|q: &Point2d| q.distance(p) > 1e-9) {
            pts.push(p);
        }
    }
    Polyline::new(pts).unwrap_or_else(|_| line.clone())
}

/// Strip of half-width `half` around a reference line.
fn corridor_polygon(line: &Polyline2d, half: f64) -> Polygon2d {
    let left = line.offset(half).expect("valid corridor offset");
    let right = line.offset(-half).expect("valid corridor offset");
    let mut ring: Vec<Point2d> = right.points().to_vec();
    ring.extend(left.points().iter().rev());
    Polygon::new(ring).expect("corridor ring is simple")
}
