//! Semantic-level ego policies: enumeration over the current scene, the
//! reference geometry each policy induces, reward evaluation over
//! (scenario tree, trajectory tree) pairs, and the planning cycle that ties
//! prediction, forward simulation, tree construction, and trajectory
//! optimization together.

use crate::map::{LaneId, LaneMap, Polyline2d, Route};
use crate::world::WorldSnapshot;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LateralPolicy {
    LaneKeep,
    /// Change toward an explicit target lane sequence.
    LaneChange(Vec<LaneId>),
    /// Shift around a static blocker in the current lane.
    Bypass,
    /// Shift to the lane edge (fallback posture).
    InLaneSiding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LongitudinalPolicy {
    Maintain,
    Accelerate,
    Decelerate,
    /// Stop at an arc-length position along the route.
    StopAt(f64),
}

/// One semantic-level policy option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub lateral: LateralPolicy,
    pub longitudinal: LongitudinalPolicy,
}

impl PolicySpec {
    pub fn lane_keep(longitudinal: LongitudinalPolicy) -> Self {
        Self { lateral: LateralPolicy::LaneKeep, longitudinal }
    }

    /// Stable human-readable id used for ordering, hysteresis, and traces.
    pub fn label(&self) -> String {
        let lat = match &self.lateral {
            LateralPolicy::LaneKeep => "keep".to_string(),
            LateralPolicy::LaneChange(seq) => {
                let ids: Vec<String> = seq.iter().map(|l| l.to_string()).collect();
                format!("change({})", ids.join(">"))
            }
            LateralPolicy::Bypass => "bypass".to_string(),
            LateralPolicy::InLaneSiding => "siding".to_string(),
        };
        let lon = match self.longitudinal {
            LongitudinalPolicy::Maintain => "maintain".to_string(),
            LongitudinalPolicy::Accelerate => "accelerate".to_string(),
            LongitudinalPolicy::Decelerate => "decelerate".to_string(),
            LongitudinalPolicy::StopAt(s) => format!("stop@{s:.1}"),
        };
        format!("{lat}/{lon}")
    }

    /// Target lane sequence this policy steers toward.
    pub fn target_sequence(
        &self,
        map: &LaneMap,
        current: LaneId,
        min_length: f64,
    ) -> Vec<LaneId> {
        match &self.lateral {
            LateralPolicy::LaneChange(seq) if !seq.is_empty() => {
                let mut out = seq.clone();
                // Extend past the explicit sequence if it is short.
                if let Some(&last) = out.last() {
                    if let Ok(ext) = map.extend_sequence(last, min_length) {
                        for id in ext.into_iter().skip(1) {
                            if !out.contains(&id) {
                                out.push(id);
                            }
                        }
                    }
                }
                out
            }
            _ => map.extend_sequence(current, min_length).unwrap_or_else(|_| vec![current]),
        }
    }

    /// IDM set speed for this policy's longitudinal action.
    pub fn desired_speed(&self, base: f64, lane_limit: f64, cfg: &PolicyConfig) -> f64 {
        let base = base.min(lane_limit);
        match self.longitudinal {
            LongitudinalPolicy::Maintain => base,
            LongitudinalPolicy::Accelerate => (base + cfg.accel_boost).min(lane_limit),
            LongitudinalPolicy::Decelerate => (base - cfg.decel_drop).max(0.0),
            LongitudinalPolicy::StopAt(_) => base,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Speed added to the base desired speed by Accelerate, m/s.
    pub accel_boost: f64,
    /// Speed removed by Decelerate, m/s.
    pub decel_drop: f64,
    /// Agents slower than this count as static blockers, m/s.
    pub blocker_speed: f64,
    /// How far ahead a blocker triggers Bypass, meters.
    pub blocker_range: f64,
    /// How far ahead a route stop position is considered, meters.
    pub stop_range: f64,
    /// Enumeration cap.
    pub max_policies: usize,
    /// Lateral slack when locating the ego lane, meters.
    pub lane_slack: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            accel_boost: 2.0,
            decel_drop: 3.0,
            blocker_speed: 0.3,
            blocker_range: 40.0,
            stop_range: 60.0,
            max_policies: 9,
            lane_slack: 1.0,
        }
    }
}

/// Applicable policies for the current scene, most route-relevant first,
/// capped at `cfg.max_policies`.
///
/// Lane-keep variants always apply; lane changes are offered per adjacent
/// lane on the route (an empty route permits all lanes); Bypass appears when
/// a near-static agent blocks the ego lane ahead; StopAt appears when the
/// route carries a stop position within range.
pub fn enumerate_policies(
    world: &WorldSnapshot,
    map: &LaneMap,
    route: &Route,
    cfg: &PolicyConfig,
) -> Vec<PolicySpec> {
    let ego_pos = world.ego.position();
    let Some(current) = map.lane_at(ego_pos, cfg.lane_slack) else {
        return vec![PolicySpec::lane_keep(LongitudinalPolicy::Maintain)];
    };
    let lane = map.lane(current).expect("lane_at returns valid ids");
    let ego_arc = lane.centerline.project(ego_pos).arc;

    let longitudinal = [
        LongitudinalPolicy::Maintain,
        LongitudinalPolicy::Accelerate,
        LongitudinalPolicy::Decelerate,
    ];

    let mut laterals: Vec<LateralPolicy> = vec![LateralPolicy::LaneKeep];
    let routable = |id: LaneId| route.lanes.is_empty() || route.contains(id);
    for neighbor in [lane.left, lane.right].into_iter().flatten() {
        if routable(neighbor) {
            laterals.push(LateralPolicy::LaneChange(vec![neighbor]));
        }
    }
    // Static blocker ahead in the ego lane?
    let blocked = world.agents().iter().any(|agent| {
        let proj = lane.centerline.project(agent.state.position());
        agent.state.speed < cfg.blocker_speed
            && proj.lateral.abs() <= lane.width / 2.0
            && proj.arc > ego_arc
            && proj.arc - ego_arc < cfg.blocker_range
    });
    if blocked {
        laterals.push(LateralPolicy::Bypass);
    }

    let mut policies = Vec::new();
    for lat in &laterals {
        for lon in longitudinal {
            policies.push(PolicySpec { lateral: lat.clone(), longitudinal: lon });
        }
    }
    if let Some(stop_arc) = route.stop_position {
        if stop_arc > ego_arc && stop_arc - ego_arc < cfg.stop_range {
            policies.push(PolicySpec::lane_keep(LongitudinalPolicy::StopAt(stop_arc)));
        }
    }
    policies.truncate(cfg.max_policies);
    policies
}

/// Reference centerline a policy steers toward, long enough to cover
/// `min_length` of travel. Bypass and siding shift the line laterally.
pub fn policy_reference_line(
    policy: &PolicySpec,
    map: &LaneMap,
    world: &WorldSnapshot,
    current: LaneId,
    min_length: f64,
    ego_half_width: f64,
    cfg: &PolicyConfig,
) -> Polyline2d {
    let seq = policy.target_sequence(map, current, min_length);
    let line = map.sequence_centerline(&seq).expect("validated sequences");
    match &policy.lateral {
        LateralPolicy::Bypass => {
            let lane = map.lane(current).expect("valid lane");
            let ego_arc = lane.centerline.project(world.ego.position()).arc;
            // Shift away from the nearest blocker ahead; default to the left.
            let blocker_side = world
                .agents()
                .iter()
                .filter_map(|agent| {
                    let proj = lane.centerline.project(agent.state.position());
                    (agent.state.speed < cfg.blocker_speed && proj.arc > ego_arc)
                        .then_some((proj.arc, proj.lateral, agent.half_width))
                })
                .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite arc"));
            let (sign, blocker_half_width) = match blocker_side {
                Some((_, lateral, hw)) => (if lateral > 0.0 { -1.0 } else { 1.0 }, hw),
                None => (1.0, 1.0),
            };
            let shift = sign * (blocker_half_width + ego_half_width + 0.4);
            line.offset(shift).unwrap_or(line)
        }
        LateralPolicy::InLaneSiding => {
            let lane = map.lane(current).expect("valid lane");
            let shift = (lane.width / 2.0 - ego_half_width - 0.2).max(0.0);
            line.offset(shift).unwrap_or(line)
        }
        _ => line,
    }
}
