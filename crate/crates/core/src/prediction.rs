//! Rule-based multi-modal prediction: per-agent intentions over candidate
//! lane sequences and longitudinal actions, kinematic rollout trajectories,
//! optional probability noise injection, and the pruned Cartesian product of
//! per-agent intentions that downstream scenario generation consumes.

use crate::driver::{pure_pursuit_curvature, step_agent, DriverModelParams};
use crate::map::{LaneId, LaneMap, Polyline2d};
use crate::world::{Agent, AgentId, AgentState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LongitudinalAction {
    Maintain,
    Accelerate,
    Decelerate,
}

impl LongitudinalAction {
    pub const ALL: [LongitudinalAction; 3] = [
        LongitudinalAction::Maintain,
        LongitudinalAction::Accelerate,
        LongitudinalAction::Decelerate,
    ];

    pub fn accel(self, nominal: f64) -> f64 {
        match self {
            LongitudinalAction::Maintain => 0.0,
            LongitudinalAction::Accelerate => nominal,
            LongitudinalAction::Decelerate => -nominal,
        }
    }
}

/// One hypothesis about an agent: a target lane sequence plus a
/// longitudinal action. An empty lane sequence means off-map free space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentIntention {
    pub lane_sequence: Vec<LaneId>,
    pub longitudinal: LongitudinalAction,
    pub probability: f64,
}

/// Intention with its constant-action rollout over the horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictedTrajectory {
    pub intention: AgentIntention,
    /// `horizon_steps + 1` states, current state first.
    pub states: Vec<AgentState>,
}

impl PredictedTrajectory {
    #[inline]
    pub fn probability(&self) -> f64 {
        self.intention.probability
    }
}

/// All hypotheses for one agent; probabilities sum to 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntentionSet {
    pub agent: AgentId,
    pub trajectories: Vec<PredictedTrajectory>,
}

impl IntentionSet {
    pub fn total_probability(&self) -> f64 {
        self.trajectories.iter().map(|t| t.probability()).sum()
    }
}

/// One joint choice of intention per agent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntentionCombination {
    /// Sorted by agent id.
    pub choices: Vec<(AgentId, PredictedTrajectory)>,
    pub probability: f64,
}

impl IntentionCombination {
    pub fn trajectory_for(&self, id: AgentId) -> Option<&PredictedTrajectory> {
        self.choices
            .binary_search_by_key(&id, |(a, _)| *a)
            .ok()
            .map(|i| &self.choices[i].1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionConfig {
    pub horizon_steps: usize,
    pub dt: f64,
    /// Accel magnitude of the Accelerate / Decelerate actions, m/s^2.
    pub nominal_accel: f64,
    /// Longitudinal behavior priors; zero-prior actions are not enumerated.
    pub prior_maintain: f64,
    pub prior_accelerate: f64,
    pub prior_decelerate: f64,
    /// Softmax temperature (meters) of the lateral lane vote.
    pub lateral_temperature: f64,
    /// Top-m intentions kept per agent when combining.
    pub max_per_agent: usize,
    /// Maximum joint combinations kept.
    pub max_combinations: usize,
    /// Lookahead parameters of the rollout's lateral tracker.
    pub driver: DriverModelParams,
    /// Lateral slack (meters beyond half lane width) for on-lane tests.
    pub lane_slack: f64,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        Self {
            horizon_steps: 25,
            dt: 0.2,
            nominal_accel: 1.0,
            prior_maintain: 0.6,
            prior_accelerate: 0.2,
            prior_decelerate: 0.2,
            lateral_temperature: 1.0,
            max_per_agent: 2,
            max_combinations: 4,
            driver: DriverModelParams::default(),
            lane_slack: 1.0,
        }
    }
}

impl PredictionConfig {
    fn priors(&self) -> Vec<(LongitudinalAction, f64)> {
        let raw = [
            (LongitudinalAction::Maintain, self.prior_maintain),
            (LongitudinalAction::Accelerate, self.prior_accelerate),
            (LongitudinalAction::Decelerate, self.prior_decelerate),
        ];
        let total: f64 = raw.iter().map(|(_, p)| p).sum();
        assert!(total > 0.0, "all longitudinal priors are zero");
        raw.iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|&(a, p)| (a, p / total))
            .collect()
    }
}

/// Multi-modal prediction for one agent.
///
/// Candidate lateral targets are the agent's current lane and its immediate
/// neighbors; each candidate's probability comes from a softmax vote over
/// the negative mean absolute lateral offset of the agent's recent history
/// to the candidate centerline. Longitudinal actions use the configured
/// priors. Off-map agents get a single constant-velocity hypothesis.
pub fn predict_agent(agent: &Agent, map: &LaneMap, config: &PredictionConfig) -> IntentionSet {
    let position = agent.state.position();
    let Some(current) = map.lane_at(position, config.lane_slack) else {
        return free_space_set(agent, config);
    };
    let lane = map.lane(current).expect("lane_at returns valid ids");
    let mut candidates: Vec<LaneId> = vec![current];
    candidates.extend(lane.left);
    candidates.extend(lane.right);

    // Lane sequences long enough to cover the rollout.
    let travel = agent.state.speed * config.dt * config.horizon_steps as f64
        + 0.5 * config.nominal_accel * (config.dt * config.horizon_steps as f64).powi(2)
        + config.driver.lookahead(agent.state.speed)
        + 10.0;
    let sequences: Vec<(Vec<LaneId>, Polyline2d)> = candidates
        .iter()
        .map(|&id| {
            let seq = map.extend_sequence(id, travel).expect("validated map");
            let line = map.sequence_centerline(&seq).expect("validated map");
            (seq, line)
        })
        .collect();

    // Softmax lateral vote over mean |offset| of the history.
    let history: &[AgentState] =
        if agent.history.is_empty() { std::slice::from_ref(&agent.state) } else { &agent.history };
    let scores: Vec<f64> = sequences
        .iter()
        .map(|(_, line)| {
            let mean: f64 = history
                .iter()
                .map(|s| line.project(s.position()).lateral.abs())
                .sum::<f64>()
                / history.len() as f64;
            -mean / config.lateral_temperature
        })
        .collect();
    let shift = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (s - shift).exp()).collect();
    let total: f64 = weights.iter().sum();

    let mut trajectories = Vec::new();
    for ((seq, line), w) in sequences.iter().zip(&weights) {
        let lateral_p = w / total;
        for (action, prior) in config.priors() {
            let intention = AgentIntention {
                lane_sequence: seq.clone(),
                longitudinal: action,
                probability: lateral_p * prior,
            };
            let states = rollout(agent, line, action.accel(config.nominal_accel), config);
            trajectories.push(PredictedTrajectory { intention, states });
        }
    }
    IntentionSet { agent: agent.id, trajectories }
}

fn free_space_set(agent: &Agent, config: &PredictionConfig) -> IntentionSet {
    let mut states = Vec::with_capacity(config.horizon_steps + 1);
    states.push(agent.state);
    for _ in 0..config.horizon_steps {
        states.push(step_agent(states.last().unwrap(), 0.0, 0.0, config.dt));
    }
    IntentionSet {
        agent: agent.id,
        trajectories: vec![PredictedTrajectory {
            intention: AgentIntention {
                lane_sequence: Vec::new(),
                longitudinal: LongitudinalAction::Maintain,
                probability: 1.0,
            },
            states,
        }],
    }
}

fn rollout(
    agent: &Agent,
    line: &Polyline2d,
    accel: f64,
    config: &PredictionConfig,
) -> Vec<AgentState> {
    let mut states = Vec::with_capacity(config.horizon_steps + 1);
    let mut s = agent.state;
    states.push(s);
    for _ in 0..config.horizon_steps {
        let kappa = pure_pursuit_curvature(line, s.position(), s.heading, s.speed, &config.driver);
        s = step_agent(&s, accel, kappa, config.dt);
        states.push(s);
    }
    states
}

/// Boost the probability mass of intentions targeting `target_lane` by
/// `boost` of the remaining mass, renormalizing the rest. No-op when the
/// lane is absent from the set or the boost is zero.
pub fn inject_noise(set: &IntentionSet, target_lane: LaneId, boost: f64) -> IntentionSet {
    assert!((0.0..1.0).contains(&boost), "boost must be in [0, 1)");
    let targets = |t: &PredictedTrajectory| t.intention.lane_sequence.first() == Some(&target_lane);
    let mass: f64 = set.trajectories.iter().filter(|t| targets(t)).map(|t| t.probability()).sum();
    if mass <= 0.0 || mass >= 1.0 || boost == 0.0 {
        return set.clone();
    }
    let boosted = mass + boost * (1.0 - mass);
    let scale_target = boosted / mass;
    let scale_rest = (1.0 - boosted) / (1.0 - mass);
    let trajectories = set
        .trajectories
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.intention.probability *= if targets(&t) { scale_target } else { scale_rest };
            t
        })
        .collect();
    IntentionSet { agent: set.agent, trajectories }
}

/// Cartesian product of each agent's top-m intentions, sorted by joint
/// probability (ties broken by choice order), truncated, renormalized.
pub fn intention_combinations(
    sets: &[IntentionSet],
    max_per_agent: usize,
    max_combinations: usize,
) -> Vec<IntentionCombination> {
    assert!(max_per_agent >= 1 && max_combinations >= 1);
    if sets.is_empty() {
        return vec![IntentionCombination { choices: Vec::new(), probability: 1.0 }];
    }
    // Top-m per agent, by descending probability with stable order for ties.
    let top: Vec<(AgentId, Vec<&PredictedTrajectory>)> = sets
        .iter()
        .map(|set| {
            let mut idx: Vec<usize> = (0..set.trajectories.len()).collect();
            idx.sort_by(|&a, &b| {
                set.trajectories[b]
                    .probability()
                    .partial_cmp(&set.trajectories[a].probability())
                    .expect("finite probability")
                    .then(a.cmp(&b))
            });
            let chosen = idx.iter().take(max_per_agent).map(|&i| &set.trajectories[i]).collect();
            (set.agent, chosen)
        })
        .collect();

    // Iterative Cartesian product with the per-agent selection indices kept
    // for deterministic tie-breaking.
    let mut combos: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 1.0)];
    for (_, choices) in &top {
        let mut next = Vec::with_capacity(combos.len() * choices.len());
        for (prefix, p) in &combos {
            for (i, t) in choices.iter().enumerate() {
                let mut indices = prefix.clone();
                indices.push(i);
                next.push((indices, p * t.probability()));
            }
        }
        combos = next;
    }
    combos.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).expect("finite probability").then(a.0.cmp(&b.0))
    });
    combos.truncate(max_combinations);
    let total: f64 = combos.iter().map(|(_, p)| p).sum();

    combos
        .into_iter()
        .map(|(indices, p)| {
            let mut choices: Vec<(AgentId, PredictedTrajectory)> = top
                .iter()
                .zip(&indices)
                .map(|((id, options), &i)| (*id, options[i].clone()))
                .collect();
            choices.sort_by_key(|(id, _)| *id);
            IntentionCombination { choices, probability: p / total }
        })
        .collect()
}
