//! One planning cycle: predict every agent, enumerate the joint intention
//! combinations once, then per policy render the policy-conditioned scenario
//! set, assemble it into a scenario tree, optimize the risk-aware trajectory
//! tree, and score the result. The best-scoring policy wins; a challenger
//! must beat the previous cycle's policy by a margin so the chosen policy
//! does not flap between near-equal options.

use std::time::Instant;

use branchplan_core::dynamics::VehicleParams;
use branchplan_core::forward_sim::{ForwardSimConfig, Scenario, ScenarioRenderer};
use branchplan_core::map::{LaneMap, Route};
use branchplan_core::policy::{enumerate_policies, policy_reference_line, PolicySpec};
use branchplan_core::prediction::{
    intention_combinations, predict_agent, IntentionSet, PredictionConfig,
};
use branchplan_core::scenario_tree::{build_tree, DivergenceConfig, ScenarioTree};
use branchplan_core::world::WorldSnapshot;
use branchplan_solver::{
    rcp_optimize, BicycleModel, BranchContext, CostModel, CostWeights, RcpOptions, RcpSolution,
    SolverError, StepObstacles, TrajectoryTree,
};

use crate::reward::{evaluate_policy, PolicyReward, RewardWeights};

/// How the branchpoint is chosen — the ablation axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchMode {
    /// Divergence-driven branch time.
    Dynamic,
    /// Forced branch time in seconds, regardless of divergence.
    Fixed(f64),
    /// No contingencies: plan on the most likely scenario only.
    MostLikelyOnly,
}

#[derive(Debug, Clone)]
pub struct PlannerParams {
    pub vehicle: VehicleParams<f64>,
    pub prediction: PredictionConfig,
    pub forward_sim: ForwardSimConfig,
    pub divergence: DivergenceConfig,
    pub cost: CostWeights<f64>,
    pub rcp: RcpOptions,
    pub reward: RewardWeights,
    pub branch_mode: BranchMode,
    /// A challenger must beat the previous policy's reward by this much.
    pub hysteresis_margin: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            vehicle: VehicleParams::default(),
            prediction: PredictionConfig::default(),
            forward_sim: ForwardSimConfig::default(),
            divergence: DivergenceConfig::default(),
            cost: CostWeights::default(),
            rcp: RcpOptions::default(),
            reward: RewardWeights::default(),
            branch_mode: BranchMode::Dynamic,
            hysteresis_margin: 0.3,
        }
    }
}

/// One evaluated policy: its scenario set, solved tree, and score.
#[derive(Debug, Clone)]
pub struct PolicyOutcome {
    pub policy: PolicySpec,
    pub scenarios: ScenarioTree,
    pub solution: RcpSolution,
    pub reward: PolicyReward,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    /// Index of the chosen policy in `outcomes`.
    pub chosen: usize,
    pub outcomes: Vec<PolicyOutcome>,
    /// True when every scenario of every policy failed the safety
    /// assessment even after fallback; the chosen plan is then the least
    /// bad contingency posture, not a cleared one.
    pub degraded: bool,
    /// Wall-clock planning time, seconds. Excluded from serialized traces.
    pub plan_seconds: f64,
}

impl PlanResult {
    pub fn policy(&self) -> &PolicySpec {
        &self.outcomes[self.chosen].policy
    }

    pub fn tree(&self) -> &TrajectoryTree<f64> {
        &self.outcomes[self.chosen].solution.tree
    }

    pub fn reward(&self) -> &PolicyReward {
        &self.outcomes[self.chosen].reward
    }

    pub fn scenarios(&self) -> &ScenarioTree {
        &self.outcomes[self.chosen].scenarios
    }
}

/// Runs one full planning cycle over the snapshot.
///
/// Deterministic: same snapshot, route, previous policy, and params give an
/// identical result. `previous` is the policy chosen last cycle; it wins
/// ties and keeps its seat unless beaten by the hysteresis margin.
pub fn plan(
    world: &WorldSnapshot,
    map: &LaneMap,
    route: &Route,
    previous: Option<&PolicySpec>,
    params: &PlannerParams,
) -> Result<PlanResult, SolverError> {
    let started = Instant::now();
    let predictions: Vec<IntentionSet> = world
        .agents()
        .iter()
        .map(|agent| predict_agent(agent, map, &params.prediction))
        .collect();
    plan_with_predictions(world, map, route, previous, &predictions, params, started)
}

/// Planning cycle entry with the prediction stage supplied by the caller —
/// the hook the noise-injection experiments use to perturb intentions
/// between prediction and everything downstream.
pub fn plan_predicted(
    world: &WorldSnapshot,
    map: &LaneMap,
    route: &Route,
    previous: Option<&PolicySpec>,
    predictions: &[IntentionSet],
    params: &PlannerParams,
) -> Result<PlanResult, SolverError> {
    let started = Instant::now();
    plan_with_predictions(world, map, route, previous, predictions, params, started)
}

fn plan_with_predictions(
    world: &WorldSnapshot,
    map: &LaneMap,
    route: &Route,
    previous: Option<&PolicySpec>,
    predictions: &[IntentionSet],
    params: &PlannerParams,
    started: Instant,
) -> Result<PlanResult, SolverError> {
    let combos = intention_combinations(
        predictions,
        params.prediction.max_per_agent,
        params.prediction.max_combinations,
    );
    let policies = enumerate_policies(world, map, route, &params.forward_sim.policy);
    let renderer =
        ScenarioRenderer::new(map, world, &params.vehicle, predictions, &params.forward_sim);
    let model = BicycleModel::new(params.vehicle.clone(), params.forward_sim.dt);

    let mut outcomes = Vec::with_capacity(policies.len());
    let mut last_error = None;
    for policy in policies {
        let mut scenarios = renderer.render(&combos, &policy);
        if params.branch_mode == BranchMode::MostLikelyOnly {
            let best = scenarios
                .iter()
                .enumerate()
                .max_by(|a, b| {
                    a.1.probability.partial_cmp(&b.1.probability).expect("finite probability")
                })
                .map(|(i, _)| i)
                .expect("render yields one scenario per combination");
            let mut only = scenarios.swap_remove(best);
            only.probability = 1.0;
            scenarios = vec![only];
        }
        let mut scenario_tree = build_tree(scenarios, policy.clone(), &params.divergence);
        if let BranchMode::Fixed(seconds) = params.branch_mode {
            let forced = (seconds / params.divergence.dt).round() as usize;
            scenario_tree.branch_step = forced.min(scenario_tree.horizon.saturating_sub(1));
        }

        let (cost, desired_speed, target_sequence) =
            assemble_cost(&policy, &scenario_tree, &renderer, map, world, params);
        let solution = match rcp_optimize(&scenario_tree, &cost, &model, &params.rcp) {
            Ok(s) => s,
            Err(e) => {
                // One policy failing to optimize must not kill the cycle.
                last_error = Some(e);
                continue;
            }
        };
        let reward = evaluate_policy(
            &scenario_tree,
            &solution.tree,
            &cost,
            solution.objective,
            desired_speed,
            &target_sequence,
            route,
            &params.divergence,
            &params.reward,
        );
        outcomes.push(PolicyOutcome { policy, scenarios: scenario_tree, solution, reward });
    }
    if outcomes.is_empty() {
        return Err(last_error.unwrap_or(SolverError::Empty("no applicable policies")));
    }

    let chosen = select(&outcomes, previous, params.hysteresis_margin);
    let degraded =
        outcomes.iter().all(|o| o.scenarios.scenarios.iter().all(|s| !s.safe));
    Ok(PlanResult {
        chosen,
        outcomes,
        degraded,
        plan_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Argmax reward with sticky selection: the previous policy keeps its seat
/// unless a challenger clears it by the margin; among equals, policy labels
/// order deterministically.
fn select(outcomes: &[PolicyOutcome], previous: Option<&PolicySpec>, margin: f64) -> usize {
    let best = (0..outcomes.len())
        .min_by(|&a, &b| {
            outcomes[b]
                .reward
                .total
                .partial_cmp(&outcomes[a].reward.total)
                .expect("finite reward")
                .then_with(|| outcomes[a].policy.label().cmp(&outcomes[b].policy.label()))
        })
        .expect("at least one outcome");
    if let Some(prev) = previous {
        if let Some(held) = outcomes.iter().position(|o| &o.policy == prev) {
            if outcomes[best].reward.total <= outcomes[held].reward.total + margin {
                return held;
            }
        }
    }
    best
}

/// Builds the optimizer's cost model for one policy's scenario tree: the
/// policy reference line, the map's drivable area, and per-branch obstacle
/// contexts — key vehicles as simulated footprints, everyone else as their
/// reachable sets.
fn assemble_cost(
    policy: &PolicySpec,
    tree: &ScenarioTree,
    renderer: &ScenarioRenderer<'_>,
    map: &LaneMap,
    world: &WorldSnapshot,
    params: &PlannerParams,
) -> (CostModel<f64>, f64, Vec<branchplan_core::map::LaneId>) {
    let cfg = &params.forward_sim;
    let ego_pos = world.ego.position();
    let current = map
        .lane_at(ego_pos, cfg.lane_slack)
        .or_else(|| map.nearest_lane(ego_pos).map(|(id, _)| id))
        .expect("map has at least one lane");
    let lane = map.lane(current).expect("valid lane id");
    let min_length = cfg.ego_driver.desired_speed.max(world.ego.speed)
        * cfg.dt
        * cfg.horizon_steps as f64
        + 40.0;
    let reference = policy_reference_line(
        policy,
        map,
        world,
        current,
        min_length,
        params.vehicle.half_width,
        &cfg.policy,
    );
    let desired_speed =
        policy.desired_speed(cfg.ego_driver.desired_speed, lane.speed_limit, &cfg.policy);
    let target_sequence = policy.target_sequence(map, current, min_length);

    let branches = tree
        .scenarios
        .iter()
        .map(|scenario| branch_context(scenario, tree.horizon, desired_speed, renderer, world))
        .collect();

    let cost = CostModel {
        weights: params.cost.clone(),
        vehicle: params.vehicle.clone(),
        drivable: map.drivable_area().clone(),
        reference,
        desired_area: None,
        branches,
    };
    (cost, desired_speed, target_sequence)
}

fn branch_context(
    scenario: &Scenario,
    horizon: usize,
    desired_speed: f64,
    renderer: &ScenarioRenderer<'_>,
    world: &WorldSnapshot,
) -> BranchContext<f64> {
    let keys = renderer.select_key_vehicles(&scenario.combination, &scenario.policy);
    let mut steps = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        let mut obstacles = StepObstacles::default();
        for (id, states) in &scenario.agents {
            if keys.contains(id) {
                let agent = world.agent(*id).expect("scenario references known agents");
                obstacles.vehicles.push(agent.footprint_at(&states[t]));
            } else if let Some(frs) = renderer.frs_for(*id) {
                obstacles.reachable.extend(frs.steps[t].iter().cloned());
            }
        }
        steps.push(obstacles);
    }
    BranchContext {
        probability: scenario.probability,
        steps,
        speed_reference: vec![desired_speed; horizon + 1],
    }
}
