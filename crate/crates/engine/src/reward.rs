//! Policy reward over a (scenario tree, trajectory tree) pair.
//!
//! Five non-negative components, each normalized to stay comparable across
//! horizons and branch counts:
//!
//! * safety — probability-weighted mean hinge on the per-node clearance to
//!   the branch's obstacles, engaging below `safe_distance`;
//! * efficiency — gap between the probability-weighted mean plan speed and
//!   the policy's desired speed;
//! * navigation — fraction of the policy's target lane sequence that leaves
//!   the route (an empty route permits every lane);
//! * planning cost — the optimizer's final objective per horizon step;
//! * uncertainty — how early the scenarios force the branchpoint, plus the
//!   mean pairwise spread of the branch endpoints.
//!
//! The total is the negative weighted sum; higher is better.

use branchplan_core::map::{LaneId, Route};
use branchplan_core::scenario_tree::{DivergenceConfig, ScenarioTree};
use branchplan_solver::{CostModel, TrajectoryTree};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub safety: f64,
    pub efficiency: f64,
    pub navigation: f64,
    pub planning_cost: f64,
    pub uncertainty: f64,
    /// Clearance (m) below which the safety component engages.
    pub safe_distance: f64,
    /// Normalizer (m) for the branch-endpoint spread.
    pub spread_scale: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            safety: 10.0,
            efficiency: 1.0,
            navigation: 2.0,
            planning_cost: 0.5,
            uncertainty: 1.0,
            safe_distance: 3.0,
            spread_scale: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyReward {
    pub safety: f64,
    pub efficiency: f64,
    pub navigation: f64,
    pub planning_cost: f64,
    pub uncertainty: f64,
    pub total: f64,
}

impl PolicyReward {
    /// The defining identity; holds exactly by construction.
    pub fn recompute_total(&self, w: &RewardWeights) -> f64 {
        -(w.safety * self.safety
            + w.efficiency * self.efficiency
            + w.navigation * self.navigation
            + w.planning_cost * self.planning_cost
            + w.uncertainty * self.uncertainty)
    }
}

/// Scores one policy's solved plan against its scenario set.
///
/// `cost` must be the model the tree was optimized under: its branch
/// contexts supply the per-step obstacles the safety component measures
/// clearance against.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_policy(
    scenarios: &ScenarioTree,
    tree: &TrajectoryTree<f64>,
    cost: &CostModel<f64>,
    objective: f64,
    desired_speed: f64,
    target_sequence: &[LaneId],
    route: &Route,
    divergence: &DivergenceConfig,
    weights: &RewardWeights,
) -> PolicyReward {
    let branches = tree.num_branches;
    debug_assert_eq!(branches, cost.branches.len());
    debug_assert_eq!(branches, scenarios.scenarios.len());

    let mut safety = 0.0;
    let mut mean_speed = 0.0;
    for k in 0..branches {
        let p = cost.branches[k].probability;
        let states = tree.branch_states(k);
        let mut hinge_sum = 0.0;
        let mut speed_sum = 0.0;
        for (t, state) in states.iter().enumerate() {
            let step = &cost.branches[k].steps[t];
            let clearance = step
                .vehicles
                .iter()
                .chain(step.reachable.iter())
                .map(|poly| cost.vehicle.footprint(state).distance_to(poly))
                .fold(f64::INFINITY, f64::min);
            hinge_sum += (weights.safe_distance - clearance).max(0.0);
            speed_sum += state.speed;
        }
        let n = states.len() as f64;
        safety += p * hinge_sum / n;
        mean_speed += p * speed_sum / n;
    }
    let efficiency = (mean_speed - desired_speed).abs();

    let navigation = if route.lanes.is_empty() || target_sequence.is_empty() {
        0.0
    } else {
        let off = target_sequence.iter().filter(|id| !route.contains(**id)).count();
        off as f64 / target_sequence.len() as f64
    };

    let planning_cost = objective / tree.horizon.max(1) as f64;

    let cap = divergence.tau_max.max(divergence.dt);
    let branch_time = scenarios.branch_step as f64 * divergence.dt;
    let mut uncertainty = ((cap - branch_time) / cap).clamp(0.0, 1.0);
    if branches > 1 {
        let mut spread = 0.0;
        let mut pairs = 0.0;
        for i in 0..branches {
            for j in (i + 1)..branches {
                let a = tree.branch_states(i).last().unwrap().position();
                let b = tree.branch_states(j).last().unwrap().position();
                spread += a.distance(b);
                pairs += 1.0;
            }
        }
        uncertainty += spread / pairs / weights.spread_scale;
    }

    let reward = PolicyReward {
        safety,
        efficiency,
        navigation,
        planning_cost,
        uncertainty,
        total: 0.0,
    };
    PolicyReward { total: reward.recompute_total(weights), ..reward }
}
