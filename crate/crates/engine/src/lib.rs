//! Policy-level planning: enumerate semantic driving policies, simulate each
//! one against the predicted intention combinations, optimize a risk-aware
//! trajectory tree per policy, score the (scenario tree, trajectory tree)
//! pairs, and pick the winner with sticky tie-breaking.

pub mod planner;
pub mod reward;

pub use planner::{plan, plan_predicted, BranchMode, PlanResult, PlannerParams, PolicyOutcome};
pub use reward::{evaluate_policy, PolicyReward, RewardWeights};
