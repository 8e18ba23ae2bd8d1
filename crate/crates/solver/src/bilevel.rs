//! Bi-level risk-aware contingency optimization.
//!
//! The outer problem picks risk weights, the inner problem optimizes the
//! trajectory tree; the two alternate until the risk-weighted objective
//! settles:
//!
//! 1. run the tree iLQR with the current risk weights `q`;
//! 2. sum each branch's safety cost along the solved tree;
//! 3. re-solve the closed-form CVaR allocation on those sums to get new `q`.
//!
//! With risk level 1 the allocation stays at the plain expectation and the
//! loop reduces to one converged iLQR solve; smaller levels shift weight
//! toward branches whose contingencies remain expensive, which buys more
//! clearance in exactly those branches on the next inner solve.
//!
//! This module is the `f64` bridge between the rendered scenario trees and
//! the scalar-generic optimizer underneath.

use branchplan_core::dynamics::Control;
use branchplan_core::scenario_tree::ScenarioTree;

use crate::cost::CostModel;
use crate::cvar::{cvar_allocation, RiskAllocation};
use crate::ilqr::{branch_safe_costs, ilqr_solve, total_cost, IlqrDiagnostics, IlqrOptions};
use crate::model::BicycleModel;
use crate::tree::TrajectoryTree;
use crate::SolverError;

#[derive(Debug, Clone)]
pub struct RcpOptions {
    /// CVaR risk level in (0, 1]; 1 recovers the plain expectation.
    pub alpha: f64,
    /// Relative change of the risk-weighted objective that ends the
    /// alternation.
    pub outer_tolerance: f64,
    pub max_outer_iterations: usize,
    pub ilqr: IlqrOptions<f64>,
}

impl Default for RcpOptions {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            outer_tolerance: 1e-4,
            max_outer_iterations: 20,
            ilqr: IlqrOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RcpSolution {
    pub tree: TrajectoryTree<f64>,
    /// Final risk weights and CVaR value over the branch safety costs.
    pub risk: RiskAllocation<f64>,
    /// Unweighted per-branch safety cost sums at the solution.
    pub branch_safe_costs: Vec<f64>,
    /// Risk-weighted objective at the solution.
    pub objective: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    /// Diagnostics of the last inner solve.
    pub ilqr: IlqrDiagnostics,
}

/// Seeds a trajectory tree from the rendered scenarios: shared controls are
/// the probability-weighted mean of the scenario controls, branch controls
/// come from each scenario's own rollout, and everything is re-rolled
/// through the model so the seed is dynamically consistent.
pub fn seed_tree(
    scenarios: &ScenarioTree,
    model: &BicycleModel<f64>,
) -> Result<TrajectoryTree<f64>, SolverError> {
    if scenarios.scenarios.is_empty() {
        return Err(SolverError::Empty("scenario tree has no branches"));
    }
    let horizon = scenarios.horizon;
    let branch_step = scenarios.branch_step;
    let dt = model.dt;

    // Recover the rate controls that produced each scenario's ego states;
    // accel and steer integrate exactly, so differencing inverts the rollout.
    let controls_of = |ego: &[branchplan_core::dynamics::EgoState<f64>]| -> Vec<Control<f64>> {
        ego.windows(2)
            .map(|w| Control::new((w[1].accel - w[0].accel) / dt, (w[1].steer - w[0].steer) / dt))
            .collect()
    };
    let per_scenario: Vec<Vec<Control<f64>>> = scenarios
        .scenarios
        .iter()
        .map(|s| {
            if s.ego.len() != horizon + 1 {
                return Err(SolverError::Dimension("scenario horizons must match the tree"));
            }
            Ok(controls_of(&s.ego))
        })
        .collect::<Result<_, _>>()?;

    let mut trunk = vec![Control::zero(); branch_step];
    for (s, controls) in scenarios.scenarios.iter().zip(&per_scenario) {
        for (t, u) in trunk.iter_mut().enumerate() {
            u.jerk += s.probability * controls[t].jerk;
            u.steer_rate += s.probability * controls[t].steer_rate;
        }
    }
    let branches: Vec<Vec<Control<f64>>> =
        per_scenario.iter().map(|c| c[branch_step..].to_vec()).collect();

    let root = scenarios.scenarios[0].ego[0];
    TrajectoryTree::from_controls(root, &trunk, &branches, model, dt)
}

/// Solves the full risk-aware contingency program for one scenario tree.
pub fn rcp_optimize(
    scenarios: &ScenarioTree,
    cost: &CostModel<f64>,
    model: &BicycleModel<f64>,
    options: &RcpOptions,
) -> Result<RcpSolution, SolverError> {
    cost.check()?;
    if !(options.alpha > 0.0 && options.alpha <= 1.0) {
        return Err(SolverError::BadAlpha { alpha: options.alpha });
    }
    let probabilities = scenarios.branch_probabilities();
    let mut tree = seed_tree(scenarios, model)?;
    let mut q = vec![1.0; probabilities.len()];
    let mut objective = f64::INFINITY;
    let mut converged = false;
    let mut outer_iterations = 0;
    let mut last_diag = None;
    let mut risk = RiskAllocation { q: q.clone(), value: f64::INFINITY };
    let mut safe_sums = Vec::new();

    for _ in 0..options.max_outer_iterations.max(1) {
        outer_iterations += 1;
        let (solved, diag) = ilqr_solve(&tree, model, cost, &probabilities, &q, &options.ilqr)?;
        tree = solved;
        last_diag = Some(diag);

        safe_sums = branch_safe_costs(&tree, cost);
        risk = cvar_allocation(&probabilities, &safe_sums, options.alpha)?;
        q = risk.q.clone();

        let updated = total_cost(&tree, cost, &probabilities, &q, &options.ilqr)?;
        let change = (objective - updated).abs() / objective.abs().max(1.0);
        objective = updated;
        if change < options.outer_tolerance {
            converged = true;
            break;
        }
    }

    tree.validate(model, 1e-9)?;
    Ok(RcpSolution {
        tree,
        risk,
        branch_safe_costs: safe_sums,
        objective,
        outer_iterations,
        converged,
        ilqr: last_diag.expect("at least one outer iteration"),
    })
}
