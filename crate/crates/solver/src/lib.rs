//! Risk-aware contingency trajectory optimization over scenario trees.
//!
//! The planner hands this crate a scenario tree — one shared trunk and a set
//! of probability-weighted branches — and gets back a trajectory tree: a
//! single control sequence up to the branchpoint plus one contingency
//! continuation per branch. The optimizer alternates two stages:
//!
//! * a tree variant of iterative LQR ([`ilqr`]) that minimizes the weighted
//!   sum of node costs for fixed risk weights, and
//! * the closed-form CVaR allocation ([`cvar`]) that reweights branches by
//!   how badly their safety costs turned out.
//!
//! Costs come from [`cost::CostModel`], which evaluates exact gradients and
//! Hessians of the safety, tracking, kinematic-limit, and comfort terms so
//! the backward pass never needs finite differences.
//!
//! Like the numeric core, the solver is generic over the scalar type; the
//! planning pipeline instantiates it at `f64`.

pub mod bilevel;
pub mod cost;
pub mod cvar;
pub mod ilqr;
pub mod model;
pub mod tree;

pub use bilevel::{rcp_optimize, seed_tree, RcpOptions, RcpSolution};
pub use cost::{
    BranchContext, CostExpansion, CostModel, CostTerms, CostWeights, StageCost, StepObstacles,
};
pub use cvar::{cvar_allocation, RiskAllocation};
pub use ilqr::{ilqr_solve, IlqrDiagnostics, IlqrOptions};
pub use model::{BicycleModel, SystemModel};
pub use tree::{NodeRef, TrajectoryTree, TreeNode};

/// Errors surfaced by the trajectory optimizer.
#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("mismatched input lengths: {0}")]
    Dimension(&'static str),
    #[error("risk level must lie in (0, 1], got {alpha}")]
    BadAlpha { alpha: f64 },
    #[error("branch probabilities must be non-negative and sum to one, got sum {sum}")]
    BadProbabilities { sum: f64 },
    #[error("trajectory tree inconsistent at node {node}: transition residual {residual:.3e}")]
    InconsistentTree { node: usize, residual: f64 },
    #[error("control Hessian at node {node} not positive definite at regularization {mu:.3e}")]
    NotPositiveDefinite { node: usize, mu: f64 },
    #[error("cost model produced a non-finite value at node {node}")]
    NonFiniteCost { node: usize },
}
