//! Iterative LQR over a trajectory tree.
//!
//! A standard iLQR backward pass runs from each leaf toward the root; where
//! branches meet, the children's quadratic value expansions sum, so the
//! shared trunk is optimized against the probability- and risk-weighted total
//! of all contingencies. The forward pass replays the tree with the new
//! gains, branching at the branchpoint exactly like the rollout that built
//! it.
//!
//! Scaling: a branch node's safe cost enters the objective as
//! `p_k * q_k * l_safe` (probability times risk weight), its remaining cost
//! unweighted (or times `p_k` with [`IlqrOptions::weight_other_by_probability`]).
//! Trunk nodes are already probability-mixed inside the cost model and enter
//! unscaled.
//!
//! Regularization is Levenberg-style on the control Hessian: on a failed
//! positive-definiteness check or a failed line search the damping grows
//! multiplicatively; it decays again after accepted steps. The line search
//! backtracks over halved step factors and only accepts strict cost
//! decrease.

use branchplan_core::dynamics::{Control, ControlVector, InputMatrix, StateMatrix, StateVector};
use branchplan_core::scalar::{real, to_f64, Real};
use nalgebra::SMatrix;

use crate::cost::StageCost;
use crate::model::SystemModel;
use crate::tree::{NodeRef, TrajectoryTree};
use crate::SolverError;

type GainMatrix<T> = SMatrix<T, 2, 6>;
type ControlMatrix<T> = SMatrix<T, 2, 2>;

#[derive(Debug, Clone)]
pub struct IlqrOptions<T> {
    /// Relative cost decrease below which the solve is converged.
    pub tolerance: T,
    pub max_iterations: usize,
    /// Damping schedule for the control Hessian.
    pub mu_min: T,
    pub mu_factor: T,
    pub mu_max: T,
    /// Number of backtracking steps; factor `i` is `2^-i`.
    pub line_search_steps: usize,
    /// Also scale branch non-safe costs by the branch probability.
    pub weight_other_by_probability: bool,
}

impl<T: Real> Default for IlqrOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: real(1e-4),
            max_iterations: 50,
            mu_min: real(1e-8),
            mu_factor: real(10.0),
            mu_max: real(1e10),
            line_search_steps: 9,
            weight_other_by_probability: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IlqrDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Accepted total cost after each iteration, starting with the seed cost.
    pub cost_trace: Vec<f64>,
    pub final_cost: f64,
    pub final_mu: f64,
}

/// Safe/other scale factors for one node.
fn node_scales<T: Real>(
    at: NodeRef,
    probabilities: &[T],
    risk_weights: &[T],
    weight_other: bool,
) -> (T, T) {
    match at {
        NodeRef::Trunk { .. } => (T::one(), T::one()),
        NodeRef::Branch { branch, .. } => {
            let p = probabilities[branch];
            let safe = p * risk_weights[branch];
            let other = if weight_other { p } else { T::one() };
            (safe, other)
        }
    }
}

/// Total scaled cost of a tree under the given risk weights.
pub fn total_cost<T: Real, C: StageCost<T>>(
    tree: &TrajectoryTree<T>,
    cost: &C,
    probabilities: &[T],
    risk_weights: &[T],
    options: &IlqrOptions<T>,
) -> Result<T, SolverError> {
    let mut total = T::zero();
    for j in 1..tree.len() {
        let at = tree.node_ref(j).expect("non-root node");
        let node = &tree.nodes[j];
        let terms = cost.evaluate(at, &node.state, &node.control);
        let (ws, wo) = node_scales(at, probabilities, risk_weights, options.weight_other_by_probability);
        let contribution = ws * terms.safe + wo * terms.other;
        if !contribution.is_finite() {
            return Err(SolverError::NonFiniteCost { node: j });
        }
        total += contribution;
    }
    Ok(total)
}

/// Unscaled per-branch safety cost sums — the branch outcomes the risk
/// allocation reweights.
pub fn branch_safe_costs<T: Real, C: StageCost<T>>(
    tree: &TrajectoryTree<T>,
    cost: &C,
) -> Vec<T> {
    (0..tree.num_branches)
        .map(|k| {
            tree.branch_indices(k)
                .map(|j| {
                    let node = &tree.nodes[j];
                    cost.evaluate(tree.node_ref(j).expect("branch node"), &node.state, &node.control)
                        .safe
                })
                .fold(T::zero(), |acc, v| acc + v)
        })
        .collect()
}

struct NodeExpansion<T: Real> {
    a: StateMatrix<T>,
    b: InputMatrix<T>,
    grad_x: StateVector<T>,
    hess_x: StateMatrix<T>,
    grad_u: ControlVector<T>,
    hess_u: ControlMatrix<T>,
}

struct Gains<T: Real> {
    k: Vec<ControlVector<T>>,
    big_k: Vec<GainMatrix<T>>,
    /// Expected cost change at full step: `sum k'Q_u + 1/2 sum k'Q_uu k`.
    expected_change: T,
}

/// Minimizes the risk-weighted tree objective for fixed risk weights.
///
/// Returns the improved tree (dynamically consistent by construction) plus
/// iteration diagnostics. Fails only on structural errors or when the
/// control Hessian cannot be made positive definite within the damping
/// budget.
pub fn ilqr_solve<T: Real, M: SystemModel<T>, C: StageCost<T>>(
    tree: &TrajectoryTree<T>,
    model: &M,
    cost: &C,
    probabilities: &[T],
    risk_weights: &[T],
    options: &IlqrOptions<T>,
) -> Result<(TrajectoryTree<T>, IlqrDiagnostics), SolverError> {
    if probabilities.len() != tree.num_branches || risk_weights.len() != tree.num_branches {
        return Err(SolverError::Dimension("one probability and one risk weight per branch"));
    }
    tree.validate(model, real(1e-9))?;
    let mut current = tree.clone();
    let mut cost_now = total_cost(&current, cost, probabilities, risk_weights, options)?;
    let mut trace = vec![to_f64(cost_now)];
    let mut mu = T::zero();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..options.max_iterations {
        iterations += 1;
        let expansions = expand_nodes(&current, model, cost, probabilities, risk_weights, options);

        // Backward pass, raising damping until the control Hessians pass.
        let gains = loop {
            match backward_pass(&current, &expansions, mu) {
                Ok(g) => break g,
                Err(node) => {
                    mu = if mu <= T::zero() { options.mu_min } else { mu * options.mu_factor };
                    if mu > options.mu_max {
                        return Err(SolverError::NotPositiveDefinite { node, mu: to_f64(mu) });
                    }
                }
            }
        };

        // A vanishing model improvement means the gains are (numerically)
        // zero: the tree is already a local minimum.
        if -gains.expected_change < options.tolerance * T::one().max(cost_now.abs()) {
            converged = true;
            break;
        }

        // Backtracking line search on the step scale.
        let mut accepted = None;
        let mut alpha = T::one();
        for _ in 0..options.line_search_steps {
            if let Some(candidate) = forward_pass(&current, model, &gains, alpha) {
                if let Ok(c) = total_cost(&candidate, cost, probabilities, risk_weights, options) {
                    let slack = real::<T>(1e-12) * T::one().max(cost_now.abs());
                    if c < cost_now - slack {
                        accepted = Some((candidate, c));
                        break;
                    }
                }
            }
            alpha *= real(0.5);
        }

        match accepted {
            Some((candidate, c)) => {
                let improvement = (cost_now - c) / T::one().max(cost_now.abs());
                current = candidate;
                cost_now = c;
                trace.push(to_f64(cost_now));
                mu = if mu <= options.mu_min { T::zero() } else { mu / options.mu_factor };
                if improvement < options.tolerance {
                    converged = true;
                    break;
                }
            }
            None => {
                // No descent at this damping; steeper damping means a more
                // conservative (gradient-like) step. Give up when saturated:
                // the seed is then a local minimum for all available steps.
                mu = if mu <= T::zero() { options.mu_min } else { mu * options.mu_factor };
                if mu > options.mu_max {
                    converged = true;
                    break;
                }
            }
        }
    }

    let diagnostics = IlqrDiagnostics {
        iterations,
        converged,
        final_cost: to_f64(cost_now),
        final_mu: to_f64(mu),
        cost_trace: trace,
    };
    Ok((current, diagnostics))
}

fn expand_nodes<T: Real, M: SystemModel<T>, C: StageCost<T>>(
    tree: &TrajectoryTree<T>,
    model: &M,
    cost: &C,
    probabilities: &[T],
    risk_weights: &[T],
    options: &IlqrOptions<T>,
) -> Vec<NodeExpansion<T>> {
    let mut out = Vec::with_capacity(tree.len());
    // Root placeholder keeps indices aligned.
    out.push(NodeExpansion {
        a: StateMatrix::zeros(),
        b: InputMatrix::zeros(),
        grad_x: StateVector::zeros(),
        hess_x: StateMatrix::zeros(),
        grad_u: ControlVector::zeros(),
        hess_u: ControlMatrix::zeros(),
    });
    for j in 1..tree.len() {
        let node = &tree.nodes[j];
        let parent = node.parent.expect("non-root node");
        let at = tree.node_ref(j).expect("non-root node");
        let (a, b) = model.linearize(&tree.nodes[parent].state, &node.control);
        let e = cost.expand(at, &node.state, &node.control);
        let (ws, wo) = node_scales(at, probabilities, risk_weights, options.weight_other_by_probability);
        out.push(NodeExpansion {
            a,
            b,
            grad_x: e.safe_grad_x * ws + e.other_grad_x * wo,
            hess_x: e.safe_hess_x * ws + e.other_hess_x * wo,
            grad_u: e.grad_u * wo,
            hess_u: e.hess_u * wo,
        });
    }
    out
}

/// Backward Riccati sweep; `Err(node)` reports a control Hessian that is not
/// positive definite at the current damping.
fn backward_pass<T: Real>(
    tree: &TrajectoryTree<T>,
    expansions: &[NodeExpansion<T>],
    mu: T,
) -> Result<Gains<T>, usize> {
    let n = tree.len();
    let mut vx = vec![StateVector::<T>::zeros(); n];
    let mut vxx = vec![StateMatrix::<T>::zeros(); n];
    let mut gains = Gains {
        k: vec![ControlVector::zeros(); n],
        big_k: vec![GainMatrix::zeros(); n],
        expected_change: T::zero(),
    };

    // Children always carry larger indices, so one reverse sweep visits every
    // node after all of its children; value expansions of siblings sum at
    // their shared parent, which is exactly the branchpoint merge.
    for j in (1..n).rev() {
        let e = &expansions[j];
        let parent = tree.nodes[j].parent.expect("non-root node");

        let p_tilde = e.hess_x + vxx[j];
        let g_tilde = e.grad_x + vx[j];

        let q_u = e.grad_u + e.b.transpose() * g_tilde;
        let mut q_uu = e.hess_u + e.b.transpose() * p_tilde * e.b;
        q_uu[(0, 0)] += mu;
        q_uu[(1, 1)] += mu;
        let q_ux = e.b.transpose() * p_tilde * e.a;
        let q_x = e.a.transpose() * g_tilde;
        let q_xx = e.a.transpose() * p_tilde * e.a;

        // Positive definiteness of the 2x2 control Hessian.
        let det = q_uu[(0, 0)] * q_uu[(1, 1)] - q_uu[(0, 1)] * q_uu[(1, 0)];
        if !(q_uu[(0, 0)] > T::zero() && det > T::zero()) {
            return Err(j);
        }
        let inv = ControlMatrix::from([
            [q_uu[(1, 1)] / det, -q_uu[(1, 0)] / det],
            [-q_uu[(0, 1)] / det, q_uu[(0, 0)] / det],
        ]);

        let k_j = -(inv * q_u);
        let big_k_j = -(inv * q_ux);

        let v_x = q_x
            + big_k_j.transpose() * (q_uu * k_j)
            + big_k_j.transpose() * q_u
            + q_ux.transpose() * k_j;
        let v_xx_raw = q_xx
            + big_k_j.transpose() * q_uu * big_k_j
            + big_k_j.transpose() * q_ux
            + q_ux.transpose() * big_k_j;
        let v_xx = (v_xx_raw + v_xx_raw.transpose()) * real::<T>(0.5);

        vx[parent] += v_x;
        vxx[parent] += v_xx;
        gains.expected_change +=
            k_j.dot(&q_u) + real::<T>(0.5) * k_j.dot(&(q_uu * k_j));
        gains.k[j] = k_j;
        gains.big_k[j] = big_k_j;
    }
    Ok(gains)
}

/// Replays the tree with the new gains at step scale `alpha`; `None` when the
/// rollout leaves the finite domain.
fn forward_pass<T: Real, M: SystemModel<T>>(
    tree: &TrajectoryTree<T>,
    model: &M,
    gains: &Gains<T>,
    alpha: T,
) -> Option<TrajectoryTree<T>> {
    let mut out = tree.clone();
    for j in 1..tree.len() {
        let parent = tree.nodes[j].parent.expect("non-root node");
        let dx = out.nodes[parent].state.to_vector() - tree.nodes[parent].state.to_vector();
        let du = gains.k[j] * alpha + gains.big_k[j] * dx;
        let u = Control::from_vector(&(tree.nodes[j].control.to_vector() + du));
        if !u.is_finite() {
            return None;
        }
        let state = model.step(&out.nodes[parent].state, &u);
        if !state.is_finite() {
            return None;
        }
        out.nodes[j].control = u;
        out.nodes[j].state = state;
    }
    Some(out)
}
