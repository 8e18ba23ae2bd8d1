//! Risk allocation: the inner CVaR program in closed form.
//!
//! Given branch probabilities `p` and branch costs `xi`, the conditional
//! value-at-risk at level `alpha` is the optimum of the linear program
//!
//! ```text
//!     max_q   sum_k q_k p_k xi_k
//!     s.t.    0 <= q_k <= 1 / alpha,    sum_k q_k p_k = 1,
//! ```
//!
//! i.e. the worst reweighting of the branch distribution whose densities are
//! capped at `1 / alpha`. `alpha = 1` forces `q = 1` (plain expectation);
//! smaller `alpha` concentrates weight on the worst branches, down to the
//! branch maximum as `alpha -> 0`.
//!
//! The LP has a closed form: walk branches in decreasing cost order, assign
//! the cap `1 / alpha` until the unit of probability mass is spent, give the
//! marginal branch the remainder, and zero the rest. Branches with equal
//! cost share their group's allocation evenly, which keeps the solution
//! symmetric (and hence deterministic) under branch permutations.

use branchplan_core::scalar::{to_f64, Real};

use crate::SolverError;

/// Optimal reweighting of branch costs at a given risk level.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskAllocation<T> {
    /// Per-branch density `q_k` in `[0, 1/alpha]`, with `sum q_k p_k = 1`.
    pub q: Vec<T>,
    /// The CVaR value `sum_k q_k p_k xi_k`.
    pub value: T,
}

/// Relative tolerance for treating two branch costs as tied.
const TIE_EPS: f64 = 1e-9;

/// Solves the CVaR reweighting program for branch costs `costs` distributed
/// with probabilities `probabilities`.
pub fn cvar_allocation<T: Real>(
    probabilities: &[T],
    costs: &[T],
    alpha: T,
) -> Result<RiskAllocation<T>, SolverError> {
    if probabilities.is_empty() {
        return Err(SolverError::Empty("risk allocation needs at least one branch"));
    }
    if probabilities.len() != costs.len() {
        return Err(SolverError::Dimension("probabilities and costs differ in length"));
    }
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(SolverError::BadAlpha { alpha: to_f64(alpha) });
    }
    let mut total = T::zero();
    for &p in probabilities {
        if !p.is_finite() || p < T::zero() {
            return Err(SolverError::BadProbabilities { sum: to_f64(p) });
        }
        total += p;
    }
    if (total - T::one()).abs() > T::from_f64(1e-6).unwrap() {
        return Err(SolverError::BadProbabilities { sum: to_f64(total) });
    }

    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[b].partial_cmp(&costs[a]).expect("finite branch costs"));

    let cap = T::one() / alpha;
    let mut q = vec![T::zero(); costs.len()];
    let mut budget = T::one();
    let mut group_start = 0;
    while group_start < order.len() {
        // Extend the tie group: branches whose costs agree to relative TIE_EPS.
        let lead = costs[order[group_start]];
        let tol = T::from_f64(TIE_EPS).unwrap() * T::one().max(lead.abs());
        let mut group_end = group_start + 1;
        while group_end < order.len() && (lead - costs[order[group_end]]).abs() <= tol {
            group_end += 1;
        }
        let mass: T = order[group_start..group_end]
            .iter()
            .fold(T::zero(), |acc, &i| acc + probabilities[i]);
        if mass > T::zero() && budget > T::zero() {
            let density = cap.min(budget / mass);
            for &i in &order[group_start..group_end] {
                q[i] = density;
            }
            budget = (budget - density * mass).max(T::zero());
        }
        group_start = group_end;
    }

    let mut value = T::zero();
    for ((&qi, &pi), &xi) in q.iter().zip(probabilities).zip(costs) {
        value += qi * pi * xi;
    }
    Ok(RiskAllocation { q, value })
}
