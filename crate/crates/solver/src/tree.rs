//! Trajectory tree: the decision variables of the contingency program.
//!
//! A tree is a shared trunk of `branch_step` nodes followed by one
//! contingency block per branch, each running to the common horizon. Every
//! non-root node stores the control applied at its parent over one planning
//! step together with the resulting state, so a tree built through
//! [`TrajectoryTree::from_controls`] is dynamically consistent by
//! construction; [`TrajectoryTree::validate`] re-checks that invariant.
//!
//! Nodes live in one flat vector with a fixed layout: root at index 0, trunk
//! at `1..=branch_step`, then one contiguous block per branch. The layout is
//! an implementation detail — consumers address nodes through [`NodeRef`]
//! and the index helpers.

use branchplan_core::dynamics::{Control, EgoState};
use branchplan_core::scalar::{to_f64, Real};
use serde::{Deserialize, Serialize};

use crate::model::SystemModel;
use crate::SolverError;

/// Position of a node in the tree's time/branch structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRef {
    /// Shared node at `step` in `1..=branch_step`.
    Trunk { step: usize },
    /// Contingency node of `branch` at `step` in `branch_step+1..=horizon`.
    Branch { branch: usize, step: usize },
}

impl NodeRef {
    #[inline]
    pub fn step(&self) -> usize {
        match *self {
            NodeRef::Trunk { step } | NodeRef::Branch { step, .. } => step,
        }
    }

    #[inline]
    pub fn branch(&self) -> Option<usize> {
        match *self {
            NodeRef::Trunk { .. } => None,
            NodeRef::Branch { branch, .. } => Some(branch),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeNode<T> {
    pub state: EgoState<T>,
    /// Control applied at the parent to reach this state. Zero and unused at
    /// the root.
    pub control: Control<T>,
    pub parent: Option<usize>,
    /// Branch this node belongs to; `None` on the shared trunk.
    pub branch: Option<usize>,
    /// Planning step, root = 0.
    pub step: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryTree<T> {
    pub nodes: Vec<TreeNode<T>>,
    pub dt: T,
    /// Last shared step; branches start at `branch_step + 1`.
    pub branch_step: usize,
    /// Final step of every branch.
    pub horizon: usize,
    pub num_branches: usize,
}

impl<T: Real> TrajectoryTree<T> {
    /// Builds a consistent tree by rolling controls through the model.
    ///
    /// `trunk` holds the shared controls for steps `1..=branch_step` and each
    /// entry of `branches` the continuation controls for steps
    /// `branch_step+1..=horizon`; all branches must share one length.
    pub fn from_controls<M: SystemModel<T>>(
        root: EgoState<T>,
        trunk: &[Control<T>],
        branches: &[Vec<Control<T>>],
        model: &M,
        dt: T,
    ) -> Result<Self, SolverError> {
        if branches.is_empty() {
            return Err(SolverError::Empty("trajectory tree needs at least one branch"));
        }
        let block = branches[0].len();
        if branches.iter().any(|b| b.len() != block) {
            return Err(SolverError::Dimension("branch control sequences differ in length"));
        }
        let branch_step = trunk.len();
        let horizon = branch_step + block;
        let mut nodes = Vec::with_capacity(1 + branch_step + branches.len() * block);
        nodes.push(TreeNode {
            state: root,
            control: Control::zero(),
            parent: None,
            branch: None,
            step: 0,
        });
        for (i, &u) in trunk.iter().enumerate() {
            let parent = i; // trunk is laid out contiguously from the root
            let state = model.step(&nodes[parent].state, &u);
            nodes.push(TreeNode { state, control: u, parent: Some(parent), branch: None, step: i + 1 });
        }
        for (k, controls) in branches.iter().enumerate() {
            let mut parent = branch_step; // branchpoint node
            for (j, &u) in controls.iter().enumerate() {
                let state = model.step(&nodes[parent].state, &u);
                nodes.push(TreeNode {
                    state,
                    control: u,
                    parent: Some(parent),
                    branch: Some(k),
                    step: branch_step + j + 1,
                });
                parent = nodes.len() - 1;
            }
        }
        Ok(Self { nodes, dt, branch_step, horizon, num_branches: branches.len() })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Steps each branch runs past the branchpoint.
    #[inline]
    pub fn block_len(&self) -> usize {
        self.horizon - self.branch_step
    }

    #[inline]
    pub fn root(&self) -> &TreeNode<T> {
        &self.nodes[0]
    }

    /// Index of the last shared node (the root when `branch_step` is 0).
    #[inline]
    pub fn branchpoint(&self) -> usize {
        self.branch_step
    }

    /// Indices of the shared decision nodes, oldest first.
    pub fn trunk_indices(&self) -> impl Iterator<Item = usize> {
        1..=self.branch_step
    }

    /// Indices of branch `k`'s nodes, oldest first.
    pub fn branch_indices(&self, k: usize) -> impl Iterator<Item = usize> {
        let start = 1 + self.branch_step + k * self.block_len();
        start..start + self.block_len()
    }

    /// Structural position of a node; `None` for the root.
    pub fn node_ref(&self, index: usize) -> Option<NodeRef> {
        let node = &self.nodes[index];
        match node.branch {
            _ if index == 0 => None,
            None => Some(NodeRef::Trunk { step: node.step }),
            Some(branch) => Some(NodeRef::Branch { branch, step: node.step }),
        }
    }

    /// Child lists per node, in index order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                out[p].push(i);
            }
        }
        out
    }

    /// States along branch `k` from the root to its leaf, one per step.
    pub fn branch_states(&self, k: usize) -> Vec<EgoState<T>> {
        let mut out: Vec<EgoState<T>> =
            (0..=self.branch_step).map(|i| self.nodes[i].state).collect();
        out.extend(self.branch_indices(k).map(|i| self.nodes[i].state));
        out
    }

    /// Controls along branch `k` for steps `1..=horizon`.
    pub fn branch_controls(&self, k: usize) -> Vec<Control<T>> {
        let mut out: Vec<Control<T>> =
            self.trunk_indices().map(|i| self.nodes[i].control).collect();
        out.extend(self.branch_indices(k).map(|i| self.nodes[i].control));
        out
    }

    /// Checks parent links, layout, and dynamic consistency: re-stepping each
    /// parent state through the stored control must reproduce the node state
    /// to within `tol` on every component.
    pub fn validate<M: SystemModel<T>>(&self, model: &M, tol: T) -> Result<(), SolverError> {
        let expected = 1 + self.branch_step + self.num_branches * self.block_len();
        if self.nodes.len() != expected {
            return Err(SolverError::Dimension("tree node count does not match layout"));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let Some(parent) = node.parent else {
                if i != 0 {
                    return Err(SolverError::InconsistentTree { node: i, residual: f64::NAN });
                }
                continue;
            };
            if parent >= i || self.nodes[parent].step + 1 != node.step {
                return Err(SolverError::InconsistentTree { node: i, residual: f64::NAN });
            }
            let restepped = model.step(&self.nodes[parent].state, &node.control);
            let residual = (restepped.to_vector() - node.state.to_vector()).abs().max();
            if residual > tol || !residual.is_finite() {
                return Err(SolverError::InconsistentTree { node: i, residual: to_f64(residual) });
            }
        }
        Ok(())
    }
}
