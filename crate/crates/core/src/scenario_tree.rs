//! Scenario trees with a dynamic branchpoint.
//!
//! A policy's scenario set shares one trunk up to the branch step and then
//! splits into per-scenario branches. The branch step is the latest step
//! at which all scenarios still agree (pairwise ego deviation below a
//! threshold at every step up to it), capped by a maximum branching time
//! so near-identical futures still yield a usable trunk.

use crate::forward_sim::Scenario;
use crate::policy::PolicySpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceConfig {
    /// Pairwise deviation threshold, meters.
    pub theta: f64,
    /// Maximum branching time, seconds.
    pub tau_max: f64,
    pub dt: f64,
    /// Optional speed term weight in the deviation metric (position-only
    /// by default).
    pub speed_weight: f64,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        Self { theta: 0.5, tau_max: 3.0, dt: 0.2, speed_weight: 0.0 }
    }
}

impl DivergenceConfig {
    /// Branch-step cap in steps, never past `horizon`.
    pub fn cap_steps(&self, horizon: usize) -> usize {
        ((self.tau_max / self.dt).round() as usize).min(horizon)
    }
}

/// Deviation between two scenarios' ego states at one step: positional
/// Euclidean distance, plus an optional weighted speed difference.
pub fn divergence(a: &Scenario, b: &Scenario, step: usize, cfg: &DivergenceConfig) -> f64 {
    assert_eq!(a.ego.len(), b.ego.len(), "scenario horizons must match");
    assert!(step < a.ego.len(), "step outside scenario horizon");
    let sa = &a.ego[step];
    let sb = &b.ego[step];
    let positional = sa.position().distance(sb.position());
    positional + cfg.speed_weight * (sa.speed - sb.speed).abs()
}

/// Largest step τ* ≤ cap such that every scenario pair stays below the
/// divergence threshold at every step t ≤ τ*. Single scenario → the cap;
/// immediate divergence → 0.
pub fn branch_time(scenarios: &[Scenario], cfg: &DivergenceConfig) -> usize {
    assert!(!scenarios.is_empty(), "branch time needs at least one scenario");
    let horizon = scenarios[0].ego.len() - 1;
    let cap = cfg.cap_steps(horizon);
    if scenarios.len() == 1 {
        return cap;
    }
    let mut tau = 0;
    'outer: for t in 0..=cap {
        for i in 0..scenarios.len() {
            for j in (i + 1)..scenarios.len() {
                if divergence(&scenarios[i], &scenarios[j], t, cfg) >= cfg.theta {
                    break 'outer;
                }
            }
        }
        tau = t;
    }
    tau
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioTree {
    /// Branches, descending probability (ties keep input order).
    pub scenarios: Vec<Scenario>,
    /// Branch step τ*.
    pub branch_step: usize,
    /// Shared horizon in steps (states per scenario = horizon + 1).
    pub horizon: usize,
    pub policy: PolicySpec,
}

impl ScenarioTree {
    pub fn branch_probabilities(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.probability).collect()
    }
}

/// Assemble the tree: compute the branch step and order branches by
/// descending probability (stable).
pub fn build_tree(scenarios: Vec<Scenario>, policy: PolicySpec, cfg: &DivergenceConfig) -> ScenarioTree {
    assert!(!scenarios.is_empty(), "tree needs at least one scenario");
    let horizon = scenarios[0].ego.len() - 1;
    for s in &scenarios {
        assert_eq!(s.ego.len(), horizon + 1, "scenario horizons must match");
    }
    let total: f64 = scenarios.iter().map(|s| s.probability).sum();
    assert!((total - 1.0).abs() < 1e-6, "scenario probabilities must be normalized");

    let branch_step = branch_time(&scenarios, cfg);
    let mut ordered = scenarios;
    ordered.sort_by(|a, b| b.probability.partial_cmp(&a.probability).expect("finite probability"));
    ScenarioTree { scenarios: ordered, branch_step, horizon, policy }
}
