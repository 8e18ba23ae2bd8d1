//! World state as seen by the planner at one instant: the ego vehicle plus
//! every observed agent with a short pose history.

use crate::dynamics::EgoState;
use crate::geometry::{Point2, Polygon};
use crate::map::{Point2d, Polygon2d};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u32);

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "agent{}", self.0)
    }
}

/// Pose and speed of a surrounding agent at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

impl AgentState {
    pub fn new(x: f64, y: f64, heading: f64, speed: f64) -> Self {
        Self { x, y, heading, speed }
    }

    #[inline]
    pub fn position(&self) -> Point2d {
        Point2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite() && self.speed.is_finite()
    }
}

/// Surrounding agent: box geometry, current state, and recent history
/// (oldest first, current state last).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub half_length: f64,
    pub half_width: f64,
    pub state: AgentState,
    pub history: Vec<AgentState>,
}

impl Agent {
    pub fn new(id: AgentId, half_length: f64, half_width: f64, state: AgentState) -> Self {
        Self { id, half_length, half_width, state, history: vec![state] }
    }

    /// Push a new current state, keeping a bounded history window.
    pub fn observe(&mut self, state: AgentState, max_history: usize) {
        self.state = state;
        self.history.push(state);
        if self.history.len() > max_history {
            let drop = self.history.len() - max_history;
            self.history.drain(..drop);
        }
    }

    pub fn footprint(&self) -> Polygon2d {
        self.footprint_at(&self.state)
    }

    pub fn footprint_at(&self, state: &AgentState) -> Polygon2d {
        Polygon::rectangle(state.position(), state.heading, self.half_length, self.half_width)
            .expect("positive agent dimensions")
    }
}

/// Snapshot handed to the planner each cycle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub time: f64,
    pub ego: EgoState<f64>,
    /// Sorted by id; enforced on construction for deterministic iteration.
    agents: Vec<Agent>,
}

impl WorldSnapshot {
    pub fn new(time: f64, ego: EgoState<f64>, mut agents: Vec<Agent>) -> Self {
        agents.sort_by_key(|a| a.id);
        Self { time, ego, agents }
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> Option<&Agent> {
        self.agents
            .binary_search_by_key(&id, |a| a.id)
            .ok()
            .map(|i| &self.agents[i])
    }
}
