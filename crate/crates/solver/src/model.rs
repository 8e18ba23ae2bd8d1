//! Transition model abstraction for the tree optimizer.
//!
//! The optimizer only needs a step function and its Jacobians, so tests can
//! swap in an exactly linear system and compare against the analytic LQR
//! solution.

use branchplan_core::dynamics::{self, Control, EgoState, InputMatrix, StateMatrix, VehicleParams};
use branchplan_core::scalar::Real;

/// Discrete-time transition with exact linearization.
pub trait SystemModel<T: Real> {
    fn step(&self, x: &EgoState<T>, u: &Control<T>) -> EgoState<T>;
    fn linearize(&self, x: &EgoState<T>, u: &Control<T>) -> (StateMatrix<T>, InputMatrix<T>);
}

/// Kinematic bicycle stepped at the planning interval.
#[derive(Debug, Clone)]
pub struct BicycleModel<T> {
    pub params: VehicleParams<T>,
    pub dt: T,
}

impl<T: Real> BicycleModel<T> {
    pub fn new(params: VehicleParams<T>, dt: T) -> Self {
        Self { params, dt }
    }
}

impl<T: Real> SystemModel<T> for BicycleModel<T> {
    fn step(&self, x: &EgoState<T>, u: &Control<T>) -> EgoState<T> {
        dynamics::step(x, u, self.dt, &self.params)
    }

    fn linearize(&self, x: &EgoState<T>, u: &Control<T>) -> (StateMatrix<T>, InputMatrix<T>) {
        dynamics::linearize(x, u, self.dt, &self.params)
    }
}
