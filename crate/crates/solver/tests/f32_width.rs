//! The optimizer stack is generic over the scalar; these smoke tests pin the
//! `f32` instantiation end to end at tolerances appropriate for the width.

use branchplan_core::dynamics::{Control, EgoState, VehicleParams};
use branchplan_core::geometry::{Point2, Polygon, Polyline};
use branchplan_solver::{
    cvar_allocation, ilqr_solve, BicycleModel, BranchContext, CostModel, CostWeights,
    IlqrOptions, StepObstacles, TrajectoryTree,
};

#[test]
fn risk_allocation_in_single_precision() {
    let allocation = cvar_allocation::<f32>(&[0.7, 0.3], &[1.0, 10.0], 0.5).unwrap();
    assert!((allocation.value - 6.4).abs() < 1e-5);
    assert!((allocation.q[0] - 4.0 / 7.0).abs() < 1e-5);
    assert!((allocation.q[1] - 2.0).abs() < 1e-5);
}

#[test]
fn tree_ilqr_in_single_precision() {
    let model = BicycleModel::new(VehicleParams::<f32>::default(), 0.2);
    let horizon = 20;
    let branch_step = 5;
    let root = EgoState::new(0.0f32, 1.0, 0.0, 6.0);
    let tree = TrajectoryTree::from_controls(
        root,
        &vec![Control::zero(); branch_step],
        &[vec![Control::zero(); horizon - branch_step]],
        &model,
        0.2,
    )
    .unwrap();

    let cost = CostModel::<f32> {
        weights: CostWeights::default(),
        vehicle: VehicleParams::default(),
        drivable: Polygon::aabb(Point2::new(-20.0, -8.0), Point2::new(300.0, 8.0)).unwrap(),
        reference: Polyline::new(vec![Point2::new(-20.0, 0.0), Point2::new(300.0, 0.0)]).unwrap(),
        desired_area: None,
        branches: vec![BranchContext {
            probability: 1.0,
            steps: vec![
                StepObstacles { vehicles: Vec::new(), reachable: Vec::new() };
                horizon + 1
            ],
            speed_reference: vec![8.0; horizon + 1],
        }],
    };

    let options = IlqrOptions::<f32> { tolerance: 1e-3, ..IlqrOptions::default() };
    let (solved, diag) = ilqr_solve(&tree, &model, &cost, &[1.0], &[1.0], &options).unwrap();
    assert!(diag.converged);
    assert!(diag.final_cost < diag.cost_trace[0], "descent in f32");
    let leaf = *solved.branch_states(0).last().unwrap();
    assert!(leaf.y.abs() < 0.5, "lateral tracking in f32, got {}", leaf.y);
    assert!((leaf.speed - 8.0).abs() < 1.0, "speed tracking in f32, got {}", leaf.speed);
    solved.validate(&model, 1e-3).unwrap();
}
