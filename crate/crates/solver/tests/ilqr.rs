//! Tree-iLQR tests: the analytic discrete-Riccati oracle on an exactly
//! linear-quadratic problem, no-op and descent behavior, and the
//! duplicate-branch symmetry of the branchpoint merge.

use branchplan_core::dynamics::{
    Control, EgoState, InputMatrix, StateMatrix, VehicleParams,
};
use branchplan_core::geometry::{Point2, Polygon, Polyline};
use branchplan_solver::{
    ilqr_solve, BicycleModel, BranchContext, CostExpansion, CostModel, CostTerms, CostWeights,
    IlqrOptions, NodeRef, SolverError, StageCost, StepObstacles, SystemModel, TrajectoryTree,
};
use nalgebra::SMatrix;

type P = Point2<f64>;

/// Exactly linear dynamics on the raw state vector; no clamping anywhere.
struct LinearModel {
    a: StateMatrix<f64>,
    b: InputMatrix<f64>,
}

impl SystemModel<f64> for LinearModel {
    fn step(&self, x: &EgoState<f64>, u: &Control<f64>) -> EgoState<f64> {
        EgoState::from_vector(&(self.a * x.to_vector() + self.b * u.to_vector()))
    }
    fn linearize(&self, _x: &EgoState<f64>, _u: &Control<f64>) -> (StateMatrix<f64>, InputMatrix<f64>) {
        (self.a, self.b)
    }
}

/// Pure quadratic cost `0.5 x'Qx + 0.5 u'Ru`, no safe part.
struct QuadraticCost {
    q: StateMatrix<f64>,
    r: SMatrix<f64, 2, 2>,
}

impl StageCost<f64> for QuadraticCost {
    fn expand(&self, _at: NodeRef, x: &EgoState<f64>, u: &Control<f64>) -> CostExpansion<f64> {
        let xv = x.to_vector();
        let uv = u.to_vector();
        CostExpansion {
            value: CostTerms {
                safe: 0.0,
                other: 0.5 * (xv.dot(&(self.q * xv)) + uv.dot(&(self.r * uv))),
            },
            safe_grad_x: nalgebra::SVector::zeros(),
            safe_hess_x: StateMatrix::zeros(),
            other_grad_x: self.q * xv,
            other_hess_x: self.q,
            grad_u: self.r * uv,
            hess_u: self.r,
        }
    }
}

struct ZeroCost;

impl StageCost<f64> for ZeroCost {
    fn expand(&self, _at: NodeRef, _x: &EgoState<f64>, _u: &Control<f64>) -> CostExpansion<f64> {
        CostExpansion::zero()
    }
}

fn lq_system() -> (LinearModel, QuadraticCost) {
    let mut a = StateMatrix::<f64>::identity();
    a[(0, 2)] = 0.12;
    a[(0, 3)] = 0.2;
    a[(1, 2)] = -0.07;
    a[(1, 3)] = 0.05;
    a[(2, 5)] = 0.15;
    a[(3, 4)] = 0.2;
    a[(4, 4)] = 0.9;
    a[(5, 5)] = 0.85;
    let mut b = InputMatrix::<f64>::zeros();
    b[(3, 0)] = 0.02;
    b[(4, 0)] = 0.2;
    b[(5, 1)] = 0.2;

    let q = StateMatrix::<f64>::from_diagonal(&nalgebra::SVector::from([
        1.0, 1.2, 0.5, 0.8, 0.1, 0.3,
    ]));
    let r = SMatrix::<f64, 2, 2>::from_diagonal(&nalgebra::SVector::from([0.5, 0.7]));
    (LinearModel { a, b }, QuadraticCost { q, r })
}

#[test]
fn linear_quadratic_problem_matches_analytic_riccati() {
    let (model, cost) = lq_system();
    let x0 = EgoState::from_vector(&nalgebra::SVector::from([1.0, -2.0, 0.3, 1.5, -0.5, 0.2]));
    let branch_step = 4;
    let horizon = 12;
    let tree = TrajectoryTree::from_controls(
        x0,
        &vec![Control::zero(); branch_step],
        &[vec![Control::zero(); horizon - branch_step]],
        &model,
        0.2,
    )
    .unwrap();

    let options = IlqrOptions::default();
    let (solved, diag) = ilqr_solve(&tree, &model, &cost, &[1.0], &[1.0], &options).unwrap();
    assert!(diag.converged);
    assert!(
        diag.iterations <= 2,
        "an exactly LQ problem is solved by the first backward/forward sweep, got {}",
        diag.iterations
    );

    // Independent oracle: discrete Riccati recursion for stage costs paired
    // as (post-state, control), i.e. V_{j-1}(x) = min_u 0.5 y'Qy + 0.5 u'Ru
    // + V_j(y) with y = Ax + Bu, then the closed-loop rollout.
    let n = horizon;
    let mut p_mat = StateMatrix::<f64>::zeros();
    let mut gains = vec![SMatrix::<f64, 2, 6>::zeros(); n + 1];
    for j in (1..=n).rev() {
        let p_tilde = cost.q + p_mat;
        let m = cost.r + model.b.transpose() * p_tilde * model.b;
        let m_inv = m.try_inverse().expect("positive definite control Hessian");
        let k_j = m_inv * model.b.transpose() * p_tilde * model.a;
        gains[j] = k_j;
        p_mat = model.a.transpose() * p_tilde * model.a - k_j.transpose() * m * k_j;
    }
    let mut expected_states = vec![x0.to_vector()];
    let mut expected_controls = Vec::new();
    for j in 1..=n {
        let prev = expected_states[j - 1];
        let u = -(gains[j] * prev);
        expected_states.push(model.a * prev + model.b * u);
        expected_controls.push(u);
    }
    let optimal_cost = 0.5 * x0.to_vector().dot(&(p_mat * x0.to_vector()));

    let states = solved.branch_states(0);
    let controls = solved.branch_controls(0);
    for j in 1..=n {
        let ds = (states[j].to_vector() - expected_states[j]).abs().max();
        let du = (controls[j - 1].to_vector() - expected_controls[j - 1]).abs().max();
        assert!(ds < 1e-6, "state error {ds} at step {j}");
        assert!(du < 1e-6, "control error {du} at step {j}");
    }
    assert!(
        (diag.final_cost - optimal_cost).abs() <= 1e-9 * optimal_cost.max(1.0),
        "cost {} vs Riccati optimum {}",
        diag.final_cost,
        optimal_cost
    );
}

#[test]
fn zero_cost_problem_returns_seed_unchanged() {
    let model = BicycleModel::new(VehicleParams::default(), 0.2);
    let tree = TrajectoryTree::from_controls(
        EgoState::new(0.0, 0.0, 0.0, 8.0),
        &[Control::new(0.5, 0.01); 5],
        &[vec![Control::new(-1.0, 0.0); 10], vec![Control::zero(); 10]],
        &model,
        0.2,
    )
    .unwrap();
    let (solved, diag) =
        ilqr_solve(&tree, &model, &ZeroCost, &[0.6, 0.4], &[1.0, 1.0], &IlqrOptions::default())
            .unwrap();
    assert!(diag.converged);
    assert_eq!(diag.iterations, 1);
    assert_eq!(diag.cost_trace, vec![0.0]);
    for (a, b) in solved.nodes.iter().zip(&tree.nodes) {
        assert_eq!(a.control.to_vector(), b.control.to_vector());
        assert_eq!(a.state.to_vector(), b.state.to_vector());
    }
}

fn straight_context(probability: f64, obstacles: Vec<Polygon<f64>>, steps: usize) -> BranchContext<f64> {
    BranchContext {
        probability,
        steps: vec![StepObstacles { vehicles: obstacles, reachable: Vec::new() }; steps + 1],
        speed_reference: vec![8.0; steps + 1],
    }
}

fn straight_cost_model(branches: Vec<BranchContext<f64>>) -> CostModel<f64> {
    CostModel {
        weights: CostWeights::default(),
        vehicle: VehicleParams::default(),
        drivable: Polygon::aabb(P::new(-20.0, -8.0), P::new(300.0, 8.0)).unwrap(),
        reference: Polyline::new(vec![P::new(-20.0, 0.0), P::new(300.0, 0.0)]).unwrap(),
        desired_area: None,
        branches,
    }
}

#[test]
fn descent_and_convergence_on_bicycle_tracking() {
    let model = BicycleModel::new(VehicleParams::default(), 0.2);
    let horizon = 30;
    let branch_step = 5;
    // Start laterally offset and slow; tracking pulls back to the line and
    // up to the reference speed.
    let root = EgoState::new(0.0, 1.5, 0.0, 5.0);
    let tree = TrajectoryTree::from_controls(
        root,
        &vec![Control::zero(); branch_step],
        &[vec![Control::zero(); horizon - branch_step]],
        &model,
        0.2,
    )
    .unwrap();
    let cost = straight_cost_model(vec![straight_context(1.0, Vec::new(), horizon)]);

    let (solved, diag) =
        ilqr_solve(&tree, &model, &cost, &[1.0], &[1.0], &IlqrOptions::default()).unwrap();
    assert!(diag.converged, "tracking problem must converge");
    for pair in diag.cost_trace.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12, "accepted costs must not increase: {:?}", diag.cost_trace);
    }
    assert!(diag.cost_trace.len() > 1, "the seed is not optimal, some step must be accepted");

    let states = solved.branch_states(0);
    let leaf = states.last().unwrap();
    assert!(leaf.y.abs() < 0.3, "lateral offset pulled in, got {}", leaf.y);
    assert!((leaf.speed - 8.0).abs() < 0.6, "speed tracked toward 8, got {}", leaf.speed);
    solved.validate(&model, 1e-9).unwrap();
}

#[test]
fn solver_pushes_clearance_from_obstacle() {
    let model = BicycleModel::new(VehicleParams::default(), 0.2);
    let horizon = 20;
    // Obstacle nudged into the lane ahead of a straight constant-speed seed.
    let obstacle = Polygon::rectangle(P::new(22.0, 0.9), 0.0, 2.6, 1.1).unwrap();
    let root = EgoState::new(0.0, 0.0, 0.0, 8.0);
    let tree = TrajectoryTree::from_controls(
        root,
        &[Control::zero(); 5],
        &[vec![Control::zero(); horizon - 5]],
        &model,
        0.2,
    )
    .unwrap();
    let cost = straight_cost_model(vec![straight_context(1.0, vec![obstacle.clone()], horizon)]);

    let (solved, diag) =
        ilqr_solve(&tree, &model, &cost, &[1.0], &[1.0], &IlqrOptions::default()).unwrap();
    assert!(diag.converged);

    let vehicle: VehicleParams<f64> = VehicleParams::default();
    let min_clearance = |tree: &TrajectoryTree<f64>| {
        tree.branch_states(0)
            .iter()
            .map(|s| vehicle.footprint(s).distance_to(&obstacle))
            .fold(f64::INFINITY, f64::min)
    };
    let before = min_clearance(&tree);
    let after = min_clearance(&solved);
    assert!(
        after > before + 0.1,
        "solved clearance {after} should exceed seed clearance {before}"
    );
}

#[test]
fn duplicate_branches_stay_symmetric_and_match_single_branch() {
    let model = BicycleModel::new(VehicleParams::default(), 0.2);
    let horizon = 16;
    let branch_step = 4;
    let obstacle = Polygon::rectangle(P::new(20.0, 0.8), 0.0, 2.4, 0.95).unwrap();
    let root = EgoState::new(0.0, 0.3, 0.0, 8.0);
    let make_tree = |branches: usize| {
        TrajectoryTree::from_controls(
            root,
            &vec![Control::zero(); branch_step],
            &vec![vec![Control::zero(); horizon - branch_step]; branches],
            &model,
            0.2,
        )
        .unwrap()
    };

    // Symmetry under the default objective: both duplicates see identical
    // costs, so their controls must coincide.
    let duo_cost = straight_cost_model(vec![
        straight_context(0.5, vec![obstacle.clone()], horizon),
        straight_context(0.5, vec![obstacle.clone()], horizon),
    ]);
    let (duo, diag) =
        ilqr_solve(&make_tree(2), &model, &duo_cost, &[0.5, 0.5], &[1.0, 1.0], &IlqrOptions::default())
            .unwrap();
    assert!(diag.converged);
    for (i, j) in duo.branch_indices(0).zip(duo.branch_indices(1)) {
        let du = (duo.nodes[i].control.to_vector() - duo.nodes[j].control.to_vector()).abs().max();
        assert!(du < 1e-12, "duplicate branches diverged by {du}");
    }

    // With branch costs fully probability-weighted, two half-probability
    // copies are exactly one full branch: halving is exact in floating point,
    // so every backward-pass gain matches the single-branch run bit-for-bit
    // as long as regularization never engages. Use a smooth tracking problem
    // (no hinge activity) so mu stays at zero throughout.
    let options =
        IlqrOptions { weight_other_by_probability: true, ..IlqrOptions::default() };
    let smooth_root = EgoState::new(0.0, 1.0, 0.0, 6.0);
    let smooth_tree = |branches: usize| {
        TrajectoryTree::from_controls(
            smooth_root,
            &vec![Control::zero(); branch_step],
            &vec![vec![Control::zero(); horizon - branch_step]; branches],
            &model,
            0.2,
        )
        .unwrap()
    };
    let duo_smooth = straight_cost_model(vec![
        straight_context(0.5, Vec::new(), horizon),
        straight_context(0.5, Vec::new(), horizon),
    ]);
    let (duo_w, duo_diag) =
        ilqr_solve(&smooth_tree(2), &model, &duo_smooth, &[0.5, 0.5], &[1.0, 1.0], &options)
            .unwrap();
    let solo_cost = straight_cost_model(vec![straight_context(1.0, Vec::new(), horizon)]);
    let (solo, solo_diag) =
        ilqr_solve(&smooth_tree(1), &model, &solo_cost, &[1.0], &[1.0], &options).unwrap();
    assert!(duo_diag.converged && solo_diag.converged);
    assert_eq!(duo_diag.final_mu, 0.0, "equivalence argument requires unregularized sweeps");

    for (i, j) in duo_w.trunk_indices().zip(solo.trunk_indices()) {
        let du =
            (duo_w.nodes[i].control.to_vector() - solo.nodes[j].control.to_vector()).abs().max();
        assert!(du < 1e-9, "trunk control mismatch {du}");
    }
    for (i, j) in duo_w.branch_indices(0).zip(solo.branch_indices(0)) {
        let du =
            (duo_w.nodes[i].control.to_vector() - solo.nodes[j].control.to_vector()).abs().max();
        assert!(du < 1e-9, "branch control mismatch {du}");
    }
}

#[test]
fn inconsistent_seed_is_rejected() {
    let model = BicycleModel::new(VehicleParams::default(), 0.2);
    let mut tree = TrajectoryTree::from_controls(
        EgoState::new(0.0, 0.0, 0.0, 8.0),
        &[Control::zero(); 3],
        &[vec![Control::zero(); 5]],
        &model,
        0.2,
    )
    .unwrap();
    tree.nodes[4].state.y += 0.01;
    let result = ilqr_solve(
        &tree,
        &model,
        &ZeroCost,
        &[1.0],
        &[1.0],
        &IlqrOptions::default(),
    );
    assert!(matches!(result, Err(SolverError::InconsistentTree { node: 4, .. })));
}
