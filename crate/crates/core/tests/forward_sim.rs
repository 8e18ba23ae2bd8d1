use approx::assert_abs_diff_eq;
use branchplan_core::driver::{idm_accel, pure_pursuit_curvature, step_agent};
use branchplan_core::dynamics::{EgoState, VehicleParams};
use branchplan_core::forward_sim::{
    compute_frs, ForwardSimConfig, SafetyOutcome, Scenario, ScenarioRenderer,
};
use branchplan_core::map::{LaneId, LaneMap};
use branchplan_core::policy::{LongitudinalPolicy, PolicySpec};
use branchplan_core::prediction::{
    intention_combinations, AgentIntention, IntentionSet, LongitudinalAction, PredictedTrajectory,
};
use branchplan_core::world::{Agent, AgentId, AgentState, WorldSnapshot};

const DT: f64 = 0.2;
const HORIZON: usize = 25;

fn two_lane_map() -> LaneMap {
    LaneMap::straight_road(2, 3.5, 400.0, 10.0).unwrap()
}

/// Constant-speed trajectory along a heading-zero lane at fixed y.
fn straight_states(x0: f64, y: f64, speed: f64, steps: usize) -> Vec<AgentState> {
    (0..=steps)
        .map(|t| AgentState { x: x0 + speed * DT * t as f64, y, heading: 0.0, speed })
        .collect()
}

/// Lane-change trajectory: linear lateral blend from y0 to y1 over
/// `blend` steps, constant speed.
fn lane_change_states(x0: f64, y0: f64, y1: f64, speed: f64, blend: usize, steps: usize) -> Vec<AgentState> {
    (0..=steps)
        .map(|t| {
            let frac = (t as f64 / blend as f64).min(1.0);
            AgentState {
                x: x0 + speed * DT * t as f64,
                y: y0 + (y1 - y0) * frac,
                heading: 0.0,
                speed,
            }
        })
        .collect()
}

fn prediction(
    lanes: Vec<LaneId>,
    action: LongitudinalAction,
    probability: f64,
    states: Vec<AgentState>,
) -> PredictedTrajectory {
    PredictedTrajectory {
        intention: AgentIntention { lane_sequence: lanes, longitudinal: action, probability },
        states,
    }
}

fn single_choice_combos(sets: &[IntentionSet]) -> Vec<branchplan_core::prediction::IntentionCombination> {
    intention_combinations(sets, 2, 4)
}

fn keep_maintain() -> PolicySpec {
    PolicySpec::lane_keep(LongitudinalPolicy::Maintain)
}

fn min_footprint_clearance(
    scenario: &Scenario,
    vehicle: &VehicleParams<f64>,
    world: &WorldSnapshot,
) -> f64 {
    let mut min = f64::INFINITY;
    for (t, ego) in scenario.ego.iter().enumerate() {
        let ego_fp = vehicle.footprint(ego);
        for (id, states) in &scenario.agents {
            let agent = world.agent(*id).unwrap();
            let fp = agent.footprint_at(&states[t]);
            min = min.min(ego_fp.distance_to(&fp));
        }
    }
    min
}

#[test]
fn empty_road_lane_keep_holds_speed_and_lane() {
    let map = two_lane_map();
    let ego = EgoState::new(10.0, 0.0, 0.0, 10.0);
    let world = WorldSnapshot::new(0.0, ego, vec![]);
    let vehicle = VehicleParams::default();
    let config = ForwardSimConfig::default();
    let renderer = ScenarioRenderer::new(&map, &world, &vehicle, &[], &config);
    let combos = single_choice_combos(&[]);
    assert_eq!(combos.len(), 1);

    let scenarios = renderer.render(&combos, &keep_maintain());
    assert_eq!(scenarios.len(), 1);
    let s = &scenarios[0];
    assert!(s.safe && !s.fallback);
    assert_eq!(s.ego.len(), HORIZON + 1);
    for state in &s.ego {
        assert_abs_diff_eq!(state.speed, 10.0, epsilon = 1e-6);
        assert!(state.y.abs() < 1e-3);
        assert!(state.heading.abs() < 1e-3);
    }
}

/// Ego behind a slower leader converges toward the leader's speed with a
/// terminal gap no smaller than the standstill distance; a fine-step IDM
/// integration provides the independent reference.
#[test]
fn slower_leader_convergence_matches_fine_step_oracle() {
    let map = two_lane_map();
    let ego = EgoState::new(0.0, 0.0, 0.0, 10.0);
    let agent_id = AgentId(1);
    let lead0 = AgentState { x: 20.0, y: 0.0, heading: 0.0, speed: 5.0 };
    let agent = Agent::new(agent_id, 2.0, 0.9, lead0);
    let world = WorldSnapshot::new(0.0, ego, vec![agent]);
    let vehicle = VehicleParams::default();

    let horizon = 100usize; // 20 s: long enough to settle
    let config = ForwardSimConfig { horizon_steps: horizon, ..ForwardSimConfig::default() };
    let sets = vec![IntentionSet {
        agent: agent_id,
        trajectories: vec![prediction(
            vec![LaneId(0)],
            LongitudinalAction::Maintain,
            1.0,
            straight_states(20.0, 0.0, 5.0, horizon),
        )],
    }];
    let renderer = ScenarioRenderer::new(&map, &world, &vehicle, &sets, &config);
    let combos = single_choice_combos(&sets);
    assert_eq!(combos.len(), 1);
    let keys = renderer.select_key_vehicles(&combos[0], &keep_maintain());
    assert_eq!(keys, vec![agent_id]);

    let scenario = renderer.simulate_scenario(&combos[0], &keys, &keep_maintain());
    let final_ego = scenario.ego.last().unwrap();
    let final_lead = scenario.agent_states(agent_id).unwrap().last().unwrap();
    let gap = final_lead.x - final_ego.x - vehicle.half_length - 2.0;

    assert!((final_ego.speed - 5.0).abs() < 0.5, "speed {}", final_ego.speed);
    assert!(gap >= config.ego_driver.min_gap, "gap {gap}");

    // Independent oracle: point-mass IDM at dt = 0.01 with identical
    // parameters and the same bumper-to-bumper gap definition.
    let p = config.ego_driver;
    let mut x = 0.0;
    let mut v: f64 = 10.0;
    let mut x_lead = 20.0;
    let fine = 0.01;
    for _ in 0..(20.0 / fine) as usize {
        let gap = x_lead - x - vehicle.half_length - 2.0;
        let a = idm_accel(v, Some((gap, 5.0)), &p).max(-6.0);
        v = (v + a * fine).max(0.0);
        x += v * fine;
        x_lead += 5.0 * fine;
    }
    let oracle_gap = x_lead - x - vehicle.half_length - 2.0;
    assert!((v - final_ego.speed).abs() < 0.3, "oracle v {v} vs {}", final_ego.speed);
    assert!((oracle_gap - gap).abs() < 1.5, "oracle gap {oracle_gap} vs {gap}");
}

#[test]
fn frs_single_and_duplicate_predictions() {
    let id = AgentId(3);
    let states = straight_states(5.0, 1.0, 4.0, 10);
    let one = prediction(vec![LaneId(0)], LongitudinalAction::Maintain, 1.0, states.clone());
    let frs1 = compute_frs(id, 2.0, 0.9, &[&one], 0.2);
    // Inflated rectangle: (2.0 + 0.2) x (0.9 + 0.2) half-dims.
    let expected_area = (2.0f64 + 0.2) * 2.0 * (0.9 + 0.2) * 2.0;
    for step in &frs1.steps {
        assert_eq!(step.len(), 1);
        assert_abs_diff_eq!(step[0].area(), expected_area, epsilon = 1e-9);
    }
    // Idempotent union: duplicate prediction changes nothing.
    let dup = one.clone();
    let frs2 = compute_frs(id, 2.0, 0.9, &[&one, &dup], 0.2);
    for (a, b) in frs1.steps.iter().zip(frs2.steps.iter()) {
        assert_eq!(b.len(), 1);
        assert_abs_diff_eq!(a[0].area(), b[0].area(), epsilon = 1e-9);
        let (lo_a, hi_a) = a[0].bounds();
        let (lo_b, hi_b) = b[0].bounds();
        assert_abs_diff_eq!(lo_a.distance(lo_b), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(hi_a.distance(hi_b), 0.0, epsilon = 1e-9);
    }
}

/// Keep + change predictions diverging after step 5: FRS area at step 10
/// equals the inclusion-exclusion of the two (overlapping) footprints.
#[test]
fn frs_diverging_predictions_area_oracle() {
    let id = AgentId(4);
    let steps = 10;
    let keep = straight_states(0.0, 0.0, 5.0, steps);
    // Same longitudinal motion, lateral departure after step 5.
    let change: Vec<AgentState> = keep
        .iter()
        .enumerate()
        .map(|(t, s)| AgentState {
            y: if t > 5 { (t - 5) as f64 * 0.2 } else { 0.0 },
            ..*s
        })
        .collect();
    assert_abs_diff_eq!(change[10].y, 1.0, epsilon = 1e-12);

    let t_keep = prediction(vec![LaneId(0)], LongitudinalAction::Maintain, 0.5, keep);
    let t_change = prediction(vec![LaneId(1)], LongitudinalAction::Maintain, 0.5, change);
    let frs = compute_frs(id, 2.0, 0.9, &[&t_keep, &t_change], 0.2);

    // Axis-aligned footprints, same x-center, y-centers 1.0 apart:
    // rect = 4.4 x 2.2, overlap = 4.4 x (2.2 - 1.0).
    let rect = 4.4 * 2.2;
    let overlap = 4.4 * (2.2 - 1.0);
    let area: f64 = frs.steps[10].iter().map(|p| p.area()).sum();
    assert_abs_diff_eq!(area, 2.0 * rect - overlap, epsilon = 1e-6);
}

/// Every retained prediction's (uninflated) footprint lies inside the FRS
/// at every step.
#[test]
fn frs_contains_all_predicted_footprints() {
    let id = AgentId(5);
    let a = prediction(
        vec![LaneId(0)],
        LongitudinalAction::Maintain,
        0.5,
        straight_states(0.0, 0.0, 6.0, HORIZON),
    );
    let b = prediction(
        vec![LaneId(1)],
        LongitudinalAction::Accelerate,
        0.5,
        lane_change_states(0.0, 0.0, 3.5, 6.0, 12, HORIZON),
    );
    let frs = compute_frs(id, 2.0, 0.9, &[&a, &b], 0.2);
    for traj in [&a, &b] {
        for (t, s) in traj.states.iter().enumerate() {
            let fp = branchplan_core::geometry::Polygon::rectangle(s.position(), s.heading, 2.0, 0.9)
                .unwrap();
            for v in fp.vertices() {
                assert!(frs.contains(t, *v), "step {t} vertex {v:?} outside FRS");
            }
        }
    }
}

/// The worked selection example: an adjacent-lane vehicle is key exactly
/// when its chosen intention crosses the ego corridor.
#[test]
fn key_selection_depends_on_chosen_intention() {
    let map = two_lane_map();
    let ego = EgoState::new(0.0, 0.0, 0.0, 8.0);
    let agent_id = AgentId(1);
    let start = AgentState { x: 8.0, y: 3.5, heading: 0.0, speed: 8.0 };
    let agent = Agent::new(agent_id, 2.0, 0.9, start);
    let world = WorldSnapshot::new(0.0, ego, vec![agent]);
    let vehicle = VehicleParams::default();
    let config = ForwardSimConfig::default();

    // Crossing happens around t = 2 s (step 10 of 12-step blend).
    let change = prediction(
        vec![LaneId(0)],
        LongitudinalAction::Maintain,
        0.5,
        lane_change_states(8.0, 3.5, 0.0, 8.0, 12, HORIZON),
    );
    let keep = prediction(
        vec![LaneId(1)],
        LongitudinalAction::Maintain,
        0.5,
        straight_states(8.0, 3.5, 8.0, HORIZON),
    );
    let sets = vec![IntentionSet { agent: agent_id, trajectories: vec![change, keep] }];
    let renderer = ScenarioRenderer::new(&map, &world, &vehicle, &sets, &config);
    let combos = single_choice_combos(&sets);
    assert_eq!(combos.len(), 2);

    let policy = keep_maintain();
    for combo in &combos {
        let chosen = combo.choices[0].1.intention.lane_sequence[0];
        let keys = renderer.select_key_vehicles(combo, &policy);
        if chosen == LaneId(0) {
            assert_eq!(keys, vec![agent_id], "lane-change intention must be key");
        } else {
            assert!(keys.is_empty(), "keep-lane intention must not be key");
        }
    }
}

#[test]
fn nearest_leader_is_always_key() {
    let map = two_lane_map();
    let ego = EgoState::new(0.0, 0.0, 0.0, 8.0);
    let leader_id = AgentId(2);
    let leader = Agent::new(
        leader_id,
        2.0,
        0.9,
        AgentState { x: 60.0, y: 0.0, heading: 0.0, speed: 9.5 },
    );
    let world = WorldSnapshot::new(0.0, ego, vec![leader]);
    let vehicle = VehicleParams::default();
    let config = ForwardSimConfig::default();
    let sets = vec![IntentionSet {
        agent: leader_id,
        trajectories: vec![prediction(
            vec![LaneId(0)],
            LongitudinalAction::Maintain,
            1.0,
            straight_states(60.0, 0.0, 9.5, HORIZON),
        )],
    }];
    let renderer = ScenarioRenderer::new(&map, &world, &vehicle, &sets, &config);
    let combos = single_choice_combos(&sets);
    let keys = renderer.select_key_vehicles(&combos[0], &keep_maintain());
    assert_eq!(keys, vec![leader_id]);
}

/// Grazing pass: parked vehicle whose FRS clears the ego swept footprint
/// by 0.3 m must assess safe; shifting it 0.4 m closer must fail and
/// trigger the fallback pass.
#[test]
fn safety_assessment_boundary_cases() {
    let map = two_lane_map();
    let vehicle = VehicleParams::default();
    let config = ForwardSimConfig::default();
    let policy = keep_maintain();

    // Ego half-width 0.95 -> swept top edge at y = 0.95. Parked agent
    // (half-width 0.9, inflated 1.1): clearance 0.3 puts its center at
    // y = 0.95 + 1.1 + 0.3 = 2.35.
    for (y_agent, expect_safe) in [(2.35, true), (1.95, false)] {
        let ego = EgoState::new(0.0, 0.0, 0.0, 10.0);
        let agent_id = AgentId(7);
        let parked = AgentState { x: 25.0, y: y_agent, heading: 0.0, speed: 0.0 };
        let agent = Agent::new(agent_id, 2.0, 0.9, parked);
        let world = WorldSnapshot::new(0.0, ego, vec![agent]);
        let sets = vec![IntentionSet {
            agent: agent_id,
            trajectories: vec![prediction(
                vec![LaneId(1)],
                LongitudinalAction::Maintain,
                1.0,
                straight_states(25.0, y_agent, 0.0, HORIZON),
            )],
        }];
        let renderer = ScenarioRenderer::new(&map, &world, &vehicle, &sets, &config);
        let combos = single_choice_combos(&sets);
        let keys = renderer.select_key_vehicles(&combos[0], &policy);

        let scenario = renderer.simulate_scenario(&combos[0], &keys, &policy);
        let outcome = renderer.safety_assess(&scenario, &keys);
        if expect_safe {
            assert!(keys.is_empty(), "grazing parked car should not be key");
            assert_eq!(outcome, SafetyOutcome::Pass);
        } else {
            match outcome {
                SafetyOutcome::Fail { agent, .. } => assert_eq!(agent, agent_id),
                SafetyOutcome::Pass => panic!("expected failure at 0.1 m overlap"),
            }
            let rendered = renderer.render(&combos, &policy);
            assert!(rendered[0].fallback, "failed first pass must fall back");
        }
    }
}

/// A multi-modal non-key agent whose unchosen mode blocks the ego lane:
/// the first pass fails against the FRS and the fallback brakes to a stop
/// with positive clearance (stopping distance v^2 / (2 b) fits the gap).
#[test]
fn fallback_brakes_and_clears_blocking_frs() {
    let map = two_lane_map();
    let ego = EgoState::new(0.0, 0.0, 0.0, 10.0);
    let agent_id = AgentId(9);
    let start = AgentState { x: 25.0, y: 3.5, heading: 0.0, speed: 5.0 };
    let agent = Agent::new(agent_id, 2.0, 0.9, start);
    let world = WorldSnapshot::new(0.0, ego, vec![agent]);
    let vehicle = VehicleParams::default();
    let config = ForwardSimConfig::default();
    let policy = keep_maintain();

    let keep = prediction(
        vec![LaneId(1)],
        LongitudinalAction::Maintain,
        0.6,
        straight_states(25.0, 3.5, 5.0, HORIZON),
    );
    let merge = prediction(
        vec![LaneId(0)],
        LongitudinalAction::Maintain,
        0.4,
        lane_change_states(25.0, 3.5, 0.0, 5.0, 10, HORIZON),
    );
    let sets = vec![IntentionSet { agent: agent_id, trajectories: vec![keep, merge] }];
    let renderer = ScenarioRenderer::new(&map, &world, &vehicle, &sets, &config);
    let combos = single_choice_combos(&sets);

    // The keep-lane choice: agent is not key, so the ego ignores it in
    // closed loop but the multi-modal FRS still blocks the lane ahead.
    let keep_combo = combos
        .iter()
        .find(|c| c.choices[0].1.intention.lane_sequence[0] == LaneId(1))
        .unwrap();
    let keys = renderer.select_key_vehicles(keep_combo, &policy);
    assert!(keys.is_empty());

    let first = renderer.simulate_scenario(keep_combo, &keys, &policy);
    let outcome = renderer.safety_assess(&first, &keys);
    let violation = match outcome {
        SafetyOutcome::Fail { step, agent } => {
            assert_eq!(agent, agent_id);
            (step, agent)
        }
        SafetyOutcome::Pass => panic!("first pass should fail against the blocking FRS"),
    };

    // Comfort-braking stopping distance must fit the initial clearance.
    let stopping = 10.0f64.powi(2) / (2.0 * config.ego_driver.comfort_decel);
    assert!(stopping < 25.0 - vehicle.half_length - 2.2);

    let fb = renderer.simulate_with_fallback(keep_combo, &keys, &policy, violation);
    assert!(fb.fallback);
    assert_eq!(renderer.safety_assess(&fb, &keys), SafetyOutcome::Pass);
    let final_state = fb.ego.last().unwrap();
    assert!(final_state.speed < 0.2, "fallback should stop, got {}", final_state.speed);
    // Lateral offset steers away from the violating side (agent on the
    // left -> shift right, negative y).
    let mean_y: f64 = fb.ego.iter().map(|s| s.y).sum::<f64>() / fb.ego.len() as f64;
    assert!(mean_y < 0.0, "fallback should shift away, mean y {mean_y}");

    // render keeps exactly one scenario per combination with p summing to 1.
    let scenarios = renderer.render(&combos, &policy);
    assert_eq!(scenarios.len(), combos.len());
    let total: f64 = scenarios.iter().map(|s| s.probability).sum();
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
}

/// Cut-in: the closed-loop ego decelerates once the agent enters the
/// corridor and keeps a positive gap; a fine-step replay of the same
/// models corroborates the outcome.
#[test]
fn cut_in_agent_forces_deceleration_with_positive_gap() {
    let map = two_lane_map();
    let ego0 = EgoState::new(0.0, 0.0, 0.0, 10.0);
    let agent_id = AgentId(1);
    let start = AgentState { x: 12.0, y: 3.5, heading: 0.0, speed: 7.0 };
    let agent = Agent::new(agent_id, 2.0, 0.9, start);
    let world = WorldSnapshot::new(0.0, ego0, vec![agent]);
    let vehicle = VehicleParams::default();
    let config = ForwardSimConfig::default();
    let policy = keep_maintain();

    let sets = vec![IntentionSet {
        agent: agent_id,
        trajectories: vec![prediction(
            vec![LaneId(0)],
            LongitudinalAction::Maintain,
            1.0,
            lane_change_states(12.0, 3.5, 0.0, 7.0, 10, HORIZON),
        )],
    }];
    let renderer = ScenarioRenderer::new(&map, &world, &vehicle, &sets, &config);
    let combos = single_choice_combos(&sets);
    let keys = renderer.select_key_vehicles(&combos[0], &policy);
    assert_eq!(keys, vec![agent_id]);

    let scenario = renderer.simulate_scenario(&combos[0], &keys, &policy);
    let min_speed = scenario.ego.iter().map(|s| s.speed).fold(f64::INFINITY, f64::min);
    let min_accel = scenario.ego.iter().map(|s| s.accel).fold(f64::INFINITY, f64::min);
    assert!(min_accel < -0.3, "ego should decelerate, min accel {min_accel}");
    assert!(min_speed < 9.5, "ego should shed speed, min {min_speed}");
    let clearance = min_footprint_clearance(&scenario, &vehicle, &world);
    assert!(clearance > 0.0, "gap must stay positive, clearance {clearance}");

    // Fine-step oracle: the same closed loop (agent pure-pursuits onto
    // lane 0, ego IDM-gates on the lateral window) at dt = 0.01 with
    // point-mass vehicles. Checks the qualitative outcome, not the exact
    // trajectory (the scenario ego runs full bicycle dynamics).
    let lane0 = map.lane(LaneId(0)).unwrap().centerline.clone();
    let dt = 0.01;
    let p = config.agent_driver.with_desired_speed(7.0);
    let e = config.ego_driver;
    let mut ego = AgentState { x: 0.0, y: 0.0, heading: 0.0, speed: 10.0 };
    let mut cut = start;
    let mut oracle_min_speed = ego.speed;
    let mut oracle_min_gap = f64::INFINITY;
    let mut oracle_onset = f64::INFINITY;
    for step in 0..(5.0 / dt) as usize {
        let kappa = pure_pursuit_curvature(&lane0, cut.position(), cut.heading, cut.speed, &p);
        let cut_next = step_agent(&cut, 0.0, kappa, dt);

        let proj = lane0.project(cut.position());
        let ego_arc = lane0.project(ego.position()).arc;
        let ahead = proj.arc - ego_arc;
        let leader = (proj.lateral.abs() <= config.leader_lateral_window && ahead > 0.1)
            .then_some((ahead - 2.0 - vehicle.half_length, cut.speed));
        let a = idm_accel(ego.speed, leader, &e).clamp(-6.0, 2.5);
        if a < -0.5 {
            oracle_onset = oracle_onset.min(step as f64 * dt);
        }
        let kappa_e = pure_pursuit_curvature(&lane0, ego.position(), ego.heading, ego.speed, &e);
        ego = step_agent(&ego, a, kappa_e, dt);
        cut = cut_next;
        oracle_min_speed = oracle_min_speed.min(ego.speed);
        if (cut.y - ego.y).abs() < 1.9 {
            oracle_min_gap = oracle_min_gap.min(cut.x - ego.x - 2.0 - vehicle.half_length);
        }
    }
    assert!(oracle_min_speed < 9.5, "oracle must also decelerate");
    assert!(oracle_min_gap > 0.0, "oracle must also keep a positive gap");

    // The jerk-limited scenario ego cannot match the point-mass minimum
    // speed, but the braking onset (corridor entry) must agree.
    let scenario_onset = DT
        * scenario
            .ego
            .iter()
            .position(|s| s.accel < -0.5)
            .expect("scenario ego brakes") as f64;
    assert!(
        (scenario_onset - oracle_onset).abs() <= 0.45,
        "braking onset {scenario_onset} vs oracle {oracle_onset}"
    );
}

#[test]
fn rendering_is_deterministic() {
    let map = two_lane_map();
    let ego = EgoState::new(0.0, 0.0, 0.0, 9.0);
    let a1 = Agent::new(AgentId(1), 2.0, 0.9, AgentState { x: 18.0, y: 0.0, heading: 0.0, speed: 7.0 });
    let a2 = Agent::new(AgentId(2), 2.2, 1.0, AgentState { x: 10.0, y: 3.5, heading: 0.0, speed: 8.0 });
    let world = WorldSnapshot::new(0.0, ego, vec![a1, a2]);
    let vehicle = VehicleParams::default();
    let config = ForwardSimConfig::default();
    let sets = vec![
        IntentionSet {
            agent: AgentId(1),
            trajectories: vec![
                prediction(vec![LaneId(0)], LongitudinalAction::Maintain, 0.7, straight_states(18.0, 0.0, 7.0, HORIZON)),
                prediction(vec![LaneId(0)], LongitudinalAction::Decelerate, 0.3, straight_states(18.0, 0.0, 6.0, HORIZON)),
            ],
        },
        IntentionSet {
            agent: AgentId(2),
            trajectories: vec![
                prediction(vec![LaneId(1)], LongitudinalAction::Maintain, 0.6, straight_states(10.0, 3.5, 8.0, HORIZON)),
                prediction(vec![LaneId(0)], LongitudinalAction::Maintain, 0.4, lane_change_states(10.0, 3.5, 0.0, 8.0, 12, HORIZON)),
            ],
        },
    ];
    let renderer = ScenarioRenderer::new(&map, &world, &vehicle, &sets, &config);
    let combos = intention_combinations(&sets, 2, 4);
    assert_eq!(combos.len(), 4);

    let policy = keep_maintain();
    let first = renderer.render(&combos, &policy);
    let second = renderer.render(&combos, &policy);
    let ser_a = serde_json::to_string(&first).unwrap();
    let ser_b = serde_json::to_string(&second).unwrap();
    assert_eq!(ser_a, ser_b);

    let total: f64 = first.iter().map(|s| s.probability).sum();
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    for s in &first {
        assert_eq!(s.ego.len(), HORIZON + 1);
        for (_, states) in &s.agents {
            assert_eq!(states.len(), HORIZON + 1);
        }
    }
}
