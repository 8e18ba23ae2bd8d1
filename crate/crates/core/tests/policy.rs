//! Policy enumeration over scenes: route filtering of lane changes, blocker
//! detection, stop handling, desired-speed clamps, and the reference
//! geometry each lateral policy induces.

use branchplan_core::dynamics::EgoState;
use branchplan_core::map::{LaneId, LaneMap, Route};
use branchplan_core::policy::{
    enumerate_policies, policy_reference_line, LateralPolicy, LongitudinalPolicy,
    PolicyConfig, PolicySpec,
};
use branchplan_core::world::{Agent, AgentId, AgentState, WorldSnapshot};

fn two_lane_map() -> LaneMap {
    LaneMap::straight_road(2, 3.5, 400.0, 15.0).unwrap()
}

fn ego_world(agents: Vec<Agent>) -> WorldSnapshot {
    WorldSnapshot::new(0.0, EgoState::new(20.0, 0.0, 0.0, 8.0), agents)
}

fn labels(policies: &[PolicySpec]) -> Vec<String> {
    policies.iter().map(PolicySpec::label).collect()
}

#[test]
fn open_two_lane_road_offers_keep_and_change() {
    let map = two_lane_map();
    let world = ego_world(Vec::new());
    let cfg = PolicyConfig::default();

    // Empty route permits the adjacent lane: two laterals, three speeds.
    let policies = enumerate_policies(&world, &map, &Route::new(Vec::new()), &cfg);
    assert_eq!(policies.len(), 6, "got {:?}", labels(&policies));
    let keeps = policies
        .iter()
        .filter(|p| p.lateral == LateralPolicy::LaneKeep)
        .count();
    let changes = policies
        .iter()
        .filter(|p| p.lateral == LateralPolicy::LaneChange(vec![LaneId(1)]))
        .count();
    assert_eq!((keeps, changes), (3, 3));
}

#[test]
fn route_restriction_drops_off_route_changes() {
    let map = two_lane_map();
    let world = ego_world(Vec::new());
    let cfg = PolicyConfig::default();

    let policies = enumerate_policies(&world, &map, &Route::new(vec![LaneId(0)]), &cfg);
    assert_eq!(policies.len(), 3, "got {:?}", labels(&policies));
    assert!(policies.iter().all(|p| p.lateral == LateralPolicy::LaneKeep));
}

#[test]
fn single_lane_road_keeps_lane_only() {
    let map = LaneMap::straight_road(1, 3.5, 400.0, 15.0).unwrap();
    let world = ego_world(Vec::new());
    let policies =
        enumerate_policies(&world, &map, &Route::new(Vec::new()), &PolicyConfig::default());
    assert_eq!(policies.len(), 3, "got {:?}", labels(&policies));
    assert!(policies.iter().all(|p| p.lateral == LateralPolicy::LaneKeep));
}

#[test]
fn static_blocker_ahead_adds_bypass() {
    let map = two_lane_map();
    let blocker =
        Agent::new(AgentId(7), 2.4, 0.95, AgentState::new(45.0, 0.3, 0.0, 0.0));
    let world = ego_world(vec![blocker]);
    let cfg = PolicyConfig::default();

    let policies = enumerate_policies(&world, &map, &Route::new(Vec::new()), &cfg);
    assert_eq!(policies.len(), 9, "got {:?}", labels(&policies));
    let bypasses: Vec<&PolicySpec> =
        policies.iter().filter(|p| p.lateral == LateralPolicy::Bypass).collect();
    assert_eq!(bypasses.len(), 3);

    // A moving vehicle at the same spot is no blocker.
    let mover = Agent::new(AgentId(7), 2.4, 0.95, AgentState::new(45.0, 0.3, 0.0, 4.0));
    let world = ego_world(vec![mover]);
    let policies = enumerate_policies(&world, &map, &Route::new(Vec::new()), &cfg);
    assert!(policies.iter().all(|p| p.lateral != LateralPolicy::Bypass));

    // Neither is one beyond the trigger range.
    let far = Agent::new(AgentId(7), 2.4, 0.95, AgentState::new(90.0, 0.3, 0.0, 0.0));
    let world = ego_world(vec![far]);
    let policies = enumerate_policies(&world, &map, &Route::new(Vec::new()), &cfg);
    assert!(policies.iter().all(|p| p.lateral != LateralPolicy::Bypass));
}

#[test]
fn stop_position_in_range_adds_stop_policy() {
    let map = two_lane_map();
    let world = ego_world(Vec::new());
    let cfg = PolicyConfig::default();

    let mut route = Route::new(vec![LaneId(0)]);
    route.stop_position = Some(60.0);
    let policies = enumerate_policies(&world, &map, &route, &cfg);
    assert_eq!(policies.len(), 4, "got {:?}", labels(&policies));
    assert!(policies
        .iter()
        .any(|p| matches!(p.longitudinal, LongitudinalPolicy::StopAt(s) if s == 60.0)));

    // A stop behind the ego or beyond the lookahead is ignored.
    route.stop_position = Some(10.0);
    assert_eq!(enumerate_policies(&world, &map, &route, &cfg).len(), 3);
    route.stop_position = Some(200.0);
    assert_eq!(enumerate_policies(&world, &map, &route, &cfg).len(), 3);
}

#[test]
fn desired_speed_clamps_to_lane_limit_and_zero() {
    let cfg = PolicyConfig::default();
    let maintain = PolicySpec::lane_keep(LongitudinalPolicy::Maintain);
    let accel = PolicySpec::lane_keep(LongitudinalPolicy::Accelerate);
    let decel = PolicySpec::lane_keep(LongitudinalPolicy::Decelerate);

    assert_eq!(maintain.desired_speed(8.0, 15.0, &cfg), 8.0);
    assert_eq!(accel.desired_speed(8.0, 15.0, &cfg), 10.0);
    assert_eq!(accel.desired_speed(14.0, 15.0, &cfg), 15.0);
    assert_eq!(maintain.desired_speed(20.0, 15.0, &cfg), 15.0);
    assert_eq!(decel.desired_speed(8.0, 15.0, &cfg), 5.0);
    assert_eq!(decel.desired_speed(1.0, 15.0, &cfg), 0.0);
}

#[test]
fn bypass_reference_shifts_away_from_the_blocker() {
    let map = two_lane_map();
    let cfg = PolicyConfig::default();
    let bypass = PolicySpec {
        lateral: LateralPolicy::Bypass,
        longitudinal: LongitudinalPolicy::Maintain,
    };

    // Blocker sits right of the centerline: shift left (positive y).
    let right_blocker =
        Agent::new(AgentId(7), 2.4, 0.95, AgentState::new(45.0, -0.3, 0.0, 0.0));
    let world = ego_world(vec![right_blocker]);
    let line = policy_reference_line(&bypass, &map, &world, LaneId(0), 120.0, 0.95, &cfg);
    let y_at_blocker = line.point_at(45.0).y;
    assert!(
        y_at_blocker > 1.0,
        "expected a leftward shift past the blocker, got y={y_at_blocker}"
    );

    // Mirror: blocker left of the centerline pushes the line right.
    let left_blocker =
        Agent::new(AgentId(7), 2.4, 0.95, AgentState::new(45.0, 0.3, 0.0, 0.0));
    let world = ego_world(vec![left_blocker]);
    let line = policy_reference_line(&bypass, &map, &world, LaneId(0), 120.0, 0.95, &cfg);
    let y_at_blocker = line.point_at(45.0).y;
    assert!(
        y_at_blocker < -1.0,
        "expected a rightward shift past the blocker, got y={y_at_blocker}"
    );

    // Lane-keep and lane-change references follow the target centerlines.
    let keep = PolicySpec::lane_keep(LongitudinalPolicy::Maintain);
    let line = policy_reference_line(&keep, &map, &world, LaneId(0), 120.0, 0.95, &cfg);
    assert!(line.point_at(100.0).y.abs() < 1e-9);
    let change = PolicySpec {
        lateral: LateralPolicy::LaneChange(vec![LaneId(1)]),
        longitudinal: LongitudinalPolicy::Maintain,
    };
    let line = policy_reference_line(&change, &map, &world, LaneId(0), 120.0, 0.95, &cfg);
    assert!((line.point_at(100.0).y - 3.5).abs() < 1e-9);
}