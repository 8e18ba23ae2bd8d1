//! Built-in scenario configurations: cut-in, noise injection, dynamic
//! traffic, and desk-scale left-turn and bypass smoke setups. Each builder
//! matches the TOML file of the same name under `scenarios/`.

use crate::config::{
    AgentConfig, BehaviorConfig, EgoConfig, EpisodeConfig, LaneConfig, MapConfig, NoiseConfig,
    PlannerConfig, RandomizationConfig, WorldConfig, SCHEMA_VERSION,
};

pub const NAMES: [&str; 5] =
    ["cut-in", "noise-injection", "dynamic-traffic", "left-turn", "bypass"];

pub fn by_name(name: &str) -> Option<WorldConfig> {
    match name {
        "cut-in" => Some(cut_in()),
        "noise-injection" => Some(noise_injection()),
        "dynamic-traffic" => Some(dynamic_traffic()),
        "left-turn" => Some(left_turn()),
        "bypass" => Some(bypass()),
        _ => None,
    }
}

fn straight_two_lane(length: f64, speed_limit: f64) -> MapConfig {
    MapConfig {
        lanes: vec![
            LaneConfig {
                id: 0,
                centerline: vec![[0.0, 0.0], [length, 0.0]],
                width: 3.5,
                speed_limit,
                left: Some(1),
                right: None,
                successors: Vec::new(),
            },
            LaneConfig {
                id: 1,
                centerline: vec![[0.0, 3.5], [length, 3.5]],
                width: 3.5,
                speed_limit,
                left: None,
                right: Some(0),
                successors: Vec::new(),
            },
        ],
        drivable: None,
    }
}

/// A slower vehicle ahead in the left lane merges into the ego lane; the
/// ego is expected to yield. Carries the batch randomization ranges.
pub fn cut_in() -> WorldConfig {
    WorldConfig {
        schema_version: SCHEMA_VERSION,
        map: straight_two_lane(400.0, 15.0),
        ego: EgoConfig {
            state: [0.0, 0.0, 0.0, 8.0],
            route: vec![0],
            stop_position: None,
            desired_speed: 8.0,
            goal_arc: 110.0,
        },
        agents: vec![AgentConfig {
            id: 1,
            half_length: 2.4,
            half_width: 0.95,
            state: [12.0, 3.5, 0.0, 5.0],
            behavior: BehaviorConfig::IntentionSwitch {
                lane: 1,
                target_lane: 0,
                at_time: 1.0,
                desired_speed: 5.0,
            },
        }],
        planner: PlannerConfig::default(),
        episode: EpisodeConfig { timeout: 30.0 },
        noise: None,
        randomization: Some(RandomizationConfig {
            gap: [8.0, 20.0],
            trigger: [0.5, 2.0],
            speed: [4.0, 8.0],
        }),
    }
}

/// A lane-keeping neighbor whose predictions get a lane-change boost over a
/// 3.5 s window; the ego should not flip-flop policies.
pub fn noise_injection() -> WorldConfig {
    WorldConfig {
        schema_version: SCHEMA_VERSION,
        map: straight_two_lane(400.0, 15.0),
        ego: EgoConfig {
            state: [0.0, 0.0, 0.0, 8.0],
            route: vec![0],
            stop_position: None,
            desired_speed: 8.0,
            goal_arc: 110.0,
        },
        agents: vec![AgentConfig {
            id: 2,
            half_length: 2.4,
            half_width: 0.95,
            state: [18.0, 3.5, 0.0, 7.0],
            behavior: BehaviorConfig::Reactive { lane: 1, desired_speed: 7.0 },
        }],
        planner: PlannerConfig::default(),
        episode: EpisodeConfig { timeout: 30.0 },
        noise: Some(NoiseConfig { agent: 2, lane: 0, boost: 0.45, from: 2.0, until: 5.5 }),
        randomization: None,
    }
}

/// Mixed traffic: a slow leader in the ego lane, a faster car in the left
/// lane, and a distant vehicle that changes lanes mid-episode.
pub fn dynamic_traffic() -> WorldConfig {
    WorldConfig {
        schema_version: SCHEMA_VERSION,
        map: straight_two_lane(500.0, 15.0),
        ego: EgoConfig {
            state: [0.0, 0.0, 0.0, 8.0],
            route: Vec::new(),
            stop_position: None,
            desired_speed: 9.0,
            goal_arc: 130.0,
        },
        agents: vec![
            AgentConfig {
                id: 1,
                half_length: 2.4,
                half_width: 0.95,
                state: [28.0, 0.0, 0.0, 6.0],
                behavior: BehaviorConfig::Reactive { lane: 0, desired_speed: 6.0 },
            },
            AgentConfig {
                id: 2,
                half_length: 2.4,
                half_width: 0.95,
                state: [10.0, 3.5, 0.0, 9.0],
                behavior: BehaviorConfig::Reactive { lane: 1, desired_speed: 9.0 },
            },
            AgentConfig {
                id: 3,
                half_length: 2.4,
                half_width: 0.95,
                state: [70.0, 3.5, 0.0, 7.0],
                behavior: BehaviorConfig::IntentionSwitch {
                    lane: 1,
                    target_lane: 0,
                    at_time: 4.0,
                    desired_speed: 7.0,
                },
            },
        ],
        planner: PlannerConfig::default(),
        episode: EpisodeConfig { timeout: 35.0 },
        noise: None,
        randomization: None,
    }
}

/// Desk-scale unprotected left turn across an oncoming lane.
pub fn left_turn() -> WorldConfig {
    WorldConfig {
        schema_version: SCHEMA_VERSION,
        map: MapConfig {
            lanes: vec![
                LaneConfig {
                    id: 0,
                    centerline: vec![
                        [0.0, 0.0],
                        [14.0, 0.0],
                        [18.0, 0.4],
                        [21.0, 1.8],
                        [23.2, 4.2],
                        [24.4, 7.2],
                        [24.8, 10.0],
                        [24.8, 40.0],
                    ],
                    width: 3.5,
                    speed_limit: 8.0,
                    left: None,
                    right: None,
                    successors: Vec::new(),
                },
                // Oncoming lane; its direction of travel is -x.
                LaneConfig {
                    id: 1,
                    centerline: vec![[70.0, 4.0], [0.0, 4.0]],
                    width: 3.5,
                    speed_limit: 8.0,
                    left: None,
                    right: None,
                    successors: Vec::new(),
                },
            ],
            drivable: Some(vec![[-2.0, -2.0], [72.0, -2.0], [72.0, 6.5], [27.0, 6.5], [27.0, 42.0], [22.0, 42.0], [22.0, 6.5], [-2.0, 6.5]]),
        },
        ego: EgoConfig {
            state: [0.0, 0.0, 0.0, 5.0],
            route: vec![0],
            stop_position: None,
            desired_speed: 4.0,
            goal_arc: 34.0,
        },
        agents: vec![AgentConfig {
            id: 1,
            half_length: 2.4,
            half_width: 0.95,
            state: [55.0, 4.0, std::f64::consts::PI, 6.0],
            behavior: BehaviorConfig::Reactive { lane: 1, desired_speed: 6.0 },
        }],
        planner: PlannerConfig::default(),
        episode: EpisodeConfig { timeout: 25.0 },
        noise: None,
        randomization: None,
    }
}

/// A stopped vehicle blocks the ego lane while a car approaches head-on in
/// the adjacent lane; the ego shifts around the blocker between gaps.
pub fn bypass() -> WorldConfig {
    WorldConfig {
        schema_version: SCHEMA_VERSION,
        map: straight_two_lane(300.0, 12.0),
        ego: EgoConfig {
            state: [0.0, 0.0, 0.0, 7.0],
            route: vec![0],
            stop_position: None,
            desired_speed: 7.0,
            goal_arc: 90.0,
        },
        agents: vec![
            AgentConfig {
                id: 1,
                half_length: 2.4,
                half_width: 0.95,
                state: [34.0, 0.0, 0.0, 0.0],
                behavior: BehaviorConfig::Scripted { states: vec![[34.0, 0.0, 0.0, 0.0]], dt: 1.0 },
            },
            AgentConfig {
                id: 2,
                half_length: 2.4,
                half_width: 0.95,
                state: [120.0, 3.5, std::f64::consts::PI, 6.0],
                behavior: BehaviorConfig::Scripted {
                    states: vec![
                        [120.0, 3.5, std::f64::consts::PI, 6.0],
                        [60.0, 3.5, std::f64::consts::PI, 6.0],
                        [0.0, 3.5, std::f64::consts::PI, 6.0],
                    ],
                    dt: 10.0,
                },
            },
        ],
        planner: PlannerConfig::default(),
        episode: EpisodeConfig { timeout: 30.0 },
        noise: None,
        randomization: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates() {
        for name in NAMES {
            let cfg = by_name(name).expect("known name");
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            cfg.lane_map().unwrap_or_else(|e| panic!("{name} map: {e}"));
        }
    }
}
