use approx::assert_abs_diff_eq;
use branchplan_core::dynamics::EgoState;
use branchplan_core::forward_sim::Scenario;
use branchplan_core::policy::{LongitudinalPolicy, PolicySpec};
use branchplan_core::prediction::IntentionCombination;
use branchplan_core::scenario_tree::{branch_time, build_tree, divergence, DivergenceConfig};

const DT: f64 = 0.2;
const HORIZON: usize = 25;

fn scenario_from_ego(ego: Vec<EgoState<f64>>, probability: f64) -> Scenario {
    Scenario {
        policy: PolicySpec::lane_keep(LongitudinalPolicy::Maintain),
        combination: IntentionCombination { choices: vec![], probability },
        ego,
        agents: vec![],
        probability,
        fallback: false,
        safe: true,
    }
}

/// Straight ego trajectory at constant speed.
fn straight_ego(speed: f64, steps: usize) -> Vec<EgoState<f64>> {
    (0..=steps).map(|t| EgoState::new(speed * DT * t as f64, 0.0, 0.0, speed)).collect()
}

/// Identical until `t_split` seconds, then drifting laterally at `rate`.
fn splitting_ego(speed: f64, t_split: f64, rate: f64, steps: usize) -> Vec<EgoState<f64>> {
    (0..=steps)
        .map(|t| {
            let time = DT * t as f64;
            let y = rate * (time - t_split).max(0.0);
            EgoState::new(speed * DT * t as f64, y, 0.0, speed)
        })
        .collect()
}

#[test]
fn divergence_identity_and_pythagoras() {
    let cfg = DivergenceConfig::default();
    let a = scenario_from_ego(straight_ego(8.0, HORIZON), 0.5);
    for t in 0..=HORIZON {
        assert_abs_diff_eq!(divergence(&a, &a, t, &cfg), 0.0);
    }
    let mut b = a.clone();
    b.ego[10].x = a.ego[10].x + 3.0;
    b.ego[10].y = 4.0;
    assert_abs_diff_eq!(divergence(&a, &b, 10, &cfg), 5.0, epsilon = 1e-12);
}

/// Closed form: identical until 1.2 s, then 0.5 m/s lateral drift gives
/// deviation 0.5 * max(0, t - 1.2).
#[test]
fn divergence_matches_closed_form_drift()
{
    let cfg = DivergenceConfig::default();
    let a = scenario_from_ego(straight_ego(8.0, HORIZON), 0.5);
    let b = scenario_from_ego(splitting_ego(8.0, 1.2, 0.5, HORIZON), 0.5);
    for t in 0..=HORIZON {
        let time = DT * t as f64;
        let expected = 0.5 * (time - 1.2f64).max(0.0);
        assert_abs_diff_eq!(divergence(&a, &b, t, &cfg), expected, epsilon = 1e-12);
    }
}

#[test]
fn branch_time_cap_binds_for_identical_scenarios() {
    let cfg = DivergenceConfig::default();
    let a = scenario_from_ego(straight_ego(8.0, HORIZON), 0.5);
    let b = a.clone();
    // tau_max = 3 s at dt 0.2 -> step 15.
    assert_eq!(branch_time(&[a.clone(), b], &cfg), 15);
    // Single scenario: cap as well.
    assert_eq!(branch_time(&[a], &cfg), 15);
}

/// The 0.5 m/s drift pair against theta = 0.3: deviation reaches 0.3 at
/// t = 1.8 s (step 9), so the last compliant step is 8.
#[test]
fn branch_time_drift_case_stops_at_step_eight() {
    let cfg = DivergenceConfig { theta: 0.3, ..DivergenceConfig::default() };
    let a = scenario_from_ego(straight_ego(8.0, HORIZON), 0.5);
    let b = scenario_from_ego(splitting_ego(8.0, 1.2, 0.5, HORIZON), 0.5);
    assert_abs_diff_eq!(divergence(&a, &b, 8, &cfg), 0.2, epsilon = 1e-12);
    assert_abs_diff_eq!(divergence(&a, &b, 9, &cfg), 0.3, epsilon = 1e-12);
    assert_eq!(branch_time(&[a, b], &cfg), 8);
}

/// Brute-force oracle: independent exhaustive scan over steps and pairs.
#[test]
fn branch_time_matches_exhaustive_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
    let cfg = DivergenceConfig::default();
    for _ in 0..300 {
        let n = rng.gen_range(1..=4usize);
        let scenarios: Vec<Scenario> = (0..n)
            .map(|_| {
                let split = rng.gen_range(0.0..4.0);
                let rate = rng.gen_range(0.0..1.5);
                let speed = rng.gen_range(4.0..12.0);
                scenario_from_ego(splitting_ego(speed, split, rate, HORIZON), 1.0 / n as f64)
            })
            .collect();

        let expected = {
            let cap = cfg.cap_steps(HORIZON);
            let ok_at = |t: usize| {
                (0..n).all(|i| {
                    (0..n).all(|j| divergence(&scenarios[i], &scenarios[j], t, &cfg) < cfg.theta)
                })
            };
            let mut best = 0;
            for t in 0..=cap {
                if !ok_at(t) {
                    break;
                }
                best = t;
            }
            best
        };
        assert_eq!(branch_time(&scenarios, &cfg), expected);
    }
}

/// One early-diverging pair pins the branch step regardless of the rest.
#[test]
fn branch_time_takes_min_over_pairs() {
    let cfg = DivergenceConfig::default();
    // Speeds differ: positional x-gap grows at |dv| m/s.
    let a = scenario_from_ego(straight_ego(8.0, HORIZON), 0.4);
    let b = scenario_from_ego(straight_ego(8.0, HORIZON), 0.3);
    // 0.7 m/s x-rate: deviation 0.5 first at t where 0.7 t >= 0.5 -> 0.72 s,
    // step 4 (0.8 s, dev 0.56 >= theta). Last compliant step is 3.
    let c = scenario_from_ego(straight_ego(8.7, HORIZON), 0.3);
    assert_eq!(branch_time(&[a, b, c], &cfg), 3);
}

#[test]
fn enlarging_theta_and_removing_scenarios_never_decrease_tau() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let scenarios: Vec<Scenario> = (0..3)
            .map(|_| {
                let split = rng.gen_range(0.0..3.0);
                let rate = rng.gen_range(0.1..1.2);
                scenario_from_ego(splitting_ego(8.0, split, rate, HORIZON), 1.0 / 3.0)
            })
            .collect();
        let tight = DivergenceConfig { theta: 0.3, ..DivergenceConfig::default() };
        let loose = DivergenceConfig { theta: 0.8, ..DivergenceConfig::default() };
        let tau_tight = branch_time(&scenarios, &tight);
        assert!(branch_time(&scenarios, &loose) >= tau_tight);
        assert!(branch_time(&scenarios[..2], &tight) >= tau_tight);
    }
}

#[test]
fn build_tree_sorts_by_probability_and_keeps_invariants() {
    let cfg = DivergenceConfig::default();
    let a = scenario_from_ego(straight_ego(8.0, HORIZON), 0.3);
    let b = scenario_from_ego(splitting_ego(8.0, 1.2, 0.5, HORIZON), 0.7);
    let policy = PolicySpec::lane_keep(LongitudinalPolicy::Maintain);
    let tree = build_tree(vec![a, b], policy, &cfg);

    assert_eq!(tree.scenarios.len(), 2);
    assert_abs_diff_eq!(tree.scenarios[0].probability, 0.7);
    assert_abs_diff_eq!(tree.scenarios[1].probability, 0.3);
    assert_eq!(tree.horizon, HORIZON);
    assert!(tree.branch_step <= cfg.cap_steps(HORIZON));
    // Prefix safety on the built tree.
    for t in 0..=tree.branch_step {
        for i in 0..tree.scenarios.len() {
            for j in (i + 1)..tree.scenarios.len() {
                assert!(divergence(&tree.scenarios[i], &tree.scenarios[j], t, &cfg) < cfg.theta);
            }
        }
    }
    // Maximality: the next step violates the condition (cap not binding
    // here since the drift pair diverges before 3 s).
    assert!(tree.branch_step < cfg.cap_steps(HORIZON));
    let t = tree.branch_step + 1;
    let violated = (0..tree.scenarios.len()).any(|i| {
        ((i + 1)..tree.scenarios.len())
            .any(|j| divergence(&tree.scenarios[i], &tree.scenarios[j], t, &cfg) >= cfg.theta)
    });
    assert!(violated);
}
