use approx::assert_abs_diff_eq;
use branchplan_core::dynamics::{linearize, step, Control, EgoState, VehicleParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> VehicleParams<f64> {
    VehicleParams::default()
}

#[test]
fn straight_line_motion_advances_exactly() {
    let s = EgoState::new(0.0, 0.0, 0.0, 5.0);
    let next = step(&s, &Control::zero(), 0.2, &params());
    assert_abs_diff_eq!(next.x, 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(next.y, 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(next.heading, 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(next.speed, 5.0, epsilon = 1e-15);
}

#[test]
fn vanishing_dt_is_identity() {
    let s = EgoState { x: 1.0, y: -2.0, heading: 0.7, speed: 6.0, accel: 0.5, steer: 0.1 };
    let u = Control::new(1.0, 0.2);
    let next = step(&s, &u, 1e-13, &params());
    assert_abs_diff_eq!(next.x, s.x, epsilon = 1e-9);
    assert_abs_diff_eq!(next.y, s.y, epsilon = 1e-9);
    assert_abs_diff_eq!(next.heading, s.heading, epsilon = 1e-9);
    assert_abs_diff_eq!(next.speed, s.speed, epsilon = 1e-9);
}

#[test]
fn yaw_rate_follows_bicycle_formula() {
    let s = EgoState { x: 0.0, y: 0.0, heading: 0.0, speed: 5.0, accel: 0.0, steer: 0.1 };
    let next = step(&s, &Control::zero(), 0.2, &params());
    let expected = 5.0 / 2.8 * 0.1f64.tan() * 0.2;
    assert_abs_diff_eq!(next.heading, expected, epsilon = 1e-15);
    assert_abs_diff_eq!(next.heading, 0.03584, epsilon = 1e-5);
}

#[test]
fn speed_clamps_at_zero() {
    let s = EgoState { x: 0.0, y: 0.0, heading: 0.0, speed: 0.1, accel: -2.0, steer: 0.0 };
    let next = step(&s, &Control::zero(), 0.2, &params());
    assert_abs_diff_eq!(next.speed, 0.0, epsilon = 1e-15);
}

#[test]
fn steer_clamps_at_lock() {
    let p = params();
    let s = EgoState { x: 0.0, y: 0.0, heading: 0.0, speed: 3.0, accel: 0.0, steer: 0.59 };
    let next = step(&s, &Control::new(0.0, 0.5), 0.2, &p);
    assert_abs_diff_eq!(next.steer, p.max_steer(), epsilon = 1e-15);
}

#[test]
fn stepping_is_deterministic_and_stateless() {
    let p = params();
    let u = Control::new(0.3, -0.05);
    let mut a = EgoState::new(0.0, 0.0, 0.2, 8.0);
    let mut b = a;
    for _ in 0..50 {
        a = step(&a, &u, 0.1, &p);
    }
    for _ in 0..50 {
        b = step(&b, &u, 0.1, &p);
    }
    assert_eq!(a, b);
}

#[test]
fn vanishing_dt_linearization_is_identity() {
    let s = EgoState { x: 1.0, y: 2.0, heading: 0.4, speed: 7.0, accel: 0.3, steer: 0.05 };
    let (a, b) = linearize(&s, &Control::zero(), 1e-15, &params());
    for i in 0..6 {
        for j in 0..6 {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(a[(i, j)], expected, epsilon = 1e-12);
        }
    }
    assert!(b.iter().all(|&v| v.abs() < 1e-12));
}

#[test]
fn linearization_matches_finite_differences() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = 1e-5;
    let dt = 0.2;
    for _ in 0..1000 {
        // Interior states: clamps inactive within the FD stencil.
        let s = EgoState {
            x: rng.gen_range(-50.0..50.0),
            y: rng.gen_range(-50.0..50.0),
            heading: rng.gen_range(-3.0..3.0),
            speed: rng.gen_range(1.0..15.0),
            accel: rng.gen_range(-3.0..2.0),
            steer: rng.gen_range(-0.4..0.4),
        };
        let u = Control::new(rng.gen_range(-4.0..4.0), rng.gen_range(-0.3..0.3));
        let (a, b) = linearize(&s, &u, dt, &p);

        for j in 0..6 {
            let mut up = s.to_vector();
            let mut dn = s.to_vector();
            up[j] += h;
            dn[j] -= h;
            let fu = step(&EgoState::from_vector(&up), &u, dt, &p).to_vector();
            let fd = step(&EgoState::from_vector(&dn), &u, dt, &p).to_vector();
            let col = (fu - fd) / (2.0 * h);
            for i in 0..6 {
                assert_abs_diff_eq!(a[(i, j)], col[i], epsilon = 1e-6);
            }
        }
        for j in 0..2 {
            let mut up = u.to_vector();
            let mut dn = u.to_vector();
            up[j] += h;
            dn[j] -= h;
            let fu = step(&s, &Control::from_vector(&up), dt, &p).to_vector();
            let fd = step(&s, &Control::from_vector(&dn), dt, &p).to_vector();
            let col = (fu - fd) / (2.0 * h);
            for i in 0..6 {
                assert_abs_diff_eq!(b[(i, j)], col[i], epsilon = 1e-6);
            }
        }
    }
}

#[test]
fn instantiates_at_f32() {
    let p = VehicleParams::<f32>::default();
    let s = EgoState::new(0.0f32, 0.0, 0.0, 5.0);
    let next = step(&s, &Control::zero(), 0.2, &p);
    assert!((next.x - 1.0).abs() < 1e-6);
    let fp = p.footprint(&s);
    assert!((fp.area() - 4.0 * p.half_length * p.half_width).abs() < 1e-4);
}
