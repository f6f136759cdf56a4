use nalgebra::{Matrix3, Vector3, Vector4};
use proptest::prelude::*;

use wheeldrone::controllers::{attitude_torque, auxiliary_input, AttitudeGains, AuxGains};
use wheeldrone::dynamics::{
    constraint_forces, contact_impulse, continuous_dynamics, euler_rate_matrix, mass_matrix, psi_matrix,
    rotation_matrix, select_mode, switch_altitude, Mode, ModeParams, PhysicalParams, State,
};
use wheeldrone::environment::{default_scenario, CylinderObstacle, Scenario, ScenarioDoc, SpeedProfile};
use wheeldrone::planner::{project_input, softmax_weights, transition, ControlInput, InputLimits};

fn eta_strategy() -> impl Strategy<Value = Vector3<f64>> {
    (-3.1..3.1f64, -1.2..1.2f64, -3.1..3.1f64).prop_map(|(a, b, c)| Vector3::new(a, b, c))
}

fn vec3(range: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-range..range, -range..range, -range..range).prop_map(|(a, b, c)| Vector3::new(a, b, c))
}

fn unit_vector() -> impl Strategy<Value = Vector3<f64>> {
    vec3(1.0).prop_filter("non-degenerate", |v| v.norm() > 0.1).prop_map(|v| v.normalize())
}

fn inf_norm(m: &Matrix3<f64>) -> f64 {
    m.abs().max()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rotation_is_orthonormal(eta in eta_strategy()) {
        let r = rotation_matrix(&eta);
        prop_assert!(inf_norm(&(r.transpose() * r - Matrix3::identity())) < 1e-10);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rate_matrices_are_inverse(eta in eta_strategy()) {
        let product = euler_rate_matrix(&eta).unwrap() * psi_matrix(&eta).unwrap();
        prop_assert!(inf_norm(&(product - Matrix3::identity())) < 1e-9);
    }

    #[test]
    fn mass_matrix_is_spd(eta in eta_strategy()) {
        let j = PhysicalParams::default().inertia;
        let m = mass_matrix(&eta, &j).unwrap();
        prop_assert!(inf_norm(&(m - m.transpose())) < 1e-12);
        let eig = m.symmetric_eigen().eigenvalues;
        prop_assert!(eig.min() > 0.0);
    }

    #[test]
    fn ground_constraints_hold_at_acceleration_level(
        yaw in -3.1..3.1f64,
        pitch in -0.5..0.5f64,
        speed in -2.0..2.0f64,
        yaw_rate in -2.0..2.0f64,
        pitch_rate in -2.0..2.0f64,
        thrust in 0.0..8.0f64,
        torque in vec3(0.01),
    ) {
        let p = PhysicalParams::default();
        // Rolling without side-slip: velocity along the heading.
        let state = State {
            xi: Vector3::zeros(),
            eta: Vector3::new(yaw, pitch, 0.0),
            xi_dot: Vector3::new(yaw.cos(), yaw.sin(), 0.0) * speed,
            eta_dot: Vector3::new(yaw_rate, pitch_rate, 0.0),
        };
        let acc = continuous_dynamics(&state, thrust, &torque, Mode::OGround, &p).unwrap();
        prop_assume!(!acc.detached);
        prop_assert!(acc.xi_ddot.z.abs() < 1e-8);
        // d/dt of the body-lateral speed v_y = −sin ψ ẋ + cos ψ ẏ.
        let (s, c) = yaw.sin_cos();
        let v_y_rate = -s * acc.xi_ddot.x + c * acc.xi_ddot.y - yaw_rate * (c * state.xi_dot.x + s * state.xi_dot.y);
        prop_assert!(v_y_rate.abs() < 1e-8);
        prop_assert!(acc.eta_ddot[2].abs() < 1e-8);
        prop_assert!(acc.forces.lambda1 <= 1e-9);
    }

    #[test]
    fn impulse_projections_are_idempotent(eta in eta_strategy(), v in vec3(3.0), w in vec3(3.0), e in 0.0..1.0f64) {
        let minus = State { xi: Vector3::zeros(), eta, xi_dot: v, eta_dot: w };
        let once = contact_impulse(&minus, e);
        prop_assert_eq!(once.eta[2], 0.0);
        prop_assert_eq!(once.eta_dot[2], 0.0);
        // Feeding a post-impact state with upward motion and no side-slip
        // back in only scales the vertical velocity by −e.
        let mut upward = once;
        upward.xi_dot.z = upward.xi_dot.z.abs();
        let twice = contact_impulse(&upward, e);
        prop_assert_eq!(twice.eta, upward.eta);
        prop_assert_eq!(twice.eta_dot, upward.eta_dot);
        prop_assert!((twice.xi_dot.x - upward.xi_dot.x).abs() < 1e-12);
        prop_assert!((twice.xi_dot.y - upward.xi_dot.y).abs() < 1e-12);
        prop_assert!((twice.xi_dot.z + e * upward.xi_dot.z).abs() < 1e-12);
    }

    #[test]
    fn switch_altitude_matches_grid_search(d in 0.05..0.6f64, l in 0.0..0.8f64) {
        let n = 100_000;
        let grid = (0..=n)
            .map(|i| -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / n as f64)
            .map(|phi| 0.5 * d * phi.cos() + 0.5 * l * phi.sin().abs() - 0.5 * d)
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((switch_altitude(d, l) - grid).abs() < 1e-6);
    }

    #[test]
    fn mode_selection_partitions_altitude(z in -0.1..1.0f64, alpha in 1.0..3.0f64) {
        let mp = ModeParams::new(&PhysicalParams::default(), alpha).unwrap();
        let mode = select_mode(z, &mp);
        let expected = if z <= 1e-6 { Mode::OGround } else if z <= mp.threshold() { Mode::NGround } else { Mode::Flight };
        prop_assert_eq!(mode, expected);
    }

    #[test]
    fn collision_is_invariant_along_axis(
        point in vec3(2.0),
        axis in unit_vector(),
        radius in 0.01..0.5f64,
        x in vec3(2.0),
        shift in -5.0..5.0f64,
    ) {
        let doc = ScenarioDoc {
            goal: Vector3::new(1.0, 0.0, 0.0),
            start: Vector3::zeros(),
            obstacles: vec![CylinderObstacle::new(point, axis, radius).unwrap()],
            profile: SpeedProfile::default(),
        };
        let scenario = Scenario::new(doc, &PhysicalParams::default()).unwrap();
        let o = &scenario.obstacles[0];
        let moved = x + axis * shift;
        prop_assert!((o.axis_distance(&x) - o.axis_distance(&moved)).abs() < 1e-9);
        let margin = (o.axis_distance(&x) - radius - scenario.inflation).abs();
        prop_assume!(margin > 1e-9);
        prop_assert_eq!(scenario.collision_indicator(&x), scenario.collision_indicator(&moved));
    }

    #[test]
    fn reference_velocity_matches_finite_difference(
        goal in vec3(5.0),
        slope in 0.2..2.0f64,
        cruise in 0.1..1.5f64,
        t in 0.0..15.0f64,
    ) {
        prop_assume!(goal.norm() > 0.05);
        let doc = ScenarioDoc {
            goal,
            start: Vector3::zeros(),
            obstacles: vec![],
            profile: SpeedProfile { slope, cruise_speed: cruise },
        };
        let s = Scenario::new(doc, &PhysicalParams::default()).unwrap();
        let h = 1e-4;
        let a = s.reference_at(t);
        let b = s.reference_at(t + h);
        prop_assert!((b.xi_d - a.xi_d).norm() <= cruise * h + 1e-12);
        let fd = (b.xi_d - a.xi_d) / h;
        prop_assert!((fd - a.xi_dot_d).norm() < 1e-3);
        // Arc length of the whole profile is the straight-line distance.
        let end = s.reference_at(s.profile_duration() + 1.0);
        prop_assert!((end.xi_d - goal).norm() < 1e-6);
        let path: f64 = (0..=2000)
            .map(|i| s.reference_at(s.profile_duration() * i as f64 / 2000.0).xi_d)
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .sum();
        prop_assert!((path - goal.norm()).abs() < 1e-6);
    }

    #[test]
    fn aux_input_is_gravity_compensating(xi in vec3(3.0), v in vec3(2.0), xd in vec3(3.0)) {
        let p = PhysicalParams::default();
        let state = State { xi, eta: Vector3::zeros(), xi_dot: v, eta_dot: Vector3::zeros() };
        let reference = wheeldrone::environment::ReferencePoint { xi_d: xd, xi_dot_d: Vector3::zeros() };
        let gains = AuxGains::default();
        let u = auxiliary_input(&state, &reference, &gains, &p);
        let mu = -gains.k_xi * (xi - xd) - gains.k_xi_dot * v;
        prop_assert!(u.thrust() >= 0.0);
        prop_assert!(u.thrust() >= p.mass * (mu.z + p.gravity) - 1e-9);
        prop_assert_eq!(u.phi_d(), 0.0);
        prop_assert!(u.0.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn attitude_torque_is_linear_at_rest(eta in eta_strategy(), e1 in vec3(0.5), e2 in vec3(0.5), w1 in vec3(1.0), w2 in vec3(1.0)) {
        let p = PhysicalParams::default();
        let g = AttitudeGains::default();
        let zero = Vector3::zeros();
        let tau = |e: Vector3<f64>, w: Vector3<f64>| attitude_torque(&eta, &zero, &(eta - e), &(-w), &g, &p).unwrap();
        let lhs = tau(e1 + e2 * 2.0, w1 + w2 * 2.0);
        let rhs = tau(e1, w1) + tau(e2, w2) * 2.0;
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn softmax_weights_are_a_distribution(costs in prop::collection::vec(0.0..1e5f64, 1..64), shift in -1e4..1e4f64, lambda in 0.1..1e3f64) {
        let w = softmax_weights(&costs, lambda).unwrap();
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = costs.iter().map(|c| c + shift).collect();
        let ws = softmax_weights(&shifted, lambda).unwrap();
        for (a, b) in w.iter().zip(&ws) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn projection_locks_the_inactive_slot(raw in (-20.0..40.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64), z in 0.0..0.5f64) {
        let limits = InputLimits { max_thrust: 18.4, max_angle: 1.2 };
        let mp = ModeParams::new(&PhysicalParams::default(), 1.5).unwrap();
        let mode = select_mode(z, &mp);
        let u = project_input(&Vector4::new(raw.0, raw.1, raw.2, raw.3), mode, &limits);
        if mode.is_ground() { prop_assert_eq!(u.phi_d(), 0.0) } else { prop_assert_eq!(u.psi_d(), 0.0) }
        prop_assert!((0.0..=limits.max_thrust).contains(&u.thrust()));
        prop_assert!(u.attitude().amax() <= limits.max_angle);
    }

    #[test]
    fn transition_never_penetrates(
        z in 0.0..0.5f64,
        v in vec3(3.0),
        f in 0.0..18.0f64,
        angles in (-0.6..0.6f64, -0.6..0.6f64, -0.6..0.6f64),
    ) {
        let p = PhysicalParams::default();
        let mut x = State { xi: Vector3::new(0.0, 0.0, z), eta: Vector3::zeros(), xi_dot: v, eta_dot: Vector3::zeros() };
        let u = ControlInput::new(f, angles.0, angles.1, angles.2);
        for _ in 0..30 {
            x = transition(&x, &u, 0.02, &p);
            prop_assert!(x.xi.z >= -1e-9, "z = {}", x.xi.z);
        }
    }
}

#[test]
fn grounded_rest_has_compressive_normal_force() {
    let p = PhysicalParams::default();
    let state = State::at_rest(Vector3::zeros());
    let f = constraint_forces(&state, 0.0, &Vector3::zeros(), Mode::OGround, &p).unwrap();
    assert!((f.lambda1 + p.mass * p.gravity).abs() < 1e-12);
    assert_eq!(default_scenario(&p).obstacles.len(), 3);
}
