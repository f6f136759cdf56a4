//! Discrete prediction model used inside the rollouts.
//!
//! Attitude is assumed to track the reference instantly, so only the
//! translational dynamics are integrated. A downward ground crossing inside
//! the step is resolved by stepping exactly to the contact time and applying
//! the touchdown impulse.

use nalgebra::Vector3;

use super::ControlInput;
use crate::dynamics::{
    lateral_projector, restitution_projector, roll_projector, rotation_matrix, thrust_axis,
    translational_constraint_forces, translational_pfaffian, PhysicalParams, State, GROUND_TOLERANCE,
};

/// Whether the step from `x` over `dt` crosses the ground from above.
pub fn crosses_ground(x: &State, dt: f64) -> bool {
    x.xi.z > 0.0 && x.xi.z + x.xi_dot.z * dt <= 0.0
}

/// One planning step `x_{j+1} = F(x_j, u_j)`.
pub fn transition(x: &State, u: &ControlInput, dt: f64, params: &PhysicalParams) -> State {
    if crosses_ground(x, dt) {
        contact_step(x, u, params)
    } else {
        euler_step(x, u, dt, params)
    }
}

fn contact_step(x: &State, u: &ControlInput, params: &PhysicalParams) -> State {
    let t3 = roll_projector();
    let dt_contact = -x.xi.z / x.xi_dot.z;
    let eta_d = u.attitude();
    let r = rotation_matrix(&(t3 * x.eta));
    let mut xi = x.xi + x.xi_dot * dt_contact;
    xi.z = 0.0;
    State {
        xi,
        eta: t3 * eta_d,
        xi_dot: restitution_projector(params.restitution) * r * lateral_projector() * r.transpose() * x.xi_dot,
        eta_dot: t3 * (eta_d - x.eta) / dt_contact,
    }
}

fn euler_step(x: &State, u: &ControlInput, dt: f64, params: &PhysicalParams) -> State {
    let thrust = u.thrust();
    let mut xi_ddot = thrust / params.mass * thrust_axis(&x.eta) - Vector3::new(0.0, 0.0, params.gravity);
    if x.xi.z <= GROUND_TOLERANCE {
        let lambda = translational_constraint_forces(x, thrust, params);
        // A tensile normal reaction means lift-off; no constraint force then.
        if lambda[0] <= 0.0 {
            xi_ddot -= translational_pfaffian(x.eta[0]).transpose() * lambda / params.mass;
        }
    }
    let eta_d = u.attitude();
    let mut xi = x.xi + x.xi_dot * dt;
    let mut xi_dot = x.xi_dot + xi_ddot * dt;
    if xi.z < 0.0 {
        // Only reachable when starting on the ground with a downward velocity.
        xi.z = 0.0;
        xi_dot.z = xi_dot.z.max(0.0);
    }
    State {
        xi,
        eta: eta_d,
        xi_dot,
        eta_dot: (eta_d - x.eta) / dt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const DT: f64 = 0.02;

    #[test]
    fn free_fall_euler_step() {
        let p = PhysicalParams::default();
        let x = State::at_rest(Vector3::new(0.0, 0.0, 1.0));
        let next = transition(&x, &ControlInput::zero(), DT, &p);
        assert_abs_diff_eq!(next.xi_dot.z, -0.1962, epsilon = 1e-12);
        assert_eq!(next.xi, x.xi);
    }

    #[test]
    fn contact_branch_bounces() {
        let p = PhysicalParams::default();
        let mut x = State::at_rest(Vector3::new(0.0, 0.0, 0.01));
        x.xi_dot.z = -1.0;
        assert!(crosses_ground(&x, DT));
        let next = transition(&x, &ControlInput::zero(), DT, &p);
        assert_eq!(next.xi.z, 0.0);
        assert_abs_diff_eq!(next.xi_dot.z, 0.1, epsilon = 1e-12);
        // Δt̄ = 0.01 s, nothing to rotate.
        assert_eq!(next.eta_dot, Vector3::zeros());
    }

    #[test]
    fn contact_rates_use_contact_time() {
        let p = PhysicalParams::default();
        let mut x = State::at_rest(Vector3::new(0.0, 0.0, 0.01));
        x.xi_dot.z = -1.0;
        let u = ControlInput::new(0.0, 0.0, 0.02, 0.5);
        let next = transition(&x, &u, DT, &p);
        assert_abs_diff_eq!(next.eta_dot, Vector3::new(0.0, 2.0, 0.0), epsilon = 1e-12);
        assert_eq!(next.eta, Vector3::new(0.0, 0.02, 0.0));
    }

    #[test]
    fn hover_on_ground_is_stationary() {
        let p = PhysicalParams::default();
        let x = State::default();
        let u = ControlInput::new(p.weight(), 0.0, 0.0, 0.0);
        let next = transition(&x, &u, DT, &p);
        assert_eq!(next, x);
    }

    #[test]
    fn resting_on_ground_without_thrust_stays_put() {
        let p = PhysicalParams::default();
        let x = State::default();
        let next = transition(&x, &ControlInput::zero(), DT, &p);
        assert_eq!(next, x);
    }

    #[test]
    fn ground_drive_has_no_lateral_slip() {
        let p = PhysicalParams::default();
        let mut x = State::default();
        x.eta = Vector3::new(0.4, 0.0, 0.0);
        let u = ControlInput::new(5.0, 0.4, 0.3, 0.0);
        let x1 = transition(&x, &u, DT, &p);
        let x2 = transition(&x1, &u, DT, &p);
        let lateral = Vector3::new(-0.4f64.sin(), 0.4f64.cos(), 0.0);
        assert_abs_diff_eq!(x2.xi_dot.dot(&lateral), 0.0, epsilon = 1e-12);
        assert!(x2.xi_dot.norm() > 0.0);
        assert_eq!(x2.xi.z, 0.0);
    }

    #[test]
    fn strong_thrust_lifts_off() {
        let p = PhysicalParams::default();
        let x = State::default();
        let u = ControlInput::new(2.0 * p.weight(), 0.0, 0.0, 0.0);
        let next = transition(&x, &u, DT, &p);
        assert_abs_diff_eq!(next.xi_dot.z, p.gravity * DT, epsilon = 1e-12);
    }
}
