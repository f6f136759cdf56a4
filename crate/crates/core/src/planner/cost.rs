use nalgebra::{Matrix3, Matrix4, Vector4};

use super::ControlInput;
use crate::dynamics::State;
use crate::environment::{ReferencePoint, Scenario};

/// Quadratic tracking weights and the collision penalty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostWeights {
    pub w_xi: Matrix3<f64>,
    pub w_xi_dot: Matrix3<f64>,
    pub w_xi_term: Matrix3<f64>,
    pub w_xi_dot_term: Matrix3<f64>,
    pub w_u: Matrix4<f64>,
    pub w_obs: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        let diag3 = |a: f64, b: f64, c: f64| Matrix3::from_diagonal(&nalgebra::Vector3::new(a, b, c)) * 1e4;
        Self {
            w_xi: diag3(0.9, 1.2, 0.3),
            w_xi_dot: diag3(0.9, 1.2, 0.15),
            w_xi_term: diag3(0.75, 1.0, 0.275),
            w_xi_dot_term: diag3(0.25, 0.25, 0.125),
            w_u: Matrix4::from_diagonal(&Vector4::new(3.2, 1.6, 1.6, 1.6)),
            w_obs: 1e6,
        }
    }
}

fn quad3(w: &Matrix3<f64>, e: &nalgebra::Vector3<f64>) -> f64 {
    e.dot(&(w * e))
}

/// Stage cost `‖ξ_e‖²_Wξ + ‖ξ̇_e‖²_Wξ̇ + ‖u‖²_Wu + W_obs·𝟙_obs`.
pub fn running_cost(
    x: &State,
    u: &ControlInput,
    reference: &ReferencePoint,
    scenario: &Scenario,
    weights: &CostWeights,
) -> f64 {
    let pos = x.xi - reference.xi_d;
    let vel = x.xi_dot - reference.xi_dot_d;
    let collision = if scenario.in_collision(&x.xi) { weights.w_obs } else { 0.0 };
    quad3(&weights.w_xi, &pos) + quad3(&weights.w_xi_dot, &vel) + u.0.dot(&(weights.w_u * u.0)) + collision
}

pub fn terminal_cost(x: &State, reference: &ReferencePoint, weights: &CostWeights) -> f64 {
    let pos = x.xi - reference.xi_d;
    let vel = x.xi_dot - reference.xi_dot_d;
    quad3(&weights.w_xi_term, &pos) + quad3(&weights.w_xi_dot_term, &vel)
}

/// Control-effort term `(λ/2)·uᵀΣ⁻¹u` with a diagonal Σ given by its inverse.
pub fn input_penalty(u: &ControlInput, temperature: f64, inv_variance: &Vector4<f64>) -> f64 {
    0.5 * temperature * u.0.component_mul(&u.0).dot(inv_variance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PhysicalParams;
    use crate::environment::default_scenario;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;

    fn origin_ref() -> ReferencePoint {
        ReferencePoint {
            xi_d: Vector3::zeros(),
            xi_dot_d: Vector3::zeros(),
        }
    }

    #[test]
    fn zero_error_costs_nothing() {
        let sc = default_scenario(&PhysicalParams::default());
        let w = CostWeights::default();
        let x = State::default();
        assert_eq!(running_cost(&x, &ControlInput::zero(), &origin_ref(), &sc, &w), 0.0);
        assert_eq!(terminal_cost(&x, &origin_ref(), &w), 0.0);
    }

    #[test]
    fn collision_adds_penalty() {
        let sc = default_scenario(&PhysicalParams::default());
        let w = CostWeights::default();
        let x = State::at_rest(Vector3::new(2.0, 0.0, 0.14));
        let reference = ReferencePoint {
            xi_d: x.xi,
            xi_dot_d: Vector3::zeros(),
        };
        assert_eq!(running_cost(&x, &ControlInput::zero(), &reference, &sc, &w), 1e6);
    }

    #[test]
    fn position_weight_along_x() {
        let sc = default_scenario(&PhysicalParams::default());
        let w = CostWeights::default();
        let x = State::at_rest(Vector3::new(-1.0, 0.0, 0.0));
        assert_abs_diff_eq!(running_cost(&x, &ControlInput::zero(), &origin_ref(), &sc, &w), 0.9e4, epsilon = 1e-9);
    }

    #[test]
    fn input_penalty_scales_with_inverse_variance() {
        let u = ControlInput::new(3.0, 0.1, 0.0, 0.0);
        let inv = Vector4::new(1.0 / 2.25, 1.0 / 0.03, 1.0 / 0.03, 1.0 / 0.03);
        assert_abs_diff_eq!(input_penalty(&u, 10.0, &inv), 5.0 * (9.0 / 2.25 + 0.01 / 0.03), epsilon = 1e-12);
    }
}
