//! Feedback laws: the gravity-compensating position controller that seeds part
//! of the MPPI samples, and the attitude-tracking torque law.

use nalgebra::{Matrix3, Vector3};

use crate::dynamics::{coriolis_matrix, euler_rate_matrix, psi_matrix, PhysicalParams, State};
use crate::environment::ReferencePoint;
use crate::error::Result;
use crate::planner::ControlInput;

/// PD gains of the auxiliary position controller.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxGains {
    pub k_xi: Matrix3<f64>,
    pub k_xi_dot: Matrix3<f64>,
}

impl Default for AuxGains {
    fn default() -> Self {
        Self {
            k_xi: Matrix3::identity(),
            k_xi_dot: Matrix3::identity(),
        }
    }
}

/// PD gains of the attitude law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeGains {
    pub k_eta: Matrix3<f64>,
    pub k_eta_dot: Matrix3<f64>,
}

impl Default for AttitudeGains {
    fn default() -> Self {
        Self {
            k_eta: Matrix3::from_diagonal_element(20.0),
            k_eta_dot: Matrix3::from_diagonal_element(10.0),
        }
    }
}

/// Normal-drone position law with gravity compensation.
///
/// Returns `[f, ·, θ_d, 0]` where the second slot carries the arcsine
/// lateral-tilt term. Mode projection is left to the caller.
pub fn auxiliary_input(
    state: &State,
    reference: &ReferencePoint,
    gains: &AuxGains,
    params: &PhysicalParams,
) -> ControlInput {
    let g = params.gravity;
    let mut mu = -gains.k_xi * (state.xi - reference.xi_d) - gains.k_xi_dot * (state.xi_dot - reference.xi_dot_d);
    // Keep the demanded thrust pointing upward.
    if mu.z + g <= 0.1 * g {
        mu.z = 0.1 * g - g;
    }
    let lift = mu.z + g;
    let norm = (mu.x * mu.x + mu.y * mu.y + lift * lift).sqrt();
    ControlInput::new(
        params.mass * norm,
        (-mu.y / norm).asin(),
        (mu.x / lift).atan(),
        0.0,
    )
}

/// Attitude tracking torque `τ = JΨ(−K_η e_η − K_η̇ e_η̇) + Ψ⁻¹Cη̇`.
pub fn attitude_torque(
    eta: &Vector3<f64>,
    eta_dot: &Vector3<f64>,
    eta_d: &Vector3<f64>,
    eta_dot_d: &Vector3<f64>,
    gains: &AttitudeGains,
    params: &PhysicalParams,
) -> Result<Vector3<f64>> {
    let psi = psi_matrix(eta)?;
    let phi = euler_rate_matrix(eta)?;
    let c = coriolis_matrix(eta, eta_dot, &params.inertia)?;
    let e = eta - eta_d;
    let e_dot = eta_dot - eta_dot_d;
    let feedback = -gains.k_eta * e - gains.k_eta_dot * e_dot;
    Ok(params.inertia_matrix() * psi * feedback + phi * c * eta_dot)
}
