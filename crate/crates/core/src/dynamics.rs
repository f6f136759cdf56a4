//! Rigid-body model of the two-wheeled drone.
//!
//! Attitude is parameterized by ZYX Euler angles `eta = (ψ yaw, θ pitch, φ roll)`.
//! The body thrust axis is `R(eta)·e_z`. On the ground (`Mode::OGround`) three
//! constraints act: constant CoG height, no lateral skid of the wheels, and
//! zero roll. They enter the Euler-Lagrange equations through Lagrange
//! multipliers (`ConstraintForces`); a touchdown is handled by an impulsive map
//! on the velocity.
//!
//! The rotation and Euler-rate matrices follow the textbook ZYX convention, so
//! that `RᵀR = I` and `Φ·Ψ = I` hold identically.

use nalgebra::{Matrix2x3, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Altitude below which the drone is considered to be resting on the ground [m].
pub const GROUND_TOLERANCE: f64 = 1e-6;

/// Below this |cos θ| the Euler-rate map is treated as singular.
pub const SINGULAR_COS_PITCH: f64 = 1e-6;

const LAMBDA3_DENOM_EPS: f64 = 1e-12;

/// Full rigid-body state in the inertial frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Position [m].
    pub xi: Vector3<f64>,
    /// Euler angles (ψ, θ, φ) [rad].
    pub eta: Vector3<f64>,
    /// Inertial velocity [m/s].
    pub xi_dot: Vector3<f64>,
    /// Euler-angle rates [rad/s].
    pub eta_dot: Vector3<f64>,
}

impl Default for State {
    fn default() -> Self {
        Self::at_rest(Vector3::zeros())
    }
}

impl State {
    pub fn at_rest(xi: Vector3<f64>) -> Self {
        Self {
            xi,
            eta: Vector3::zeros(),
            xi_dot: Vector3::zeros(),
            eta_dot: Vector3::zeros(),
        }
    }

    /// Body-frame linear velocity `v = Rᵀ·ξ̇`.
    pub fn body_velocity(&self) -> Vector3<f64> {
        rotation_matrix(&self.eta).transpose() * self.xi_dot
    }

    /// Body angular velocity `Ω = Ψ(η)·η̇`.
    pub fn body_angular_velocity(&self) -> Result<Vector3<f64>> {
        Ok(psi_matrix(&self.eta)? * self.eta_dot)
    }

    pub fn is_finite(&self) -> bool {
        self.xi.iter()
            .chain(self.eta.iter())
            .chain(self.xi_dot.iter())
            .chain(self.eta_dot.iter())
            .all(|v| v.is_finite())
    }
}

/// Airframe and wheel parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Mass [kg].
    pub mass: f64,
    /// Principal inertias (J_x, J_y, J_z) [kg·m²].
    pub inertia: Vector3<f64>,
    /// Wheel diameter [m].
    pub wheel_diameter: f64,
    /// Axle length [m].
    pub axle_length: f64,
    /// Ground restitution coefficient.
    pub restitution: f64,
    /// Gravitational acceleration [m/s²].
    pub gravity: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            mass: 0.938,
            inertia: Vector3::new(0.00933, 0.00285, 0.01130),
            wheel_diameter: 0.28,
            axle_length: 0.35,
            restitution: 0.1,
            gravity: 9.81,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("inertia.x", self.inertia.x),
            ("inertia.y", self.inertia.y),
            ("inertia.z", self.inertia.z),
            ("wheel_diameter", self.wheel_diameter),
            ("axle_length", self.axle_length),
            ("gravity", self.gravity),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(format!("{name} must be > 0 (got {value})")));
            }
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(Error::config(format!(
                "restitution must lie in [0, 1] (got {})",
                self.restitution
            )));
        }
        Ok(())
    }

    /// Weight `m·g` [N].
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Radius of the disk swept by the airframe, `√(d² + l²)/2`.
    pub fn body_radius(&self) -> f64 {
        self.wheel_diameter.hypot(self.axle_length) / 2.0
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&self.inertia)
    }
}

/// Locomotion regime, selected from altitude alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Both wheels on the ground.
    #[serde(rename = "O-Ground")]
    OGround,
    /// Airborne but low enough that a tilted landing could touch one wheel.
    #[serde(rename = "N-Ground")]
    NGround,
    #[serde(rename = "Flight")]
    Flight,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::OGround, Mode::NGround, Mode::Flight];

    pub fn is_ground(self) -> bool {
        matches!(self, Mode::OGround | Mode::NGround)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::OGround => "O-Ground",
            Mode::NGround => "N-Ground",
            Mode::Flight => "Flight",
        }
    }

    /// Stable small-integer code used in the CSV log and the C ABI.
    pub fn code(self) -> u8 {
        match self {
            Mode::OGround => 0,
            Mode::NGround => 1,
            Mode::Flight => 2,
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Altitude thresholds of the mode selector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeParams {
    /// Clearance factor α ≥ 1.
    pub alpha: f64,
    /// Geometric switch altitude ξ_z,sw [m].
    pub switch_altitude: f64,
}

impl ModeParams {
    pub fn new(params: &PhysicalParams, alpha: f64) -> Result<Self> {
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::config(format!("alpha must be >= 1 (got {alpha})")));
        }
        let switch_altitude = switch_altitude(params.wheel_diameter, params.axle_length);
        if switch_altitude <= 0.0 {
            return Err(Error::config("switch altitude must be > 0 (axle_length > 0)"));
        }
        Ok(Self {
            alpha,
            switch_altitude,
        })
    }

    /// Flight threshold α·ξ_z,sw.
    pub fn threshold(&self) -> f64 {
        self.alpha * self.switch_altitude
    }
}

/// Lagrange multipliers of the ground constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintForces {
    /// Ground normal reaction [N]; non-positive while in contact.
    pub lambda1: f64,
    /// Lateral no-skid reaction [N].
    pub lambda2: f64,
    /// Roll-lock reaction [N·m].
    pub lambda3: f64,
}

impl ConstraintForces {
    pub const ZERO: ConstraintForces = ConstraintForces {
        lambda1: 0.0,
        lambda2: 0.0,
        lambda3: 0.0,
    };

    /// A positive normal multiplier means the ground would have to pull.
    pub fn is_detaching(&self) -> bool {
        self.lambda1 > 0.0
    }

    fn translational(&self) -> Vector2<f64> {
        Vector2::new(self.lambda1, self.lambda2)
    }
}

/// Restitution projector `T1 = diag(1, 1, −e)`.
pub fn restitution_projector(restitution: f64) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -restitution))
}

/// No-skid projector `T2 = diag(1, 0, 1)` (removes body-lateral velocity).
pub fn lateral_projector() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, 0.0, 1.0))
}

/// Roll-lock projector `T3 = diag(1, 1, 0)`.
pub fn roll_projector() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0))
}

/// ZYX rotation `R = Rz(ψ)·Ry(θ)·Rx(φ)` of the body frame in the inertial frame.
pub fn rotation_matrix(eta: &Vector3<f64>) -> Matrix3<f64> {
    let (sps, cps) = eta[0].sin_cos();
    let (sth, cth) = eta[1].sin_cos();
    let (sph, cph) = eta[2].sin_cos();
    Matrix3::new(
        cth * cps,
        sph * sth * cps - cph * sps,
        cph * sth * cps + sph * sps,
        cth * sps,
        sph * sth * sps + cph * cps,
        cph * sth * sps - sph * cps,
        -sth,
        sph * cth,
        cph * cth,
    )
}

/// Thrust direction `R(η)·e_z` without assembling the full matrix.
pub fn thrust_axis(eta: &Vector3<f64>) -> Vector3<f64> {
    let (sps, cps) = eta[0].sin_cos();
    let (sth, cth) = eta[1].sin_cos();
    let (sph, cph) = eta[2].sin_cos();
    Vector3::new(
        cph * sth * cps + sph * sps,
        cph * sth * sps - sph * cps,
        cph * cth,
    )
}

fn check_pitch(eta: &Vector3<f64>) -> Result<f64> {
    let cth = eta[1].cos();
    if cth.abs() < SINGULAR_COS_PITCH {
        return Err(Error::SingularAttitude { pitch: eta[1] });
    }
    Ok(cth)
}

/// Euler-rate matrix Φ with `η̇ = Φ(η)·Ω`.
pub fn euler_rate_matrix(eta: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let cth = check_pitch(eta)?;
    let tth = eta[1].tan();
    let (sph, cph) = eta[2].sin_cos();
    Ok(Matrix3::new(
        0.0,
        sph / cth,
        cph / cth,
        0.0,
        cph,
        -sph,
        1.0,
        sph * tth,
        cph * tth,
    ))
}

/// Ψ = Φ⁻¹, mapping Euler rates to body angular velocity.
pub fn psi_matrix(eta: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let cth = check_pitch(eta)?;
    let sth = eta[1].sin();
    let (sph, cph) = eta[2].sin_cos();
    Ok(Matrix3::new(
        -sth,
        0.0,
        1.0,
        sph * cth,
        cph,
        0.0,
        cph * cth,
        -sph,
        0.0,
    ))
}

/// Time derivative of Ψ along the trajectory with rates `eta_dot`.
///
/// Ψ depends on θ and φ only, so this is `∂Ψ/∂θ·θ̇ + ∂Ψ/∂φ·φ̇`.
pub fn psi_matrix_rate(eta: &Vector3<f64>, eta_dot: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let cth = check_pitch(eta)?;
    let sth = eta[1].sin();
    let (sph, cph) = eta[2].sin_cos();
    let (dth, dph) = (eta_dot[1], eta_dot[2]);
    Ok(Matrix3::new(
        -cth * dth,
        0.0,
        0.0,
        cph * cth * dph - sph * sth * dth,
        -sph * dph,
        0.0,
        -sph * cth * dph - cph * sth * dth,
        -cph * dph,
        0.0,
    ))
}

/// Cross-product matrix: `skew(a)·b = a × b`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Generalized inertia `M = Ψᵀ J Ψ`.
pub fn mass_matrix(eta: &Vector3<f64>, inertia: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let psi = psi_matrix(eta)?;
    Ok(psi.transpose() * Matrix3::from_diagonal(inertia) * psi)
}

/// `M⁻¹ = Φ J⁻¹ Φᵀ`, which avoids a numerical inversion.
pub fn inverse_mass_matrix(eta: &Vector3<f64>, inertia: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let phi = euler_rate_matrix(eta)?;
    let j_inv = Matrix3::from_diagonal(&inertia.map(|j| 1.0 / j));
    Ok(phi * j_inv * phi.transpose())
}

/// Coriolis matrix `C = Ψᵀ J Ψ̇ + Ψᵀ sk(Ψη̇) J Ψ`.
pub fn coriolis_matrix(
    eta: &Vector3<f64>,
    eta_dot: &Vector3<f64>,
    inertia: &Vector3<f64>,
) -> Result<Matrix3<f64>> {
    let psi = psi_matrix(eta)?;
    let psi_rate = psi_matrix_rate(eta, eta_dot)?;
    let j = Matrix3::from_diagonal(inertia);
    let omega = psi * eta_dot;
    Ok(psi.transpose() * j * psi_rate + psi.transpose() * skew(&omega) * j * psi)
}

/// Lowest CoG altitude at which neither wheel can touch the ground for any roll.
///
/// The maximum of `(d/2)·cos φ + (l/2)·|sin φ| − d/2` over φ ∈ (−π/2, π/2) is
/// attained where the two sinusoids combine, giving `√((d/2)² + (l/2)²) − d/2`.
pub fn switch_altitude(wheel_diameter: f64, axle_length: f64) -> f64 {
    (wheel_diameter / 2.0).hypot(axle_length / 2.0) - wheel_diameter / 2.0
}

pub fn select_mode(altitude: f64, mode_params: &ModeParams) -> Mode {
    if altitude <= GROUND_TOLERANCE {
        Mode::OGround
    } else if altitude <= mode_params.threshold() {
        Mode::NGround
    } else {
        Mode::Flight
    }
}

/// Pfaffian matrix `A_ξ` of the height and no-skid constraints.
pub fn translational_pfaffian(yaw: f64) -> Matrix2x3<f64> {
    let (s, c) = yaw.sin_cos();
    Matrix2x3::new(0.0, 0.0, 1.0, -s, c, 0.0)
}

fn translational_pfaffian_rate(yaw: f64, yaw_rate: f64) -> Matrix2x3<f64> {
    let (s, c) = yaw.sin_cos();
    Matrix2x3::new(0.0, 0.0, 0.0, -c * yaw_rate, -s * yaw_rate, 0.0)
}

/// Net applied force `f·R·e_z − m·g·e_z`.
fn applied_force(state: &State, thrust: f64, params: &PhysicalParams) -> Vector3<f64> {
    thrust * thrust_axis(&state.eta) - Vector3::new(0.0, 0.0, params.weight())
}

/// Translational multipliers (λ1, λ2) that keep `A_ξ ξ̈ + Ȧ_ξ ξ̇ = 0`.
pub fn translational_constraint_forces(
    state: &State,
    thrust: f64,
    params: &PhysicalParams,
) -> Vector2<f64> {
    let yaw = state.eta[0];
    let a = translational_pfaffian(yaw);
    let a_dot = translational_pfaffian_rate(yaw, state.eta_dot[0]);
    params.mass * (a_dot * state.xi_dot) + a * applied_force(state, thrust, params)
}

/// Constraint multipliers for the given mode. All zero off the ground.
///
/// This is the raw multiplier set; whether the normal reaction is admissible
/// (`lambda1 <= 0`) is decided by the caller.
pub fn constraint_forces(
    state: &State,
    thrust: f64,
    torque: &Vector3<f64>,
    mode: Mode,
    params: &PhysicalParams,
) -> Result<ConstraintForces> {
    if mode != Mode::OGround {
        return Ok(ConstraintForces::ZERO);
    }
    let lam = translational_constraint_forces(state, thrust, params);
    let lambda3 = roll_constraint_force(state, torque, params)?;
    Ok(ConstraintForces {
        lambda1: lam[0],
        lambda2: lam[1],
        lambda3,
    })
}

fn roll_constraint_force(state: &State, torque: &Vector3<f64>, params: &PhysicalParams) -> Result<f64> {
    let psi = psi_matrix(&state.eta)?;
    let m_inv = inverse_mass_matrix(&state.eta, &params.inertia)?;
    let c = coriolis_matrix(&state.eta, &state.eta_dot, &params.inertia)?;
    let generalized = psi.transpose() * torque - c * state.eta_dot;
    // A_η = [0 0 1] selects the roll row/column.
    let denom = m_inv[(2, 2)];
    if denom.abs() < LAMBDA3_DENOM_EPS {
        return Ok(0.0);
    }
    Ok((m_inv.row(2) * generalized)[0] / denom)
}

/// Second derivatives of the configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Accelerations {
    pub xi_ddot: Vector3<f64>,
    pub eta_ddot: Vector3<f64>,
    /// Multipliers actually applied (zero when airborne or detaching).
    pub forces: ConstraintForces,
    /// Set when the body was nominally on the ground but `lambda1 > 0`.
    pub detached: bool,
}

/// Constrained Euler-Lagrange dynamics.
///
/// In `OGround` the multipliers enforce the ground constraints unless the
/// normal reaction would be tensile, in which case the body is released.
pub fn continuous_dynamics(
    state: &State,
    thrust: f64,
    torque: &Vector3<f64>,
    mode: Mode,
    params: &PhysicalParams,
) -> Result<Accelerations> {
    let mut forces = constraint_forces(state, thrust, torque, mode, params)?;
    let detached = forces.is_detaching();
    if detached {
        forces = ConstraintForces::ZERO;
    }

    let a_xi = translational_pfaffian(state.eta[0]);
    let xi_ddot = (applied_force(state, thrust, params)
        - a_xi.transpose() * forces.translational())
        / params.mass;

    let psi = psi_matrix(&state.eta)?;
    let m_inv = inverse_mass_matrix(&state.eta, &params.inertia)?;
    let c = coriolis_matrix(&state.eta, &state.eta_dot, &params.inertia)?;
    let mut generalized = psi.transpose() * torque - c * state.eta_dot;
    generalized[2] -= forces.lambda3;
    let eta_ddot = m_inv * generalized;

    Ok(Accelerations {
        xi_ddot,
        eta_ddot,
        forces,
        detached,
    })
}

/// Impulsive touchdown map.
///
/// Roll and roll rate are zeroed, body-lateral velocity is removed, and the
/// vertical velocity is reflected with restitution. Position is unchanged.
pub fn contact_impulse(state_minus: &State, restitution: f64) -> State {
    let t3 = roll_projector();
    let eta_plus = t3 * state_minus.eta;
    let r = rotation_matrix(&eta_plus);
    let xi_dot_plus =
        restitution_projector(restitution) * r * lateral_projector() * r.transpose() * state_minus.xi_dot;
    State {
        xi: state_minus.xi,
        eta: eta_plus,
        xi_dot: xi_dot_plus,
        eta_dot: t3 * state_minus.eta_dot,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn params() -> PhysicalParams {
        PhysicalParams::default()
    }

    #[test]
    fn rotation_zero_and_pure_yaw() {
        assert_abs_diff_eq!(rotation_matrix(&Vector3::zeros()), Matrix3::identity(), epsilon = 1e-15);
        let r = rotation_matrix(&Vector3::new(FRAC_PI_2, 0.0, 0.0));
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_abs_diff_eq!(r, expected, epsilon = 1e-15);
    }

    #[test]
    fn pitch_tilts_thrust_forward() {
        let eta = Vector3::new(0.0, FRAC_PI_6, 0.0);
        let axis = rotation_matrix(&eta) * Vector3::z();
        assert_abs_diff_eq!(axis, Vector3::new(0.5, 0.0, 0.8660254037844386), epsilon = 1e-12);
        assert_abs_diff_eq!(thrust_axis(&eta), axis, epsilon = 1e-15);
    }

    #[test]
    fn euler_rate_at_zero_is_permutation() {
        let p = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        assert_eq!(euler_rate_matrix(&Vector3::zeros()).unwrap(), p);
        assert_eq!(psi_matrix(&Vector3::zeros()).unwrap(), p);
    }

    #[test]
    fn singular_pitch_is_rejected() {
        let eta = Vector3::new(0.0, FRAC_PI_2, 0.0);
        assert!(matches!(euler_rate_matrix(&eta), Err(Error::SingularAttitude { .. })));
        assert!(psi_matrix(&eta).is_err());
        assert!(mass_matrix(&eta, &params().inertia).is_err());
    }

    #[test]
    fn mass_matrix_at_zero_permutes_inertia() {
        let m = mass_matrix(&Vector3::zeros(), &params().inertia).unwrap();
        assert_abs_diff_eq!(
            m,
            Matrix3::from_diagonal(&Vector3::new(0.01130, 0.00285, 0.00933)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn coriolis_vanishes_without_rates() {
        let eta = Vector3::new(0.3, -0.7, 1.1);
        let c = coriolis_matrix(&eta, &Vector3::zeros(), &params().inertia).unwrap();
        assert_eq!(c, Matrix3::zeros());
    }

    #[test]
    fn psi_rate_matches_central_difference() {
        let eta = Vector3::new(0.4, 0.6, -0.9);
        let eta_dot = Vector3::new(1.3, -0.8, 2.1);
        let h = 1e-6;
        let fd = (psi_matrix(&(eta + eta_dot * h)).unwrap() - psi_matrix(&(eta - eta_dot * h)).unwrap())
            / (2.0 * h);
        assert_abs_diff_eq!(psi_matrix_rate(&eta, &eta_dot).unwrap(), fd, epsilon = 1e-8);
    }

    #[test]
    fn inverse_mass_matrix_inverts() {
        let eta = Vector3::new(-0.2, 1.1, 0.5);
        let inertia = params().inertia;
        let prod = mass_matrix(&eta, &inertia).unwrap() * inverse_mass_matrix(&eta, &inertia).unwrap();
        assert_abs_diff_eq!(prod, Matrix3::identity(), epsilon = 1e-10);
    }

    #[test]
    fn switch_altitude_values() {
        assert_abs_diff_eq!(switch_altitude(0.28, 0.0), 0.0, epsilon = 1e-15);
        // √(0.14² + 0.175²) − 0.14
        assert_abs_diff_eq!(switch_altitude(0.28, 0.35), 0.0841093, epsilon = 1e-7);
        let grid = (0..=100_000)
            .map(|i| -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / 100_000.0)
            .map(|phi| 0.14 * phi.cos() + 0.175 * phi.sin().abs() - 0.14)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(switch_altitude(0.28, 0.35), grid, epsilon = 1e-6);
        let mp = ModeParams::new(&params(), 1.5).unwrap();
        assert_abs_diff_eq!(mp.threshold(), 0.126164, epsilon = 1e-6);
    }

    #[test]
    fn mode_thresholds() {
        let mp = ModeParams {
            alpha: 1.0,
            switch_altitude: 0.1261,
        };
        assert_eq!(select_mode(0.0, &mp), Mode::OGround);
        assert_eq!(select_mode(GROUND_TOLERANCE, &mp), Mode::OGround);
        assert_eq!(select_mode(0.05, &mp), Mode::NGround);
        assert_eq!(select_mode(0.1261, &mp), Mode::NGround);
        assert_eq!(select_mode(0.20, &mp), Mode::Flight);
    }

    #[test]
    fn mode_params_reject_small_alpha() {
        assert!(ModeParams::new(&params(), 0.9).is_err());
    }

    #[test]
    fn constraint_forces_off_ground_are_zero() {
        let s = State::at_rest(Vector3::new(0.0, 0.0, 1.0));
        let tau = Vector3::new(0.1, 0.2, 0.3);
        for mode in [Mode::NGround, Mode::Flight] {
            assert_eq!(constraint_forces(&s, 20.0, &tau, mode, &params()).unwrap(), ConstraintForces::ZERO);
        }
    }

    #[test]
    fn constraint_forces_at_rest_on_ground() {
        let p = params();
        let s = State::default();
        let hover = constraint_forces(&s, p.weight(), &Vector3::zeros(), Mode::OGround, &p).unwrap();
        assert_abs_diff_eq!(hover.lambda1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hover.lambda2, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hover.lambda3, 0.0, epsilon = 1e-12);
        let idle = constraint_forces(&s, 0.0, &Vector3::zeros(), Mode::OGround, &p).unwrap();
        assert_abs_diff_eq!(idle.lambda1, -9.20178, epsilon = 1e-5);
    }

    #[test]
    fn free_fall_and_hover() {
        let p = params();
        let s = State::at_rest(Vector3::new(0.0, 0.0, 1.0));
        let acc = continuous_dynamics(&s, 0.0, &Vector3::zeros(), Mode::Flight, &p).unwrap();
        assert_abs_diff_eq!(acc.xi_ddot, Vector3::new(0.0, 0.0, -9.81), epsilon = 1e-12);
        let acc = continuous_dynamics(&s, p.weight(), &Vector3::zeros(), Mode::Flight, &p).unwrap();
        assert_abs_diff_eq!(acc.xi_ddot, Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn tilted_ground_drive_accelerates_forward() {
        let p = params();
        let mut s = State::default();
        s.eta[1] = 10f64.to_radians();
        let acc = continuous_dynamics(&s, p.weight(), &Vector3::zeros(), Mode::OGround, &p).unwrap();
        assert_abs_diff_eq!(acc.xi_ddot.x, 9.81 * 10f64.to_radians().sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(acc.xi_ddot.z, 0.0, epsilon = 1e-12);
        assert!(!acc.detached);
    }

    #[test]
    fn tensile_reaction_releases_body() {
        let p = params();
        let s = State::default();
        let acc = continuous_dynamics(&s, 2.0 * p.weight(), &Vector3::zeros(), Mode::OGround, &p).unwrap();
        assert!(acc.detached);
        assert_abs_diff_eq!(acc.xi_ddot.z, 9.81, epsilon = 1e-12);
    }

    #[test]
    fn roll_is_locked_on_ground() {
        let p = params();
        let mut s = State::default();
        s.eta = Vector3::new(0.3, 0.2, 0.0);
        s.eta_dot = Vector3::new(0.5, -0.4, 0.0);
        let tau = Vector3::new(0.05, -0.02, 0.01);
        let acc = continuous_dynamics(&s, 0.0, &tau, Mode::OGround, &p).unwrap();
        assert_abs_diff_eq!(acc.eta_ddot[2], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn impulse_level_cases() {
        let mut s = State::default();
        s.xi_dot = Vector3::new(0.0, 0.0, -1.0);
        assert_abs_diff_eq!(contact_impulse(&s, 0.1).xi_dot, Vector3::new(0.0, 0.0, 0.1), epsilon = 1e-15);
        s.xi_dot = Vector3::new(0.0, 1.0, 0.0);
        assert_abs_diff_eq!(contact_impulse(&s, 0.1).xi_dot, Vector3::zeros(), epsilon = 1e-15);
        s.xi_dot = Vector3::new(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(contact_impulse(&s, 0.1).xi_dot, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn impulse_zeroes_roll_and_keeps_position() {
        let s = State {
            xi: Vector3::new(1.0, 2.0, 0.0),
            eta: Vector3::new(0.2, 0.1, 0.3),
            xi_dot: Vector3::new(0.4, 0.1, -0.7),
            eta_dot: Vector3::new(0.1, 0.2, 0.3),
        };
        let after = contact_impulse(&s, 0.1);
        assert_eq!(after.xi, s.xi);
        assert_eq!(after.eta, Vector3::new(0.2, 0.1, 0.0));
        assert_eq!(after.eta_dot, Vector3::new(0.1, 0.2, 0.0));
        let again = contact_impulse(&after, 0.1);
        assert_eq!(again.eta, after.eta);
    }
}
