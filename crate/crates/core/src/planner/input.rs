use std::ops::Index;

use nalgebra::{Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::dynamics::Mode;
use crate::error::{Error, Result};

/// Planner output `[f, ψ_d, θ_d, φ_d]`: total thrust and reference attitude.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlInput(pub Vector4<f64>);

impl ControlInput {
    pub fn new(thrust: f64, psi_d: f64, theta_d: f64, phi_d: f64) -> Self {
        Self(Vector4::new(thrust, psi_d, theta_d, phi_d))
    }

    pub fn zero() -> Self {
        Self(Vector4::zeros())
    }

    pub fn thrust(&self) -> f64 {
        self.0[0]
    }

    pub fn psi_d(&self) -> f64 {
        self.0[1]
    }

    pub fn theta_d(&self) -> f64 {
        self.0[2]
    }

    pub fn phi_d(&self) -> f64 {
        self.0[3]
    }

    /// Reference Euler angles (ψ_d, θ_d, φ_d).
    pub fn attitude(&self) -> Vector3<f64> {
        Vector3::new(self.0[1], self.0[2], self.0[3])
    }
}

/// Box limits applied by the input projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputLimits {
    pub max_thrust: f64,
    pub max_angle: f64,
}

/// Mode-dependent input space.
///
/// Near or on the ground the roll slot is locked so that both wheels touch
/// down together; in flight the yaw slot is locked and roll is free. Thrust
/// is clamped to `[0, max_thrust]` and angles to `±max_angle`.
pub fn project_input(raw: &Vector4<f64>, mode: Mode, limits: &InputLimits) -> ControlInput {
    let clamp_angle = |a: f64| a.clamp(-limits.max_angle, limits.max_angle);
    let thrust = raw[0].clamp(0.0, limits.max_thrust);
    let (psi, phi) = if mode.is_ground() {
        (clamp_angle(raw[1]), 0.0)
    } else {
        (0.0, clamp_angle(raw[3]))
    };
    ControlInput::new(thrust, psi, clamp_angle(raw[2]), phi)
}

/// Fixed-length sequence of inputs over the planning horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSequence(Vec<ControlInput>);

impl InputSequence {
    pub fn new(inputs: Vec<ControlInput>) -> Self {
        Self(inputs)
    }

    pub fn constant(u: ControlInput, horizon: usize) -> Self {
        Self(vec![u; horizon])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ControlInput> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[ControlInput] {
        &self.0
    }

    pub fn first(&self) -> Option<&ControlInput> {
        self.0.first()
    }

    /// Drop the first input and repeat the last one.
    pub fn shifted(&self) -> Self {
        let mut v = self.0.clone();
        if let Some(last) = v.last().copied() {
            v.remove(0);
            v.push(last);
        }
        Self(v)
    }

    pub(crate) fn expect_len(&self, expected: usize) -> Result<()> {
        if self.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for InputSequence {
    type Output = ControlInput;

    fn index(&self, j: usize) -> &ControlInput {
        &self.0[j]
    }
}

impl FromIterator<ControlInput> for InputSequence {
    fn from_iter<I: IntoIterator<Item = ControlInput>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}
