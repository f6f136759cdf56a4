//! Obstacle geometry and the reference trajectory.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::PhysicalParams;
use crate::error::{Error, Result};

const AXIS_NORM_TOL: f64 = 1e-9;

/// Infinite cylinder given by a point on its axis, the axis direction and a radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderObstacle {
    pub point: Vector3<f64>,
    pub axis: Vector3<f64>,
    pub radius: f64,
}

impl CylinderObstacle {
    pub fn new(point: Vector3<f64>, axis: Vector3<f64>, radius: f64) -> Result<Self> {
        let c = Self { point, axis, radius };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.axis.norm() - 1.0).abs() > AXIS_NORM_TOL {
            return Err(Error::config(format!(
                "obstacle axis must be a unit vector (norm {})",
                self.axis.norm()
            )));
        }
        if !(self.radius > 0.0) {
            return Err(Error::config(format!("obstacle radius must be > 0 (got {})", self.radius)));
        }
        Ok(())
    }

    /// Distance from `x` to the cylinder axis.
    pub fn axis_distance(&self, x: &Vector3<f64>) -> f64 {
        let rel = x - self.point;
        (rel - self.axis * rel.dot(&self.axis)).norm()
    }
}

/// Trapezoidal speed profile parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedProfile {
    /// Acceleration and deceleration [m/s²].
    pub slope: f64,
    /// Plateau speed [m/s].
    pub cruise_speed: f64,
}

impl Default for SpeedProfile {
    fn default() -> Self {
        Self {
            slope: 0.5,
            cruise_speed: 0.5,
        }
    }
}

/// On-disk scenario layout. The inflation radius is not stored; it follows
/// from the airframe geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub goal: Vector3<f64>,
    #[serde(default)]
    pub start: Vector3<f64>,
    #[serde(default)]
    pub obstacles: Vec<CylinderObstacle>,
    #[serde(default)]
    pub profile: SpeedProfile,
}

impl ScenarioDoc {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })
    }
}

/// A navigation task: start, goal, obstacles and reference profile.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub obstacles: Vec<CylinderObstacle>,
    pub start: Vector3<f64>,
    pub goal: Vector3<f64>,
    /// Offset added to every obstacle radius for collision checks [m].
    pub inflation: f64,
    pub profile: SpeedProfile,
    timing: ProfileTiming,
}

/// Reference position and velocity at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferencePoint {
    pub xi_d: Vector3<f64>,
    pub xi_dot_d: Vector3<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct ProfileTiming {
    length: f64,
    direction: Vector3<f64>,
    peak_speed: f64,
    ramp_time: f64,
    cruise_time: f64,
}

impl ProfileTiming {
    fn new(start: &Vector3<f64>, goal: &Vector3<f64>, profile: &SpeedProfile) -> Self {
        let delta = goal - start;
        let length = delta.norm();
        let direction = if length > 0.0 { delta / length } else { Vector3::zeros() };
        let (a, v) = (profile.slope, profile.cruise_speed);
        let (peak_speed, cruise_time) = if length >= v * v / a {
            (v, (length - v * v / a) / v)
        } else {
            ((a * length).sqrt(), 0.0)
        };
        Self {
            length,
            direction,
            peak_speed,
            ramp_time: peak_speed / a,
            cruise_time,
        }
    }

    fn duration(&self) -> f64 {
        2.0 * self.ramp_time + self.cruise_time
    }

    /// Arc length and speed at time t.
    fn arc(&self, t: f64, slope: f64) -> (f64, f64) {
        let (tr, tc, vp) = (self.ramp_time, self.cruise_time, self.peak_speed);
        if t <= 0.0 {
            (0.0, 0.0)
        } else if t < tr {
            (0.5 * slope * t * t, slope * t)
        } else if t < tr + tc {
            (0.5 * vp * tr + vp * (t - tr), vp)
        } else if t < 2.0 * tr + tc {
            let left = 2.0 * tr + tc - t;
            (self.length - 0.5 * slope * left * left, slope * left)
        } else {
            (self.length, 0.0)
        }
    }
}

impl Scenario {
    pub fn new(doc: ScenarioDoc, params: &PhysicalParams) -> Result<Self> {
        for o in &doc.obstacles {
            o.validate()?;
        }
        if !(doc.profile.slope > 0.0 && doc.profile.cruise_speed > 0.0) {
            return Err(Error::config("profile slope and cruise_speed must be > 0"));
        }
        let timing = ProfileTiming::new(&doc.start, &doc.goal, &doc.profile);
        Ok(Self {
            obstacles: doc.obstacles,
            start: doc.start,
            goal: doc.goal,
            inflation: params.body_radius(),
            profile: doc.profile,
            timing,
        })
    }

    pub fn to_doc(&self) -> ScenarioDoc {
        ScenarioDoc {
            goal: self.goal,
            start: self.start,
            obstacles: self.obstacles.clone(),
            profile: self.profile,
        }
    }

    /// Total duration of the reference profile [s].
    pub fn profile_duration(&self) -> f64 {
        self.timing.duration()
    }

    /// Whether `xi` lies inside (or on) any inflated obstacle.
    pub fn in_collision(&self, xi: &Vector3<f64>) -> bool {
        self.obstacles
            .iter()
            .any(|o| o.axis_distance(xi) <= o.radius + self.inflation)
    }

    /// 0/1 collision indicator.
    pub fn collision_indicator(&self, xi: &Vector3<f64>) -> u8 {
        u8::from(self.in_collision(xi))
    }

    /// Straight-line reference from start to goal with a trapezoidal speed profile.
    pub fn reference_at(&self, t: f64) -> ReferencePoint {
        let (s, v) = self.timing.arc(t, self.profile.slope);
        if t >= self.timing.duration() {
            return ReferencePoint {
                xi_d: self.goal,
                xi_dot_d: Vector3::zeros(),
            };
        }
        ReferencePoint {
            xi_d: self.start + self.timing.direction * s,
            xi_dot_d: self.timing.direction * v,
        }
    }
}

/// The obstacle course used for the drive-and-fly experiment.
pub fn default_scenario_doc() -> ScenarioDoc {
    let radius = 0.05;
    ScenarioDoc {
        goal: Vector3::new(3.0, 0.5, 0.0),
        start: Vector3::zeros(),
        obstacles: vec![
            CylinderObstacle {
                point: Vector3::new(2.0, 0.0, 0.14),
                axis: Vector3::y(),
                radius,
            },
            CylinderObstacle {
                point: Vector3::new(0.6, 0.15, 0.0),
                axis: Vector3::z(),
                radius,
            },
            CylinderObstacle {
                point: Vector3::new(1.6, 0.05, 0.0),
                axis: Vector3::z(),
                radius,
            },
        ],
        profile: SpeedProfile::default(),
    }
}

pub fn default_scenario(params: &PhysicalParams) -> Scenario {
    Scenario::new(default_scenario_doc(), params).expect("built-in scenario is valid")
}
