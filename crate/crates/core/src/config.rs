//! JSON run configuration.
//!
//! Every section is optional and falls back to the defaults of the
//! drive-and-fly obstacle course. Matrices are written either as a diagonal
//! `[a, b, c]` or as full rows `[[..], [..], [..]]`. Units are SI throughout;
//! `configs/units.json` lists them per key.

use std::path::{Path, PathBuf};

use nalgebra::{SMatrix, Vector4};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::controllers::{AttitudeGains, AuxGains};
use crate::dynamics::{switch_altitude, ModeParams, PhysicalParams};
use crate::environment::{default_scenario_doc, Scenario, ScenarioDoc};
use crate::error::{Error, Result};
use crate::planner::{CostWeights, PlannerConfig};
use crate::simulator::{RunSetup, SimConfig};

/// Flight threshold α·ξ_z,sw used when the `mode` section gives neither value [m].
pub const DEFAULT_SWITCH_THRESHOLD: f64 = 0.1261;

pub const DEFAULT_OUTPUT_DIR: &str = "out";

/// A square matrix as a diagonal or as explicit rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Diagonal(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    /// Diagonal form when every off-diagonal entry is zero, rows otherwise.
    pub fn from_matrix<const N: usize>(m: &SMatrix<f64, N, N>) -> Self {
        let diagonal = (0..N).all(|i| (0..N).all(|j| i == j || m[(i, j)] == 0.0));
        if diagonal {
            MatrixSpec::Diagonal((0..N).map(|i| m[(i, i)]).collect())
        } else {
            MatrixSpec::Rows((0..N).map(|i| (0..N).map(|j| m[(i, j)]).collect()).collect())
        }
    }

    pub fn to_matrix<const N: usize>(&self, name: &str) -> Result<SMatrix<f64, N, N>> {
        let m = match self {
            MatrixSpec::Diagonal(d) => {
                if d.len() != N {
                    return Err(Error::config(format!("{name}: expected {N} diagonal entries, got {}", d.len())));
                }
                SMatrix::<f64, N, N>::from_fn(|i, j| if i == j { d[i] } else { 0.0 })
            }
            MatrixSpec::Rows(rows) => {
                if rows.len() != N || rows.iter().any(|r| r.len() != N) {
                    return Err(Error::config(format!("{name}: expected {N}×{N} rows")));
                }
                SMatrix::<f64, N, N>::from_fn(|i, j| rows[i][j])
            }
        };
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!("{name}: entries must be finite")));
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsSection {
    pub w_xi: MatrixSpec,
    pub w_xi_dot: MatrixSpec,
    pub w_xi_term: MatrixSpec,
    pub w_xi_dot_term: MatrixSpec,
    pub w_u: MatrixSpec,
    pub w_obs: f64,
}

impl From<&CostWeights> for WeightsSection {
    fn from(w: &CostWeights) -> Self {
        Self {
            w_xi: MatrixSpec::from_matrix(&w.w_xi),
            w_xi_dot: MatrixSpec::from_matrix(&w.w_xi_dot),
            w_xi_term: MatrixSpec::from_matrix(&w.w_xi_term),
            w_xi_dot_term: MatrixSpec::from_matrix(&w.w_xi_dot_term),
            w_u: MatrixSpec::from_matrix(&w.w_u),
            w_obs: w.w_obs,
        }
    }
}

impl Default for WeightsSection {
    fn default() -> Self {
        Self::from(&CostWeights::default())
    }
}

impl WeightsSection {
    fn to_weights(&self) -> Result<CostWeights> {
        Ok(CostWeights {
            w_xi: self.w_xi.to_matrix("planner.weights.w_xi")?,
            w_xi_dot: self.w_xi_dot.to_matrix("planner.weights.w_xi_dot")?,
            w_xi_term: self.w_xi_term.to_matrix("planner.weights.w_xi_term")?,
            w_xi_dot_term: self.w_xi_dot_term.to_matrix("planner.weights.w_xi_dot_term")?,
            w_u: self.w_u.to_matrix("planner.weights.w_u")?,
            w_obs: self.w_obs,
        })
    }
}

/// Planner settings. The random seed is taken from `sim.seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    pub samples: usize,
    pub aux_samples: usize,
    pub horizon: usize,
    pub temperature: f64,
    pub noise_variance: Vector4<f64>,
    pub dt: f64,
    pub max_thrust_factor: f64,
    pub max_angle: f64,
    pub shift_warm_start: bool,
    pub aux_lateral_to_roll: bool,
    pub weights: WeightsSection,
}

impl From<&PlannerConfig> for PlannerSection {
    fn from(c: &PlannerConfig) -> Self {
        Self {
            samples: c.samples,
            aux_samples: c.aux_samples,
            horizon: c.horizon,
            temperature: c.temperature,
            noise_variance: c.noise_variance,
            dt: c.dt,
            max_thrust_factor: c.max_thrust_factor,
            max_angle: c.max_angle,
            shift_warm_start: c.shift_warm_start,
            aux_lateral_to_roll: c.aux_lateral_to_roll,
            weights: WeightsSection::from(&c.weights),
        }
    }
}

impl Default for PlannerSection {
    fn default() -> Self {
        Self::from(&PlannerConfig::default())
    }
}

impl PlannerSection {
    fn to_config(&self, seed: u64) -> Result<PlannerConfig> {
        let config = PlannerConfig {
            samples: self.samples,
            aux_samples: self.aux_samples,
            horizon: self.horizon,
            temperature: self.temperature,
            noise_variance: self.noise_variance,
            dt: self.dt,
            weights: self.weights.to_weights()?,
            seed,
            max_thrust_factor: self.max_thrust_factor,
            max_angle: self.max_angle,
            shift_warm_start: self.shift_warm_start,
            aux_lateral_to_roll: self.aux_lateral_to_roll,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainsSection {
    pub k_xi: MatrixSpec,
    pub k_xi_dot: MatrixSpec,
    pub k_eta: MatrixSpec,
    pub k_eta_dot: MatrixSpec,
}

impl Default for GainsSection {
    fn default() -> Self {
        let aux = AuxGains::default();
        let att = AttitudeGains::default();
        Self {
            k_xi: MatrixSpec::from_matrix(&aux.k_xi),
            k_xi_dot: MatrixSpec::from_matrix(&aux.k_xi_dot),
            k_eta: MatrixSpec::from_matrix(&att.k_eta),
            k_eta_dot: MatrixSpec::from_matrix(&att.k_eta_dot),
        }
    }
}

/// Mode selector threshold, given either as α or as α·ξ_z,sw directly.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_threshold: Option<f64>,
}

impl ModeSection {
    fn to_params(&self, params: &PhysicalParams) -> Result<ModeParams> {
        let alpha = match (self.alpha, self.switch_threshold) {
            (Some(_), Some(_)) => return Err(Error::config("mode: give either alpha or switch_threshold, not both")),
            (Some(alpha), None) => alpha,
            (None, threshold) => {
                let threshold = threshold.unwrap_or(DEFAULT_SWITCH_THRESHOLD);
                threshold / switch_altitude(params.wheel_diameter, params.axle_length)
            }
        };
        ModeParams::new(params, alpha)
    }
}

/// The configuration file as written on disk.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub physical: PhysicalParams,
    /// Inline scenario, `{"path": "..."}` (relative to the config file), or
    /// absent for the built-in obstacle course.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Value>,
    pub planner: PlannerSection,
    pub sim: SimConfig,
    pub gains: GainsSection,
    pub mode: ModeSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// A validated configuration ready to run.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub setup: RunSetup,
    pub output_dir: PathBuf,
    /// Fully explicit form of the configuration; resolving it again yields
    /// the same value.
    pub canonical: RunConfig,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text, path)
    }

    /// Load and resolve; scenario paths are taken relative to the file.
    pub fn load_resolved(path: &Path) -> Result<ResolvedConfig> {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::load(path)?.resolve(base)
    }

    fn scenario_doc(&self, base_dir: &Path) -> Result<ScenarioDoc> {
        let Some(value) = &self.scenario else {
            return Ok(default_scenario_doc());
        };
        if let Some(obj) = value.as_object() {
            if obj.contains_key("path") {
                if obj.len() != 1 {
                    return Err(Error::config("scenario: a file reference takes only the \"path\" key"));
                }
                let rel = obj["path"]
                    .as_str()
                    .ok_or_else(|| Error::config("scenario.path must be a string"))?;
                return ScenarioDoc::load(&base_dir.join(rel));
            }
        }
        serde_json::from_value(value.clone()).map_err(|e| Error::config(format!("scenario: {e}")))
    }

    /// Validate every section and assemble a run setup.
    pub fn resolve(&self, base_dir: &Path) -> Result<ResolvedConfig> {
        let params = self.physical;
        params.validate()?;
        self.sim.validate()?;
        let scenario = Scenario::new(self.scenario_doc(base_dir)?, &params)?;
        let planner = self.planner.to_config(self.sim.seed)?;
        if let Some(k_aux) = self.sim.aux_samples_override {
            if k_aux > planner.samples {
                return Err(Error::config("sim.aux_samples_override must not exceed K"));
            }
        }
        let mode_params = self.mode.to_params(&params)?;
        let aux_gains = AuxGains {
            k_xi: self.gains.k_xi.to_matrix("gains.k_xi")?,
            k_xi_dot: self.gains.k_xi_dot.to_matrix("gains.k_xi_dot")?,
        };
        let attitude_gains = AttitudeGains {
            k_eta: self.gains.k_eta.to_matrix("gains.k_eta")?,
            k_eta_dot: self.gains.k_eta_dot.to_matrix("gains.k_eta_dot")?,
        };
        let output_dir = self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));

        let canonical = RunConfig {
            physical: params,
            scenario: Some(serde_json::to_value(scenario.to_doc()).expect("scenario serializes")),
            planner: PlannerSection::from(&planner),
            sim: self.sim.clone(),
            gains: GainsSection {
                k_xi: MatrixSpec::from_matrix(&aux_gains.k_xi),
                k_xi_dot: MatrixSpec::from_matrix(&aux_gains.k_xi_dot),
                k_eta: MatrixSpec::from_matrix(&attitude_gains.k_eta),
                k_eta_dot: MatrixSpec::from_matrix(&attitude_gains.k_eta_dot),
            },
            mode: ModeSection {
                alpha: None,
                switch_threshold: Some(self.mode.switch_threshold.unwrap_or_else(|| mode_params.threshold())),
            },
            output_dir: Some(output_dir.clone()),
        };
        Ok(ResolvedConfig {
            setup: RunSetup {
                scenario,
                sim: self.sim.clone(),
                planner,
                params,
                mode_params,
                aux_gains,
                attitude_gains,
            },
            output_dir,
            canonical,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}
