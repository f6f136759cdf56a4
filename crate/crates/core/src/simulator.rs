//! Closed-loop simulation: mode selector, MPPI planner and attitude law
//! driving the full constrained rigid-body plant.

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::controllers::{attitude_torque, AttitudeGains, AuxGains};
use crate::dynamics::{
    contact_impulse, continuous_dynamics, select_mode, ConstraintForces, Mode, ModeParams, PhysicalParams,
    State, GROUND_TOLERANCE,
};
use crate::environment::Scenario;
use crate::error::{Error, Result};
use crate::planner::{aux_rollout, ControlInput, Diagnostics, Planner, PlannerConfig, PlanningProblem};

/// Pitch magnitude at which the run is aborted.
pub const PITCH_ABORT: f64 = std::f64::consts::FRAC_PI_2 - 1e-3;

/// Upward speeds after touchdown below this are treated as settled contact [m/s].
pub const BOUNCE_SUPPRESSION_SPEED: f64 = 0.02;

/// Simulation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Control period [s].
    pub control_dt: f64,
    /// Plant integration sub-steps per control period.
    pub plant_substeps: usize,
    /// Simulated time limit [s].
    pub duration: f64,
    /// Goal radius [m].
    pub goal_tolerance: f64,
    /// Speed below which the goal counts as reached [m/s].
    pub goal_speed_tolerance: f64,
    pub seed: u64,
    /// Run without the auxiliary prior (K_aux = 0).
    pub disable_aux: bool,
    /// Override the planner's K_aux.
    pub aux_samples_override: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            control_dt: 0.02,
            plant_substeps: 10,
            duration: 12.0,
            goal_tolerance: 0.1,
            goal_speed_tolerance: 0.1,
            seed: 0,
            disable_aux: false,
            aux_samples_override: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.control_dt > 0.0 && self.control_dt.is_finite()) {
            return Err(Error::config("control_dt must be > 0"));
        }
        if self.plant_substeps < 1 {
            return Err(Error::config("plant_substeps must be ≥ 1"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config("duration must be > 0"));
        }
        if !(self.goal_tolerance > 0.0) || !(self.goal_speed_tolerance > 0.0) {
            return Err(Error::config("goal tolerances must be > 0"));
        }
        Ok(())
    }

    /// K_aux actually used for a run.
    pub fn effective_aux_samples(&self, planner: &PlannerConfig) -> usize {
        if self.disable_aux {
            0
        } else {
            self.aux_samples_override.unwrap_or(planner.aux_samples)
        }
    }
}

/// Result of one plant sub-step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantStep {
    pub state: State,
    /// Multipliers applied during the sub-step.
    pub forces: ConstraintForces,
    /// A touchdown impulse was applied.
    pub touchdown: bool,
}

fn in_contact(state: &State) -> bool {
    state.xi.z <= GROUND_TOLERANCE && state.xi_dot.z <= 0.0
}

/// Remove constraint drift while rolling on the ground.
fn project_onto_ground(state: &mut State) {
    state.xi.z = 0.0;
    state.xi_dot.z = 0.0;
    let (s, c) = state.eta[0].sin_cos();
    let lateral = Vector3::new(-s, c, 0.0);
    state.xi_dot -= lateral * state.xi_dot.dot(&lateral);
    state.eta[2] = 0.0;
    state.eta_dot[2] = 0.0;
}

fn integrate(state: &State, thrust: f64, torque: &Vector3<f64>, params: &PhysicalParams, dt: f64) -> Result<(State, ConstraintForces, bool)> {
    let contact = in_contact(state);
    let mode = if contact { Mode::OGround } else { Mode::Flight };
    let acc = continuous_dynamics(state, thrust, torque, mode, params)?;
    let xi_dot = state.xi_dot + acc.xi_ddot * dt;
    let eta_dot = state.eta_dot + acc.eta_ddot * dt;
    // Trapezoidal position update: exact for piecewise-constant acceleration.
    let mut next = State {
        xi: state.xi + (state.xi_dot + xi_dot) * (0.5 * dt),
        eta: state.eta + (state.eta_dot + eta_dot) * (0.5 * dt),
        xi_dot,
        eta_dot,
    };
    let held = contact && !acc.detached;
    if held {
        project_onto_ground(&mut next);
    }
    Ok((next, acc.forces, held))
}

/// One sub-step of the full dynamics with contact handling.
///
/// Velocities take an explicit Euler step; positions and angles advance with
/// the mean of the old and new rates.
///
/// A downward ground crossing is located by linear interpolation of the
/// altitude; the touchdown impulse is applied there and the remainder of the
/// sub-step is integrated from the post-impact state.
pub fn plant_step(state: &State, thrust: f64, torque: &Vector3<f64>, params: &PhysicalParams, dt: f64) -> Result<PlantStep> {
    let (next, forces, held) = integrate(state, thrust, torque, params, dt)?;
    let result = if held || next.xi.z >= 0.0 {
        PlantStep {
            state: next,
            forces,
            touchdown: false,
        }
    } else {
        let z0 = state.xi.z.max(0.0);
        let frac = z0 / (z0 - next.xi.z);
        let lerp = |a: &Vector3<f64>, b: &Vector3<f64>| a + (b - a) * frac;
        let mut at_contact = State {
            xi: lerp(&state.xi, &next.xi),
            eta: lerp(&state.eta, &next.eta),
            xi_dot: next.xi_dot,
            eta_dot: next.eta_dot,
        };
        at_contact.xi.z = 0.0;
        let mut after = contact_impulse(&at_contact, params.restitution);
        if after.xi_dot.z < BOUNCE_SUPPRESSION_SPEED {
            after.xi_dot.z = 0.0;
        }
        let remaining = (1.0 - frac) * dt;
        let (mut rest, forces) = if remaining > 0.0 {
            let (s, f, _) = integrate(&after, thrust, torque, params, remaining)?;
            (s, f)
        } else {
            (after, ConstraintForces::ZERO)
        };
        // The remainder starts at z = 0 moving up or held; it cannot re-enter.
        rest.xi.z = rest.xi.z.max(0.0);
        PlantStep {
            state: rest,
            forces,
            touchdown: true,
        }
    };
    if result.state.eta[1].abs() >= PITCH_ABORT || !result.state.is_finite() {
        return Err(Error::SingularAttitude {
            pitch: result.state.eta[1],
        });
    }
    Ok(result)
}

/// One control-step record.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRecord {
    pub time: f64,
    pub state: State,
    pub mode: Mode,
    pub input: ControlInput,
    pub torque: Vector3<f64>,
    pub collision: bool,
    pub diagnostics: Diagnostics,
    /// Normal multiplier applied during the preceding sub-step.
    pub normal_force: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryLog {
    pub records: Vec<LogRecord>,
}

#[derive(Serialize)]
struct CsvRow {
    t: f64,
    xi_x: f64,
    xi_y: f64,
    xi_z: f64,
    psi: f64,
    theta: f64,
    phi: f64,
    xi_dot_x: f64,
    xi_dot_y: f64,
    xi_dot_z: f64,
    eta_dot_psi: f64,
    eta_dot_theta: f64,
    eta_dot_phi: f64,
    mode: &'static str,
    f: f64,
    psi_d: f64,
    theta_d: f64,
    phi_d: f64,
    tau_x: f64,
    tau_y: f64,
    tau_z: f64,
    collision: u8,
    min_cost: f64,
    ess: f64,
}

/// CSV column names, in order.
pub const CSV_HEADER: [&str; 24] = [
    "t", "xi_x", "xi_y", "xi_z", "psi", "theta", "phi", "xi_dot_x", "xi_dot_y", "xi_dot_z", "eta_dot_psi",
    "eta_dot_theta", "eta_dot_phi", "mode", "f", "psi_d", "theta_d", "phi_d", "tau_x", "tau_y", "tau_z",
    "collision", "min_cost", "ess",
];

impl TrajectoryLog {
    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            let s = &r.state;
            w.serialize(CsvRow {
                t: r.time,
                xi_x: s.xi.x,
                xi_y: s.xi.y,
                xi_z: s.xi.z,
                psi: s.eta[0],
                theta: s.eta[1],
                phi: s.eta[2],
                xi_dot_x: s.xi_dot.x,
                xi_dot_y: s.xi_dot.y,
                xi_dot_z: s.xi_dot.z,
                eta_dot_psi: s.eta_dot[0],
                eta_dot_theta: s.eta_dot[1],
                eta_dot_phi: s.eta_dot[2],
                mode: r.mode.as_str(),
                f: r.input.thrust(),
                psi_d: r.input.psi_d(),
                theta_d: r.input.theta_d(),
                phi_d: r.input.phi_d(),
                tau_x: r.torque.x,
                tau_y: r.torque.y,
                tau_z: r.torque.z,
                collision: u8::from(r.collision),
                min_cost: r.diagnostics.min_cost,
                ess: r.diagnostics.ess,
            })?;
        }
        if self.records.is_empty() {
            w.write_record(CSV_HEADER)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: std::io::Error::other(e),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeFractions {
    #[serde(rename = "O-Ground")]
    pub o_ground: f64,
    #[serde(rename = "N-Ground")]
    pub n_ground: f64,
    #[serde(rename = "Flight")]
    pub flight: f64,
}

/// Modeling choices that affect results, recorded with every summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub integrator: String,
    pub plant_substeps: usize,
    pub control_dt: f64,
    pub goal_tolerance: f64,
    pub goal_speed_tolerance: f64,
    pub aux_samples: usize,
    pub samples: usize,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub goal_reached: bool,
    pub time_to_goal: Option<f64>,
    pub collision_steps: usize,
    /// x-coordinate of the first logged collision, if any.
    pub first_collision_x: Option<f64>,
    pub max_altitude: f64,
    pub tracking_rmse: f64,
    pub final_goal_distance: f64,
    pub mode_fractions: ModeFractions,
    pub steps: usize,
    pub degenerate_steps: usize,
    /// Reason the plant was stopped early, if it was.
    pub aborted: Option<String>,
    pub metadata: RunMetadata,
}

impl RunSummary {
    /// Goal reached without touching an inflated obstacle.
    pub fn success(&self) -> bool {
        self.goal_reached && self.collision_steps == 0 && self.aborted.is_none()
    }
}

/// Everything needed for a closed-loop run.
#[derive(Clone, Debug)]
pub struct RunSetup {
    pub scenario: Scenario,
    pub sim: SimConfig,
    pub planner: PlannerConfig,
    pub params: PhysicalParams,
    pub mode_params: ModeParams,
    pub aux_gains: AuxGains,
    pub attitude_gains: AttitudeGains,
}

/// Run the closed loop until the goal is reached or time runs out.
pub fn run(setup: &RunSetup) -> Result<(TrajectoryLog, RunSummary)> {
    let sim = &setup.sim;
    sim.validate()?;
    setup.params.validate()?;
    let mut planner_cfg = setup.planner.clone();
    planner_cfg.seed = sim.seed;
    planner_cfg.aux_samples = sim.effective_aux_samples(&setup.planner);
    planner_cfg.validate()?;
    let params = &setup.params;
    let scenario = &setup.scenario;
    let mut planner = Planner::new(planner_cfg.clone())?;

    let mut x = State::at_rest(scenario.start);
    let mut log = TrajectoryLog::default();
    let mut goal_time = None;
    let mut aborted = None;
    let mut normal_force = 0.0;
    let steps = (sim.duration / sim.control_dt).round() as usize;
    let dt_sub = sim.control_dt / sim.plant_substeps as f64;

    for step in 0..=steps {
        let t = step as f64 * sim.control_dt;
        let mode = select_mode(x.xi.z, &setup.mode_params);
        let aux = (planner_cfg.aux_samples > 0).then(|| {
            let problem = PlanningProblem {
                scenario,
                config: &planner_cfg,
                params,
            };
            aux_rollout(&problem, &x, t, &setup.aux_gains, &setup.mode_params)
        });
        let solution = planner.step(scenario, params, &x, t, mode, aux.as_ref())?;
        let u = solution.input;
        let torque = attitude_torque(&x.eta, &x.eta_dot, &u.attitude(), &Vector3::zeros(), &setup.attitude_gains, params)?;
        log.records.push(LogRecord {
            time: t,
            state: x,
            mode,
            input: u,
            torque,
            collision: scenario.in_collision(&x.xi),
            diagnostics: solution.diagnostics,
            normal_force,
        });

        let at_goal = (x.xi - scenario.goal).norm() < sim.goal_tolerance && x.xi_dot.norm() < sim.goal_speed_tolerance;
        if at_goal {
            goal_time = Some(t);
            break;
        }
        if step == steps {
            break;
        }
        let mut failed = false;
        for _ in 0..sim.plant_substeps {
            match plant_step(&x, u.thrust(), &torque, params, dt_sub) {
                Ok(out) => {
                    x = out.state;
                    normal_force = out.forces.lambda1;
                }
                Err(e) => {
                    aborted = Some(e.to_string());
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            break;
        }
    }

    let summary = summarize(&log, setup, &planner_cfg, goal_time, aborted);
    Ok((log, summary))
}

fn summarize(
    log: &TrajectoryLog,
    setup: &RunSetup,
    planner_cfg: &PlannerConfig,
    goal_time: Option<f64>,
    aborted: Option<String>,
) -> RunSummary {
    let n = log.records.len().max(1) as f64;
    let count = |m: Mode| log.records.iter().filter(|r| r.mode == m).count() as f64 / n;
    let sq_err: f64 = log
        .records
        .iter()
        .map(|r| (r.state.xi - setup.scenario.reference_at(r.time).xi_d).norm_squared())
        .sum();
    let last = log.records.last();
    RunSummary {
        seed: setup.sim.seed,
        goal_reached: goal_time.is_some(),
        time_to_goal: goal_time,
        collision_steps: log.records.iter().filter(|r| r.collision).count(),
        first_collision_x: log.records.iter().find(|r| r.collision).map(|r| r.state.xi.x),
        max_altitude: log.records.iter().map(|r| r.state.xi.z).fold(0.0, f64::max),
        tracking_rmse: (sq_err / n).sqrt(),
        final_goal_distance: last.map_or(f64::NAN, |r| (r.state.xi - setup.scenario.goal).norm()),
        mode_fractions: ModeFractions {
            o_ground: count(Mode::OGround),
            n_ground: count(Mode::NGround),
            flight: count(Mode::Flight),
        },
        steps: log.records.len(),
        degenerate_steps: log.records.iter().filter(|r| r.diagnostics.degenerate).count(),
        aborted,
        metadata: RunMetadata {
            integrator: "Euler velocity / trapezoidal position, linear-interpolated touchdown".to_owned(),
            plant_substeps: setup.sim.plant_substeps,
            control_dt: setup.sim.control_dt,
            goal_tolerance: setup.sim.goal_tolerance,
            goal_speed_tolerance: setup.sim.goal_speed_tolerance,
            aux_samples: planner_cfg.aux_samples,
            samples: planner_cfg.samples,
            horizon: planner_cfg.horizon,
        },
    }
}
