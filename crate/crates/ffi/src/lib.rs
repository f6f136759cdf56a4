//! C ABI for the wheeldrone planner and simulator.
//!
//! Handles (`WdConfig`, `WdPlanner`, `WdRun`) are opaque and owned by the
//! caller, who releases them with the matching `*_free` function. Every
//! fallible call returns a `WdStatus`; on failure `wd_last_error` gives a
//! message valid until the next failing call on the same thread. Outputs are
//! written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::Vector3;
use wheeldrone::config::{ResolvedConfig, RunConfig};
use wheeldrone::controllers::attitude_torque;
use wheeldrone::dynamics::{self, Mode, ModeParams, State};
use wheeldrone::planner::{aux_rollout, Planner, PlanningProblem};
use wheeldrone::simulator::{self, RunSummary, TrajectoryLog};
use wheeldrone::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Json = 5,
    SingularAttitude = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WdMode {
    OGround = 0,
    NGround = 1,
    Flight = 2,
}

impl From<Mode> for WdMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::OGround => WdMode::OGround,
            Mode::NGround => WdMode::NGround,
            Mode::Flight => WdMode::Flight,
        }
    }
}

/// Position, ZYX Euler angles (ψ, θ, φ) and their rates, SI units.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WdState {
    pub xi: [f64; 3],
    pub eta: [f64; 3],
    pub xi_dot: [f64; 3],
    pub eta_dot: [f64; 3],
}

impl From<&State> for WdState {
    fn from(s: &State) -> Self {
        Self {
            xi: s.xi.into(),
            eta: s.eta.into(),
            xi_dot: s.xi_dot.into(),
            eta_dot: s.eta_dot.into(),
        }
    }
}

impl From<&WdState> for State {
    fn from(s: &WdState) -> Self {
        State {
            xi: Vector3::from(s.xi),
            eta: Vector3::from(s.eta),
            xi_dot: Vector3::from(s.xi_dot),
            eta_dot: Vector3::from(s.eta_dot),
        }
    }
}

/// One planner output: thrust, reference attitude and the attitude-law torque.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WdControl {
    pub thrust: f64,
    /// (ψ_d, θ_d, φ_d).
    pub eta_d: [f64; 3],
    pub torque: [f64; 3],
    pub mode: WdMode,
    pub min_cost: f64,
    pub ess: f64,
    pub degenerate: bool,
}

/// One logged control step.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WdRecord {
    pub time: f64,
    pub state: WdState,
    pub mode: WdMode,
    pub thrust: f64,
    pub eta_d: [f64; 3],
    pub torque: [f64; 3],
    pub collision: bool,
    pub min_cost: f64,
    pub ess: f64,
}

/// Run summary; absent optional values are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WdSummary {
    pub seed: u64,
    pub success: bool,
    pub goal_reached: bool,
    pub time_to_goal: f64,
    pub collision_steps: usize,
    pub first_collision_x: f64,
    pub max_altitude: f64,
    pub tracking_rmse: f64,
    pub final_goal_distance: f64,
    pub fraction_o_ground: f64,
    pub fraction_n_ground: f64,
    pub fraction_flight: f64,
    pub steps: usize,
    pub degenerate_steps: usize,
    pub aborted: bool,
}

impl From<&RunSummary> for WdSummary {
    fn from(s: &RunSummary) -> Self {
        Self {
            seed: s.seed,
            success: s.success(),
            goal_reached: s.goal_reached,
            time_to_goal: s.time_to_goal.unwrap_or(f64::NAN),
            collision_steps: s.collision_steps,
            first_collision_x: s.first_collision_x.unwrap_or(f64::NAN),
            max_altitude: s.max_altitude,
            tracking_rmse: s.tracking_rmse,
            final_goal_distance: s.final_goal_distance,
            fraction_o_ground: s.mode_fractions.o_ground,
            fraction_n_ground: s.mode_fractions.n_ground,
            fraction_flight: s.mode_fractions.flight,
            steps: s.steps,
            degenerate_steps: s.degenerate_steps,
            aborted: s.aborted.is_some(),
        }
    }
}

/// A validated run configuration.
pub struct WdConfig {
    resolved: ResolvedConfig,
}

/// A stateful planner bound to one configuration.
pub struct WdPlanner {
    resolved: ResolvedConfig,
    planner: Planner,
}

/// Trajectory and summary of a finished closed-loop run.
pub struct WdRun {
    log: TrajectoryLog,
    summary: RunSummary,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: WdStatus,
    message: String,
}

impl Failure {
    fn new(status: WdStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Self::new(WdStatus::NullPointer, format!("{name} is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::LengthMismatch { .. } => WdStatus::Config,
            Error::Io { .. } => WdStatus::Io,
            Error::Json { .. } => WdStatus::Json,
            Error::SingularAttitude { .. } => WdStatus::SingularAttitude,
        };
        Self::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WdStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic");
            WdStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(WdStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(name))
}

unsafe fn mut_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(name))
}

/// Message of the most recent failure on this thread, or null.
#[no_mangle]
pub extern "C" fn wd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn resolve_json(text: &str) -> Result<ResolvedConfig, Failure> {
    Ok(RunConfig::from_json(text, Path::new("<memory>"))?.resolve(Path::new("."))?)
}

/// Built-in defaults of the drive-and-fly experiment.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wd_config_default(out: *mut *mut WdConfig) -> WdStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = Box::into_raw(Box::new(WdConfig {
            resolved: resolve_json("{}")?,
        }));
        Ok(())
    })
}

/// Parse a configuration from a JSON string; scenario paths are relative to
/// the working directory.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wd_config_from_json(json: *const c_char, out: *mut *mut WdConfig) -> WdStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = mut_arg(out, "out")?;
        *out = Box::into_raw(Box::new(WdConfig {
            resolved: resolve_json(text)?,
        }));
        Ok(())
    })
}

/// Load a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wd_config_load(path: *const c_char, out: *mut *mut WdConfig) -> WdStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = mut_arg(out, "out")?;
        *out = Box::into_raw(Box::new(WdConfig {
            resolved: RunConfig::load_resolved(Path::new(path))?,
        }));
        Ok(())
    })
}

/// Fully resolved configuration as JSON; free with `wd_string_free`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wd_config_to_json(config: *const WdConfig, out: *mut *mut c_char) -> WdStatus {
    guard(|| {
        let config = ref_arg(config, "config")?;
        let out = mut_arg(out, "out")?;
        let text = config.resolved.canonical.to_json_pretty();
        *out = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wd_config_set_seed(config: *mut WdConfig, seed: u64) -> WdStatus {
    guard(|| {
        let config = mut_arg(config, "config")?;
        config.resolved.setup.sim.seed = seed;
        config.resolved.setup.planner.seed = seed;
        config.resolved.canonical.sim.seed = seed;
        Ok(())
    })
}

/// Run without the auxiliary prior (K_aux = 0) when `disable` is true.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wd_config_set_disable_aux(config: *mut WdConfig, disable: bool) -> WdStatus {
    guard(|| {
        let config = mut_arg(config, "config")?;
        config.resolved.setup.sim.disable_aux = disable;
        config.resolved.canonical.sim.disable_aux = disable;
        Ok(())
    })
}

/// Flight threshold α·ξ_z,sw of the configuration [m].
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wd_config_switch_threshold(config: *const WdConfig, out: *mut f64) -> WdStatus {
    guard(|| {
        let config = ref_arg(config, "config")?;
        *mut_arg(out, "out")? = config.resolved.setup.mode_params.threshold();
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wd_config_free(config: *mut WdConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Minimum altitude at which no wheel can touch the ground at any roll [m].
#[no_mangle]
pub extern "C" fn wd_switch_altitude(wheel_diameter: f64, axle_length: f64) -> f64 {
    dynamics::switch_altitude(wheel_diameter, axle_length)
}

/// Mode of an altitude `z` for the threshold `alpha · switch_altitude(d, l)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wd_select_mode(
    z: f64,
    alpha: f64,
    wheel_diameter: f64,
    axle_length: f64,
    out: *mut WdMode,
) -> WdStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        if !z.is_finite() {
            return Err(Failure::new(WdStatus::InvalidArgument, "altitude must be finite"));
        }
        let params = dynamics::PhysicalParams {
            wheel_diameter,
            axle_length,
            ..Default::default()
        };
        params.validate()?;
        let mode_params = ModeParams::new(&params, alpha)?;
        *out = dynamics::select_mode(z, &mode_params).into();
        Ok(())
    })
}

/// Ground-impact map: roll zeroed, body-lateral velocity removed, normal
/// velocity reflected with restitution `e`.
///
/// # Safety
/// `state` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wd_contact_impulse(state: *const WdState, restitution: f64, out: *mut WdState) -> WdStatus {
    guard(|| {
        let s = State::from(ref_arg(state, "state")?);
        let out = mut_arg(out, "out")?;
        if !(0.0..=1.0).contains(&restitution) {
            return Err(Failure::new(WdStatus::InvalidArgument, "restitution must lie in [0, 1]"));
        }
        *out = WdState::from(&dynamics::contact_impulse(&s, restitution));
        Ok(())
    })
}

/// Advance the full plant by `dt` with thrust and torque held constant.
///
/// # Safety
/// `config`, `state`, `torque` (3 doubles) and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wd_plant_step(
    config: *const WdConfig,
    state: *const WdState,
    thrust: f64,
    torque: *const f64,
    dt: f64,
    out: *mut WdState,
) -> WdStatus {
    guard(|| {
        let config = ref_arg(config, "config")?;
        let s = State::from(ref_arg(state, "state")?);
        if torque.is_null() {
            return Err(Failure::null("torque"));
        }
        let tau = Vector3::from_column_slice(std::slice::from_raw_parts(torque, 3));
        let out = mut_arg(out, "out")?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Failure::new(WdStatus::InvalidArgument, "dt must be > 0"));
        }
        let step = simulator::plant_step(&s, thrust, &tau, &config.resolved.setup.params, dt)?;
        *out = WdState::from(&step.state);
        Ok(())
    })
}

/// New planner with an all-zero warm start, seeded from the configuration.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wd_planner_new(config: *const WdConfig, out: *mut *mut WdPlanner) -> WdStatus {
    guard(|| {
        let config = ref_arg(config, "config")?;
        let out = mut_arg(out, "out")?;
        let resolved = config.resolved.clone();
        let mut planner_cfg = resolved.setup.planner.clone();
        planner_cfg.seed = resolved.setup.sim.seed;
        planner_cfg.aux_samples = resolved.setup.sim.effective_aux_samples(&resolved.setup.planner);
        let planner = Planner::new(planner_cfg)?;
        *out = Box::into_raw(Box::new(WdPlanner { resolved, planner }));
        Ok(())
    })
}

/// One control step from `state` at time `t`: mode selection, auxiliary
/// rollout, MPPI update and attitude torque.
///
/// # Safety
/// `planner` must be a live handle; `state` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wd_planner_step(
    planner: *mut WdPlanner,
    state: *const WdState,
    t: f64,
    out: *mut WdControl,
) -> WdStatus {
    guard(|| {
        let handle = mut_arg(planner, "planner")?;
        let x = State::from(ref_arg(state, "state")?);
        let out = mut_arg(out, "out")?;
        if !x.is_finite() || !t.is_finite() {
            return Err(Failure::new(WdStatus::InvalidArgument, "state and time must be finite"));
        }
        let setup = &handle.resolved.setup;
        let mode = dynamics::select_mode(x.xi.z, &setup.mode_params);
        let cfg = handle.planner.config().clone();
        let aux = (cfg.aux_samples > 0).then(|| {
            let problem = PlanningProblem {
                scenario: &setup.scenario,
                config: &cfg,
                params: &setup.params,
            };
            aux_rollout(&problem, &x, t, &setup.aux_gains, &setup.mode_params)
        });
        let solution = handle
            .planner
            .step(&setup.scenario, &setup.params, &x, t, mode, aux.as_ref())?;
        let u = solution.input;
        let torque = attitude_torque(
            &x.eta,
            &x.eta_dot,
            &u.attitude(),
            &Vector3::zeros(),
            &setup.attitude_gains,
            &setup.params,
        )?;
        *out = WdControl {
            thrust: u.thrust(),
            eta_d: u.attitude().into(),
            torque: torque.into(),
            mode: mode.into(),
            min_cost: solution.diagnostics.min_cost,
            ess: solution.diagnostics.ess,
            degenerate: solution.diagnostics.degenerate,
        };
        Ok(())
    })
}

/// # Safety
/// `planner` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wd_planner_free(planner: *mut WdPlanner) {
    if !planner.is_null() {
        drop(Box::from_raw(planner));
    }
}

/// Run the closed loop to completion.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wd_run(config: *const WdConfig, out: *mut *mut WdRun) -> WdStatus {
    guard(|| {
        let config = ref_arg(config, "config")?;
        let out = mut_arg(out, "out")?;
        let (log, summary) = simulator::run(&config.resolved.setup)?;
        *out = Box::into_raw(Box::new(WdRun { log, summary }));
        Ok(())
    })
}

/// Number of logged control steps; 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wd_run_len(run: *const WdRun) -> usize {
    run.as_ref().map_or(0, |r| r.log.records.len())
}

/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wd_run_record(run: *const WdRun, index: usize, out: *mut WdRecord) -> WdStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        let out = mut_arg(out, "out")?;
        let r = run.log.records.get(index).ok_or_else(|| {
            Failure::new(
                WdStatus::InvalidArgument,
                format!("record {index} out of range (len {})", run.log.records.len()),
            )
        })?;
        *out = WdRecord {
            time: r.time,
            state: WdState::from(&r.state),
            mode: r.mode.into(),
            thrust: r.input.thrust(),
            eta_d: r.input.attitude().into(),
            torque: r.torque.into(),
            collision: r.collision,
            min_cost: r.diagnostics.min_cost,
            ess: r.diagnostics.ess,
        };
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wd_run_summary(run: *const WdRun, out: *mut WdSummary) -> WdStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        *mut_arg(out, "out")? = WdSummary::from(&run.summary);
        Ok(())
    })
}

/// Summary as JSON; free with `wd_string_free`.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wd_run_summary_json(run: *const WdRun, out: *mut *mut c_char) -> WdStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        let out = mut_arg(out, "out")?;
        let text = serde_json::to_string_pretty(&run.summary).expect("summary serializes");
        *out = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Write the trajectory CSV.
///
/// # Safety
/// `run` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wd_run_write_csv(run: *const WdRun, path: *const c_char) -> WdStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        let path = str_arg(path, "path")?;
        run.log.save_csv(Path::new(path))?;
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wd_run_free(run: *mut WdRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
