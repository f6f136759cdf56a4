//! Subcommands behind the `wheeldrone` binary.
//!
//! Exit codes: 0 success, 1 the experiment ran but failed (or its output
//! could not be written), 2 the configuration was rejected.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ResolvedConfig, RunConfig};
use crate::error::{Error, Result};
use crate::simulator::{run, RunSetup, RunSummary, TrajectoryLog};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Exit code for an error raised while loading or validating a configuration.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Json { .. } | Error::Io { .. } => EXIT_CONFIG,
        Error::SingularAttitude { .. } | Error::LengthMismatch { .. } => EXIT_FAILED,
    }
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    success: bool,
    #[serde(flatten)]
    summary: &'a RunSummary,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn summary_json(summary: &RunSummary) -> String {
    serde_json::to_string_pretty(&SummaryFile {
        success: summary.success(),
        summary,
    })
    .expect("summary serializes")
}

fn load(config_path: &Path) -> std::result::Result<ResolvedConfig, i32> {
    RunConfig::load_resolved(config_path).map_err(|e| {
        eprintln!("error: {e}");
        exit_code_for(&e)
    })
}

/// Write `trajectory.csv`, `summary.json` and the resolved `config.json` into `dir`.
pub fn write_run_outputs(dir: &Path, log: &TrajectoryLog, summary: &RunSummary, canonical: &RunConfig) -> Result<()> {
    create_dir(dir)?;
    log.save_csv(&dir.join("trajectory.csv"))?;
    write_file(&dir.join("summary.json"), &summary_json(summary))?;
    write_file(&dir.join("config.json"), &canonical.to_json_pretty())
}

/// One closed-loop run. Exit 0 iff the goal is reached without collision.
pub fn cmd_run(config_path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> i32 {
    let mut resolved = match load(config_path) {
        Ok(r) => r,
        Err(code) => return code,
    };
    if let Some(seed) = seed {
        resolved.setup.sim.seed = seed;
        resolved.canonical.sim.seed = seed;
    }
    let dir = out.unwrap_or_else(|| resolved.output_dir.clone());
    resolved.canonical.output_dir = Some(dir.clone());

    let (log, summary) = match run(&resolved.setup) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILED;
        }
    };
    if let Err(e) = write_run_outputs(&dir, &log, &summary, &resolved.canonical) {
        eprintln!("error: {e}");
        return EXIT_FAILED;
    }
    println!(
        "seed {}: goal_reached={} collision_steps={} max_altitude={:.3} time_to_goal={} -> {}",
        summary.seed,
        summary.goal_reached,
        summary.collision_steps,
        summary.max_altitude,
        summary.time_to_goal.map_or_else(|| "-".to_owned(), |t| format!("{t:.2}")),
        dir.display()
    );
    if summary.success() {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

/// Aggregate of one arm of the ablation.
#[derive(Clone, Debug, Serialize)]
pub struct AblationArm {
    pub aux_samples: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Failed runs whose first collision lies within `BAR_WINDOW` of the bar's x.
    pub failures_colliding_near_bar: usize,
    pub failures: usize,
    pub runs: Vec<RunSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationReport {
    pub seeds: Vec<u64>,
    pub with_aux: AblationArm,
    pub without_aux: AblationArm,
}

/// Half-width of the x-window around an elevated obstacle that counts as "near the bar" [m].
pub const BAR_WINDOW: f64 = 0.4;

/// x-coordinates of obstacles whose axis is horizontal (bars lying across the path).
fn bar_positions(setup: &RunSetup) -> Vec<f64> {
    setup
        .scenario
        .obstacles
        .iter()
        .filter(|o| o.axis.z.abs() < 0.5)
        .map(|o| o.point.x)
        .collect()
}

fn arm(setup: &RunSetup, runs: Vec<RunSummary>) -> AblationArm {
    let bars = bar_positions(setup);
    let successes = runs.iter().filter(|s| s.success()).count();
    let failures: Vec<&RunSummary> = runs.iter().filter(|s| !s.success()).collect();
    let near_bar = failures
        .iter()
        .filter(|s| {
            s.first_collision_x
                .is_some_and(|x| bars.iter().any(|b| (x - b).abs() <= BAR_WINDOW))
        })
        .count();
    AblationArm {
        aux_samples: runs.first().map_or(0, |s| s.metadata.aux_samples),
        successes,
        success_rate: if runs.is_empty() { 0.0 } else { successes as f64 / runs.len() as f64 },
        failures_colliding_near_bar: near_bar,
        failures: failures.len(),
        runs,
    }
}

/// Trajectory of one ablation run: seed, whether the auxiliary prior was on, log.
pub type AblationLog = (u64, bool, TrajectoryLog);

/// Paired runs with and without the auxiliary prior over seeds
/// `sim.seed .. sim.seed + n_seeds`, run in parallel.
pub fn ablation(resolved: &ResolvedConfig, n_seeds: usize) -> Result<(AblationReport, Vec<AblationLog>)> {
    if n_seeds == 0 {
        return Err(Error::config("number of seeds must be ≥ 1"));
    }
    let base = resolved.setup.sim.seed;
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| base + i).collect();
    let jobs: Vec<(u64, bool)> = seeds.iter().flat_map(|&s| [(s, true), (s, false)]).collect();
    let results: Vec<(u64, bool, TrajectoryLog, RunSummary)> = jobs
        .par_iter()
        .map(|&(seed, with_aux)| {
            let mut setup = resolved.setup.clone();
            setup.sim.seed = seed;
            setup.sim.disable_aux = !with_aux;
            run(&setup).map(|(log, summary)| (seed, with_aux, log, summary))
        })
        .collect::<Result<_>>()?;

    let mut on = Vec::new();
    let mut off = Vec::new();
    let mut logs = Vec::new();
    for (seed, with_aux, log, summary) in results {
        if with_aux {
            on.push(summary);
        } else {
            off.push(summary);
        }
        logs.push((seed, with_aux, log));
    }
    let report = AblationReport {
        seeds,
        with_aux: arm(&resolved.setup, on),
        without_aux: arm(&resolved.setup, off),
    };
    Ok((report, logs))
}

/// Exit 0 iff the success rate with the auxiliary prior is strictly higher.
pub fn cmd_ablation(config_path: &Path, n_seeds: usize, out: Option<PathBuf>) -> i32 {
    if n_seeds == 0 {
        eprintln!("error: {}", Error::config("number of seeds must be ≥ 1"));
        return EXIT_CONFIG;
    }
    let resolved = match load(config_path) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let dir = out.unwrap_or_else(|| resolved.output_dir.clone());
    let (report, logs) = match ablation(&resolved, n_seeds) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILED;
        }
    };
    let written = (|| -> Result<()> {
        for (seed, with_aux, log) in &logs {
            let sub = dir.join(if *with_aux { "with_aux" } else { "without_aux" });
            create_dir(&sub)?;
            log.save_csv(&sub.join(format!("trajectory_seed{seed}.csv")))?;
        }
        write_file(
            &dir.join("ablation.json"),
            &serde_json::to_string_pretty(&report).expect("report serializes"),
        )
    })();
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_FAILED;
    }
    println!(
        "with aux (K_aux = {}): {}/{}; without aux: {}/{} ({} of {} failures collide near the bar)",
        report.with_aux.aux_samples,
        report.with_aux.successes,
        n_seeds,
        report.without_aux.successes,
        n_seeds,
        report.without_aux.failures_colliding_near_bar,
        report.without_aux.failures,
    );
    if report.with_aux.success_rate > report.without_aux.success_rate {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

/// Human-readable resolved parameters.
pub fn describe(resolved: &ResolvedConfig) -> String {
    let s = &resolved.setup;
    let p = &s.planner;
    [
        format!("switch_altitude = {:.6}", s.mode_params.switch_altitude),
        format!("alpha = {:.6}", s.mode_params.alpha),
        format!("threshold = {:.6}", s.mode_params.threshold()),
        format!("inflation = {:.6}", s.scenario.inflation),
        format!("reference_duration = {:.6}", s.scenario.profile_duration()),
        format!("obstacles = {}", s.scenario.obstacles.len()),
        format!("K = {}, K_aux = {}, T = {}, lambda = {}, dt = {}", p.samples, p.aux_samples, p.horizon, p.temperature, p.dt),
        format!("max_thrust = {:.6}", p.max_thrust_factor * s.params.weight()),
        format!("seed = {}", s.sim.seed),
    ]
    .join("\n")
}

/// Print the resolved parameters; optionally write the fully explicit config.
pub fn cmd_validate(config_path: &Path, emit: Option<PathBuf>) -> i32 {
    let resolved = match load(config_path) {
        Ok(r) => r,
        Err(code) => return code,
    };
    println!("{}", describe(&resolved));
    if let Some(path) = emit {
        if let Err(e) = write_file(&path, &resolved.canonical.to_json_pretty()) {
            eprintln!("error: {e}");
            return EXIT_FAILED;
        }
    }
    EXIT_OK
}
