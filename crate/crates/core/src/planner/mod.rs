//! Mode-switching MPPI planner.
//!
//! Each control step draws `K` noisy input sequences around a prior, rolls
//! them out through the contact-aware prediction model, and returns the
//! softmax-weighted average. The first `K_aux` samples are centered on the
//! rollout of an auxiliary position controller; the rest on the previous
//! solution. The auxiliary prior carries the sudden thrust increase needed to
//! leave the ground, which the warm start alone rarely discovers.

mod cost;
mod input;
mod transition;

pub use cost::{input_penalty, running_cost, terminal_cost, CostWeights};
pub use input::{project_input, ControlInput, InputLimits, InputSequence};
pub use transition::{crosses_ground, transition};

use nalgebra::Vector4;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::controllers::{auxiliary_input, AuxGains};
use crate::dynamics::{select_mode, Mode, ModeParams, PhysicalParams, State};
use crate::environment::{ReferencePoint, Scenario};
use crate::error::{Error, Result};

/// Tuning of the sampling planner.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    /// Total number of samples K.
    pub samples: usize,
    /// Samples centered on the auxiliary-controller sequence.
    pub aux_samples: usize,
    /// Horizon length T in steps.
    pub horizon: usize,
    /// Temperature λ.
    pub temperature: f64,
    /// Diagonal of the noise covariance Σ.
    pub noise_variance: Vector4<f64>,
    /// Prediction step [s].
    pub dt: f64,
    pub weights: CostWeights,
    pub seed: u64,
    /// Thrust upper bound as a multiple of the weight.
    pub max_thrust_factor: f64,
    /// Bound on every reference angle [rad].
    pub max_angle: f64,
    /// Shift the previous solution by one step before reusing it.
    pub shift_warm_start: bool,
    /// In flight, route the auxiliary lateral term to roll instead of yaw.
    pub aux_lateral_to_roll: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            samples: 1500,
            aux_samples: 300,
            horizon: 30,
            temperature: 10.0,
            noise_variance: Vector4::new(2.25, 0.03, 0.03, 0.03),
            dt: 0.02,
            weights: CostWeights::default(),
            seed: 0,
            max_thrust_factor: 4.0,
            max_angle: 1.2,
            shift_warm_start: false,
            aux_lateral_to_roll: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::config("K must be ≥ 1"));
        }
        if self.aux_samples > self.samples {
            return Err(Error::config("K_aux must not exceed K"));
        }
        if self.horizon < 1 {
            return Err(Error::config("T must be ≥ 1"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::config("lambda must be > 0"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("planner dt must be > 0"));
        }
        if self.noise_variance.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::config("noise variances must be finite and ≥ 0"));
        }
        if !(self.max_thrust_factor > 0.0) {
            return Err(Error::config("max_thrust_factor must be > 0"));
        }
        if !(self.max_angle > 0.0 && self.max_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::config("max_angle must lie in (0, π/2)"));
        }
        let w = &self.weights;
        for (name, m) in [
            ("W_xi", &w.w_xi),
            ("W_xi_dot", &w.w_xi_dot),
            ("W_xi_term", &w.w_xi_term),
            ("W_xi_dot_term", &w.w_xi_dot_term),
        ] {
            if !is_psd(&nalgebra::DMatrix::from_column_slice(3, 3, m.as_slice())) {
                return Err(Error::config(format!("{name} must be symmetric positive semidefinite")));
            }
        }
        if !is_psd(&nalgebra::DMatrix::from_column_slice(4, 4, w.w_u.as_slice())) {
            return Err(Error::config("W_u must be symmetric positive semidefinite"));
        }
        if !(w.w_obs >= 0.0) {
            return Err(Error::config("W_obs must be ≥ 0"));
        }
        Ok(())
    }

    pub fn limits(&self, params: &PhysicalParams) -> InputLimits {
        InputLimits {
            max_thrust: self.max_thrust_factor * params.weight(),
            max_angle: self.max_angle,
        }
    }

    /// Σ⁻¹ diagonal; channels with zero variance carry no effort penalty.
    pub fn inverse_variance(&self) -> Vector4<f64> {
        self.noise_variance.map(|v| if v > 0.0 { 1.0 / v } else { 0.0 })
    }
}

fn is_psd(m: &nalgebra::DMatrix<f64>) -> bool {
    if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
        return false;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .all(|&ev| ev >= -1e-12 * m.amax().max(1.0))
}

/// Everything a rollout needs besides the state and the inputs.
#[derive(Clone, Copy, Debug)]
pub struct PlanningProblem<'a> {
    pub scenario: &'a Scenario,
    pub config: &'a PlannerConfig,
    pub params: &'a PhysicalParams,
}

impl PlanningProblem<'_> {
    /// Reference points at `t + j·dt` for `j = 0..=T`.
    pub fn references(&self, time: f64) -> Vec<ReferencePoint> {
        (0..=self.config.horizon)
            .map(|j| self.scenario.reference_at(time + j as f64 * self.config.dt))
            .collect()
    }

    /// Total MPPI cost of one input sequence from `x0`:
    /// `c_term(x_T) + Σ_j [c(x_j, u_j) + (λ/2)u_jᵀΣ⁻¹u_j]`.
    pub fn rollout_cost(&self, x0: &State, inputs: &[ControlInput], references: &[ReferencePoint]) -> f64 {
        let cfg = self.config;
        let inv_var = cfg.inverse_variance();
        let mut x = *x0;
        let mut total = 0.0;
        for (u, r) in inputs.iter().zip(references) {
            total += running_cost(&x, u, r, self.scenario, &cfg.weights) + input_penalty(u, cfg.temperature, &inv_var);
            x = transition(&x, u, cfg.dt, self.params);
        }
        total + terminal_cost(&x, &references[inputs.len()], &cfg.weights)
    }
}

/// Which prior a sample is centered on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorSource {
    Auxiliary,
    WarmStart,
}

/// Assign priors: the first `aux_samples` samples use the auxiliary sequence,
/// the remainder the previous solution.
pub fn build_prior(
    warm_start: &InputSequence,
    aux: &InputSequence,
    samples: usize,
    aux_samples: usize,
) -> Result<Vec<PriorSource>> {
    aux.expect_len(warm_start.len())?;
    if aux_samples > samples {
        return Err(Error::config("K_aux must not exceed K"));
    }
    Ok((0..samples)
        .map(|k| {
            if k < aux_samples {
                PriorSource::Auxiliary
            } else {
                PriorSource::WarmStart
            }
        })
        .collect())
}

/// Roll the auxiliary position controller through the prediction model.
///
/// Each input is projected with the mode of the predicted state it is applied in.
pub fn aux_rollout(
    problem: &PlanningProblem<'_>,
    x0: &State,
    time: f64,
    gains: &AuxGains,
    mode_params: &ModeParams,
) -> InputSequence {
    let cfg = problem.config;
    let limits = cfg.limits(problem.params);
    let mut x = *x0;
    (0..cfg.horizon)
        .map(|j| {
            let reference = problem.scenario.reference_at(time + j as f64 * cfg.dt);
            let mode = select_mode(x.xi.z, mode_params);
            let mut raw = auxiliary_input(&x, &reference, gains, problem.params).0;
            if cfg.aux_lateral_to_roll && mode == Mode::Flight {
                raw[3] = raw[1];
                raw[1] = 0.0;
            }
            let u = project_input(&raw, mode, &limits);
            x = transition(&x, &u, cfg.dt, problem.params);
            u
        })
        .collect()
}

/// Per-step solver statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub min_cost: f64,
    pub mean_cost: f64,
    /// Effective sample size `1 / Σ w_k²`.
    pub ess: f64,
    /// Every sample had a non-finite cost; the solution fell back to a prior.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MppiSolution {
    pub input: ControlInput,
    pub sequence: InputSequence,
    pub diagnostics: Diagnostics,
}

/// Normalized importance weights `softmax(−cost/λ)`.
///
/// The minimum finite cost is subtracted before exponentiation. Non-finite
/// costs get zero weight. Returns `None` when no sample has a finite cost.
pub fn softmax_weights(costs: &[f64], temperature: f64) -> Option<Vec<f64>> {
    let baseline = costs
        .iter()
        .copied()
        .filter(|c| c.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !baseline.is_finite() {
        return None;
    }
    let mut w: Vec<f64> = costs
        .iter()
        .map(|&c| if c.is_finite() { (-(c - baseline) / temperature).exp() } else { 0.0 })
        .collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    Some(w)
}

/// Noise of sample `k`: a ChaCha8 stream keyed by `base_seed` and `k`, drawn
/// step-major, channel-minor, scaled by the standard deviations.
pub fn sample_noise(base_seed: u64, k: usize, horizon: usize, std_dev: &Vector4<f64>) -> Vec<Vector4<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(k as u64);
    (0..horizon)
        .map(|_| {
            Vector4::from_fn(|i, _| {
                let z: f64 = rand::Rng::sample(&mut rng, StandardNormal);
                std_dev[i] * z
            })
        })
        .collect()
}

/// One MPPI update.
///
/// `aux` may be `None` only when `aux_samples == 0`. The random generator is
/// advanced by exactly one `u64`, which keys all per-sample noise streams, so
/// results do not depend on how the rollouts are scheduled across threads.
pub fn mppi_step<R: RngCore>(
    problem: &PlanningProblem<'_>,
    x: &State,
    time: f64,
    mode: Mode,
    warm_start: &InputSequence,
    aux: Option<&InputSequence>,
    rng: &mut R,
) -> Result<MppiSolution> {
    let cfg = problem.config;
    warm_start.expect_len(cfg.horizon)?;
    let aux = match aux {
        Some(a) => a,
        None if cfg.aux_samples == 0 => warm_start,
        None => return Err(Error::config("auxiliary sequence required when K_aux > 0")),
    };
    let priors = build_prior(warm_start, aux, cfg.samples, cfg.aux_samples)?;
    let limits = cfg.limits(problem.params);
    let std_dev = cfg.noise_variance.map(f64::sqrt);
    let references = problem.references(time);
    let base_seed = rng.next_u64();

    let samples: Vec<(Vec<ControlInput>, f64)> = priors
        .par_iter()
        .enumerate()
        .map(|(k, source)| {
            let prior = match source {
                PriorSource::Auxiliary => aux,
                PriorSource::WarmStart => warm_start,
            };
            let noise = sample_noise(base_seed, k, cfg.horizon, &std_dev);
            let inputs: Vec<ControlInput> = prior
                .iter()
                .zip(&noise)
                .map(|(u, eps)| project_input(&(u.0 + eps), mode, &limits))
                .collect();
            let cost = problem.rollout_cost(x, &inputs, &references);
            (inputs, cost)
        })
        .collect();

    let costs: Vec<f64> = samples.iter().map(|(_, c)| *c).collect();
    let finite: Vec<f64> = costs.iter().copied().filter(|c| c.is_finite()).collect();
    let Some(weights) = softmax_weights(&costs, cfg.temperature) else {
        return Ok(fallback(problem, x, mode, warm_start, aux, &references));
    };

    // Σ w_k u_k written as base + Σ w_k (u_k − base) around the projected warm
    // start: identical samples reproduce the prior bit-for-bit and locked
    // slots stay exactly zero.
    let base: Vec<Vector4<f64>> = warm_start.iter().map(|u| project_input(&u.0, mode, &limits).0).collect();
    let mut delta = vec![Vector4::zeros(); cfg.horizon];
    for (w, (inputs, _)) in weights.iter().zip(&samples) {
        if *w == 0.0 {
            continue;
        }
        for ((acc, u), b) in delta.iter_mut().zip(inputs).zip(&base) {
            *acc += *w * (u.0 - b);
        }
    }
    let sequence: InputSequence = base.iter().zip(&delta).map(|(b, d)| ControlInput(b + d)).collect();
    let diagnostics = Diagnostics {
        min_cost: finite.iter().copied().fold(f64::INFINITY, f64::min),
        mean_cost: finite.iter().sum::<f64>() / finite.len() as f64,
        ess: 1.0 / weights.iter().map(|w| w * w).sum::<f64>(),
        degenerate: false,
    };
    Ok(MppiSolution {
        input: sequence[0],
        sequence,
        diagnostics,
    })
}

/// Noise-free prior with the lowest finite cost, else the projected warm start.
fn fallback(
    problem: &PlanningProblem<'_>,
    x: &State,
    mode: Mode,
    warm_start: &InputSequence,
    aux: &InputSequence,
    references: &[ReferencePoint],
) -> MppiSolution {
    let limits = problem.config.limits(problem.params);
    let project = |seq: &InputSequence| -> InputSequence {
        seq.iter().map(|u| project_input(&u.0, mode, &limits)).collect()
    };
    let mut candidates = vec![project(warm_start)];
    if problem.config.aux_samples > 0 {
        candidates.push(project(aux));
    }
    let best = candidates
        .iter()
        .map(|seq| (seq, problem.rollout_cost(x, seq.as_slice(), references)))
        .filter(|(_, c)| c.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(seq, _)| seq.clone())
        .unwrap_or_else(|| candidates[0].clone());
    MppiSolution {
        input: best[0],
        sequence: best,
        diagnostics: Diagnostics {
            min_cost: f64::NAN,
            mean_cost: f64::NAN,
            ess: 0.0,
            degenerate: true,
        },
    }
}

/// Stateful planner: keeps the previous solution and the random stream.
#[derive(Clone, Debug)]
pub struct Planner {
    config: PlannerConfig,
    rng: ChaCha8Rng,
    warm_start: InputSequence,
}

impl Planner {
    /// Starts from an all-zero input sequence.
    pub fn new(config: PlannerConfig) -> Result<Self> {
        config.validate()?;
        let warm_start = InputSequence::constant(ControlInput::zero(), config.horizon);
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            warm_start,
        })
    }

    pub fn with_warm_start(mut self, warm_start: InputSequence) -> Result<Self> {
        warm_start.expect_len(self.config.horizon)?;
        self.warm_start = warm_start;
        Ok(self)
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn warm_start(&self) -> &InputSequence {
        &self.warm_start
    }

    /// Solve one step and keep the solution as the next prior.
    pub fn step(
        &mut self,
        scenario: &Scenario,
        params: &PhysicalParams,
        x: &State,
        time: f64,
        mode: Mode,
        aux: Option<&InputSequence>,
    ) -> Result<MppiSolution> {
        let problem = PlanningProblem {
            scenario,
            config: &self.config,
            params,
        };
        let prior = if self.config.shift_warm_start {
            self.warm_start.shifted()
        } else {
            self.warm_start.clone()
        };
        let solution = mppi_step(&problem, x, time, mode, &prior, aux, &mut self.rng)?;
        self.warm_start = solution.sequence.clone();
        Ok(solution)
    }
}
