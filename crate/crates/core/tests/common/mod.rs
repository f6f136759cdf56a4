use nalgebra::Vector4;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wheeldrone::dynamics::{Mode, State};
use wheeldrone::planner::{project_input, ControlInput, InputSequence, PlannerConfig, PlanningProblem};

/// Small problem whose costs stay within the range of `exp` without a
/// baseline and whose weights are spread over several samples.
pub fn oracle_config(aux_samples: usize) -> PlannerConfig {
    PlannerConfig {
        samples: 8,
        aux_samples,
        horizon: 3,
        temperature: 1e6,
        ..PlannerConfig::default()
    }
}

pub fn warm_start(horizon: usize) -> InputSequence {
    (0..horizon)
        .map(|j| ControlInput::new(0.5 + 0.1 * j as f64, 0.05, 0.1, 0.02))
        .collect()
}

/// Explicit `u*_j = Σ_k exp(−S_k/λ) u_{j,k} / Σ_k exp(−S_k/λ)`.
pub fn brute_force(
    problem: &PlanningProblem<'_>,
    x: &State,
    t: f64,
    mode: Mode,
    warm: &InputSequence,
    aux: &InputSequence,
    seed: u64,
) -> (Vec<Vector4<f64>>, Vec<f64>) {
    let cfg = problem.config;
    let limits = cfg.limits(problem.params);
    let base_seed = ChaCha8Rng::seed_from_u64(seed).next_u64();
    let refs = problem.references(t);
    let mut samples = Vec::new();
    let mut exps = Vec::new();
    for k in 0..cfg.samples {
        let prior = if k < cfg.aux_samples { aux } else { warm };
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(k as u64);
        let inputs: Vec<ControlInput> = (0..cfg.horizon)
            .map(|j| {
                let mut raw = prior[j].0;
                for i in 0..4 {
                    let z: f64 = rng.sample(StandardNormal);
                    raw[i] += cfg.noise_variance[i].sqrt() * z;
                }
                project_input(&raw, mode, &limits)
            })
            .collect();
        let cost = problem.rollout_cost(x, &inputs, &refs);
        exps.push((-cost / cfg.temperature).exp());
        samples.push(inputs);
    }
    let total: f64 = exps.iter().sum();
    assert!(total > 0.0 && total.is_finite(), "oracle exponentials underflowed");
    let weights: Vec<f64> = exps.iter().map(|e| e / total).collect();
    let u = (0..cfg.horizon)
        .map(|j| {
            samples
                .iter()
                .zip(&weights)
                .fold(Vector4::zeros(), |acc, (s, w)| acc + s[j].0 * *w)
        })
        .collect();
    (u, weights)
}
