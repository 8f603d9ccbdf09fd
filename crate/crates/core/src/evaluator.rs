//! Monte Carlo estimation of the two objectives
//!
//! * `F = E[1 − |Tr(U U₀†)|² / 4]`
//! * `G = E[∫₀ᵀ |⟨r|U(t)|1⟩|² dt]`
//!
//! Trajectory `i` of candidate `j` in batch `g` draws its noise from the
//! stream `(master_seed, g, j, i)`. Work is spread over `(candidate,
//! trajectory)` pairs and reduced afterwards in a fixed order, so results are
//! bit-identical for any worker count.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate, DynamicsConfig, PulseSchedule};
use crate::error::{Error, Result};
use crate::noise::SpectralNoiseModel;
use crate::rng::{self, Purpose};

pub const DEFAULT_TRAJECTORY_COUNT: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationBudget {
    pub trajectory_count: usize,
    pub master_seed: u64,
    /// Batch label mixed into every noise stream; optimizers use the generation.
    pub generation: u64,
    /// Share realizations across all candidates of a batch.
    pub common_random_numbers: bool,
}

impl EvaluationBudget {
    pub fn new(trajectory_count: usize, master_seed: u64) -> Self {
        Self {
            trajectory_count,
            master_seed,
            generation: 0,
            common_random_numbers: false,
        }
    }

    pub fn at_generation(mut self, generation: u64) -> Self {
        self.generation = generation;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trajectory_count == 0 {
            return Err(Error::InvalidInput("trajectory count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveEstimate {
    pub infidelity: f64,
    pub infidelity_stderr: f64,
    /// In units of `1 / f_max`.
    pub rydberg_time: f64,
    pub rydberg_time_stderr: f64,
}

/// Per-trajectory `(F, G)` pairs in trajectory order.
fn summarize(samples: &[(f64, f64)], duration: f64) -> ObjectiveEstimate {
    let (f_mean, f_err) = mean_and_stderr(samples.iter().map(|s| s.0));
    let (g_mean, g_err) = mean_and_stderr(samples.iter().map(|s| s.1));
    ObjectiveEstimate {
        infidelity: f_mean.clamp(0.0, 1.0),
        infidelity_stderr: f_err,
        rydberg_time: g_mean.clamp(0.0, duration),
        rydberg_time_stderr: g_err,
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    let mean = compensated_sum(values.clone()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.map(|v| (v - mean) * (v - mean)));
    let sd = (ss / (n - 1) as f64).sqrt();
    (mean, sd / (n as f64).sqrt())
}

fn run_trajectory(
    schedule: &PulseSchedule,
    model: &SpectralNoiseModel,
    dynamics: &DynamicsConfig,
    budget: &EvaluationBudget,
    candidate: u64,
    trajectory: u64,
) -> Result<(f64, f64)> {
    let noise = if model.noise_level() == 0.0 {
        model.silent_realization()
    } else {
        let stream_candidate = if budget.common_random_numbers {
            0
        } else {
            candidate
        };
        let mut rng = rng::stream(
            budget.master_seed,
            Purpose::Noise,
            &[budget.generation, stream_candidate, trajectory],
        );
        model.sample_realization(&mut rng)
    };
    let r = propagate(schedule, &noise, dynamics).map_err(|e| {
        Error::InvalidCandidate(format!("candidate {candidate}, trajectory {trajectory}: {e}"))
    })?;
    Ok((r.infidelity, r.rydberg_time))
}

/// Noiseless models need only one trajectory; every draw is identical.
fn effective_count(model: &SpectralNoiseModel, budget: &EvaluationBudget) -> usize {
    if model.noise_level() == 0.0 {
        1
    } else {
        budget.trajectory_count
    }
}

/// Monte Carlo estimate of `(F, G)` for one schedule.
pub fn estimate_objectives(
    schedule: &PulseSchedule,
    model: &SpectralNoiseModel,
    dynamics: &DynamicsConfig,
    budget: &EvaluationBudget,
    candidate_index: u64,
) -> Result<ObjectiveEstimate> {
    budget.validate()?;
    dynamics.validate()?;
    let count = effective_count(model, budget);
    let samples = (0..count as u64)
        .map(|i| run_trajectory(schedule, model, dynamics, budget, candidate_index, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&samples, schedule.duration()))
}

/// Evaluates `population[i]` as candidate `i` on the current rayon pool.
pub fn batch_evaluate(
    population: &[PulseSchedule],
    model: &SpectralNoiseModel,
    dynamics: &DynamicsConfig,
    budget: &EvaluationBudget,
) -> Vec<Result<ObjectiveEstimate>> {
    let candidates: Vec<(u64, &PulseSchedule)> = population
        .iter()
        .enumerate()
        .map(|(i, s)| (i as u64, s))
        .collect();
    evaluate_candidates(&candidates, model, dynamics, budget)
}

/// Like [`batch_evaluate`] with explicit candidate indices.
pub fn evaluate_candidates(
    candidates: &[(u64, &PulseSchedule)],
    model: &SpectralNoiseModel,
    dynamics: &DynamicsConfig,
    budget: &EvaluationBudget,
) -> Vec<Result<ObjectiveEstimate>> {
    if let Err(e) = budget.validate().and_then(|_| dynamics.validate()) {
        let msg = e.to_string();
        return candidates
            .iter()
            .map(|_| Err(Error::InvalidInput(msg.clone())))
            .collect();
    }
    let count = effective_count(model, budget);
    let tasks: Vec<(usize, u64)> = (0..candidates.len())
        .flat_map(|c| (0..count as u64).map(move |t| (c, t)))
        .collect();
    let results: Vec<Result<(f64, f64)>> = tasks
        .par_iter()
        .map(|&(c, t)| {
            let (index, schedule) = candidates[c];
            run_trajectory(schedule, model, dynamics, budget, index, t)
        })
        .collect();

    let mut results = results.into_iter();
    candidates
        .iter()
        .map(|(_, schedule)| {
            let samples = results
                .by_ref()
                .take(count)
                .collect::<Vec<_>>()
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize(&samples, schedule.duration()))
        })
        .collect()
}

/// Batch evaluation on a dedicated worker pool.
#[derive(Clone)]
pub struct BatchEvaluator {
    model: SpectralNoiseModel,
    dynamics: DynamicsConfig,
    pool: Arc<rayon::ThreadPool>,
}

impl std::fmt::Debug for BatchEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BatchEvaluator")
            .field("model", &self.model)
            .field("dynamics", &self.dynamics)
            .field("workers", &self.pool.current_num_threads())
            .finish()
    }
}

impl BatchEvaluator {
    /// `workers == 0` uses the available parallelism.
    pub fn new(model: SpectralNoiseModel, dynamics: DynamicsConfig, workers: usize) -> Result<Self> {
        dynamics.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            model,
            dynamics,
            pool: Arc::new(pool),
        })
    }

    pub fn model(&self) -> &SpectralNoiseModel {
        &self.model
    }

    pub fn dynamics(&self) -> &DynamicsConfig {
        &self.dynamics
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn evaluate(
        &self,
        population: &[PulseSchedule],
        budget: &EvaluationBudget,
    ) -> Vec<Result<ObjectiveEstimate>> {
        self.pool
            .install(|| batch_evaluate(population, &self.model, &self.dynamics, budget))
    }

    pub fn evaluate_candidates(
        &self,
        candidates: &[(u64, &PulseSchedule)],
        budget: &EvaluationBudget,
    ) -> Vec<Result<ObjectiveEstimate>> {
        self.pool
            .install(|| evaluate_candidates(candidates, &self.model, &self.dynamics, budget))
    }
}
