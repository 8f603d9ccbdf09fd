//! `(μ/μ_w, λ)`-CMA-ES for minimizing the first objective of a [`Problem`].
//!
//! The strategy works in coordinates normalized to `[0, 1]` per gene, so a
//! step size of 0.3 means 30% of each variable's range. Parameters follow the
//! usual defaults: log-linear positive weights over the best half, cumulative
//! step-size adaptation, rank-one plus rank-μ covariance updates.
//!
//! Objectives estimated by Monte Carlo are noisy, so two bests are tracked:
//! the lowest single estimate ever seen (monotone, but biased low) and an
//! incumbent whose score is the running mean of repeated evaluations.

use std::ops::ControlFlow;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{BatchKey, Bounds, Problem};
use crate::rng::{self, Purpose};

/// Eigenvalues of `C` below this fraction of the largest are raised to it.
const EIGEN_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaesConfig {
    /// `λ`, offspring per generation.
    pub population_size: usize,
    pub generations: usize,
    /// Starting mean in problem coordinates; `None` is the center of the box.
    pub initial_mean: Option<Vec<f64>>,
    /// `σ₀` as a fraction of each variable's range.
    pub initial_step: f64,
    /// Re-evaluate the incumbent every this many generations (0 disables).
    pub reevaluate_every: usize,
    /// Redraws of an out-of-bounds coordinate before it is clipped.
    pub max_resamples: usize,
}

impl Default for CmaesConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 300,
            initial_mean: None,
            initial_step: 0.3,
            reevaluate_every: 10,
            max_resamples: 10,
        }
    }
}

impl CmaesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::config("cmaes.population_size", "must be at least 2"));
        }
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return Err(Error::config("cmaes.initial_step", "must be positive"));
        }
        if let Some(m) = &self.initial_mean {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::config("cmaes.initial_mean", "must be finite"));
            }
        }
        Ok(())
    }
}

/// Strategy constants derived from the dimension and `λ`.
#[derive(Clone, Debug)]
struct Parameters {
    mu: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl Parameters {
    fn new(n: usize, lambda: usize) -> Self {
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

/// A genome with its (possibly averaged) score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub genome: Vec<f64>,
    pub value: f64,
    pub stderr: f64,
    /// Number of independent estimates averaged into `value`.
    pub evaluations: usize,
    pub generation: usize,
}

/// One sampled candidate and its estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub genome: Vec<f64>,
    pub objectives: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub failed: bool,
}

impl Sample {
    pub fn value(&self) -> f64 {
        self.objectives[0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub generation: usize,
    pub evaluations: usize,
    /// Lowest single estimate seen so far; non-increasing.
    pub best_observed: f64,
    pub generation_best: f64,
    pub generation_median: f64,
    pub incumbent: f64,
    pub incumbent_evaluations: usize,
    pub sigma: f64,
}

/// Full strategy state in normalized coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmaesState {
    /// Completed generations.
    pub generation: usize,
    pub mean: Vec<f64>,
    pub sigma: f64,
    /// Row-major `n × n` covariance.
    pub covariance: Vec<f64>,
    pub path_sigma: Vec<f64>,
    pub path_c: Vec<f64>,
    pub evaluations: usize,
    pub best_observed: Option<Scored>,
    pub incumbent: Option<Scored>,
    pub history: Vec<HistoryRow>,
}

pub struct CmaesReport<'a> {
    pub generation: usize,
    pub evaluated: &'a [Sample],
    pub state: &'a CmaesState,
}

#[derive(Clone, Debug)]
pub struct Cmaes {
    config: CmaesConfig,
    seed: u64,
}

impl Cmaes {
    pub fn new(config: CmaesConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, seed })
    }

    pub fn config(&self) -> &CmaesConfig {
        &self.config
    }

    pub fn initial_state(&self, bounds: &Bounds) -> Result<CmaesState> {
        let n = bounds.dimension();
        let mean = match &self.config.initial_mean {
            Some(m) if m.len() != n => {
                return Err(Error::config(
                    "cmaes.initial_mean",
                    format!("has {} entries, the genome has {n}", m.len()),
                ))
            }
            Some(m) => {
                if !bounds.contains(m) {
                    return Err(Error::config("cmaes.initial_mean", "lies outside the bounds"));
                }
                to_unit(bounds, m)
            }
            None => vec![0.5; n],
        };
        let mut covariance = vec![0.0; n * n];
        for i in 0..n {
            covariance[i * n + i] = 1.0;
        }
        Ok(CmaesState {
            generation: 0,
            mean,
            sigma: self.config.initial_step,
            covariance,
            path_sigma: vec![0.0; n],
            path_c: vec![0.0; n],
            evaluations: 0,
            best_observed: None,
            incumbent: None,
            history: Vec::new(),
        })
    }

    /// Draws generation `generation`'s offspring in normalized coordinates.
    fn sample(&self, state: &CmaesState, basis: &Basis, generation: usize) -> Vec<Vec<f64>> {
        let n = state.mean.len();
        let marginal: Vec<f64> = (0..n)
            .map(|i| state.sigma * state.covariance[i * n + i].sqrt())
            .collect();
        (0..self.config.population_size)
            .map(|k| {
                let mut rng = rng::stream(
                    self.seed,
                    Purpose::Sampling,
                    &[generation as u64, k as u64],
                );
                let z: DVector<f64> =
                    DVector::from_iterator(n, (0..n).map(|_| rng.sample(StandardNormal)));
                let y = &basis.b * DVector::from_iterator(n, basis.d.iter().zip(z.iter()).map(|(d, z)| d * z));
                let mut x: Vec<f64> = (0..n).map(|i| state.mean[i] + state.sigma * y[i]).collect();
                for i in 0..n {
                    let mut tries = 0;
                    while !(0.0..=1.0).contains(&x[i]) && tries < self.config.max_resamples {
                        let r: f64 = rng.sample(StandardNormal);
                        x[i] = state.mean[i] + marginal[i] * r;
                        tries += 1;
                    }
                    x[i] = x[i].clamp(0.0, 1.0);
                }
                x
            })
            .collect()
    }

    /// Advances one generation and returns the evaluated offspring.
    pub fn step<P: Problem>(&self, state: &mut CmaesState, problem: &P) -> Result<Vec<Sample>> {
        let bounds = problem.bounds();
        let n = bounds.dimension();
        if state.mean.len() != n {
            return Err(Error::Checkpoint(format!(
                "strategy has dimension {}, problem has {n}",
                state.mean.len()
            )));
        }
        let params = Parameters::new(n, self.config.population_size);
        let generation = state.generation + 1;
        let basis = Basis::decompose(&mut state.covariance, n);

        let unit = self.sample(state, &basis, generation);
        let genomes: Vec<Vec<f64>> = unit.iter().map(|u| from_unit(bounds, u)).collect();
        let samples = evaluate(problem, BatchKey::Generation(generation as u64), genomes);
        state.evaluations += samples.len();

        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| samples[a].value().total_cmp(&samples[b].value()).then(a.cmp(&b)));

        self.update(state, &params, &basis, &unit, &order, generation);
        self.track(state, &samples, &order, generation, problem)?;
        Ok(samples)
    }

    fn update(
        &self,
        state: &mut CmaesState,
        p: &Parameters,
        basis: &Basis,
        unit: &[Vec<f64>],
        order: &[usize],
        generation: usize,
    ) {
        let n = state.mean.len();
        let old_mean = DVector::from_column_slice(&state.mean);
        let steps: Vec<DVector<f64>> = order[..p.mu]
            .iter()
            .map(|&k| (DVector::from_column_slice(&unit[k]) - &old_mean) / state.sigma)
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in p.weights.iter().zip(&steps) {
            y_w += *w * y;
        }
        let mean = &old_mean + state.sigma * &y_w;

        let mut ps = DVector::from_column_slice(&state.path_sigma);
        ps = (1.0 - p.c_sigma) * ps
            + (p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff).sqrt() * basis.inv_sqrt_times(&y_w);
        let ps_norm = ps.norm();
        let decay = 1.0 - (1.0 - p.c_sigma).powi(2 * generation as i32);
        let h_sigma = ps_norm / decay.sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * p.chi_n;

        let mut pc = DVector::from_column_slice(&state.path_c);
        pc *= 1.0 - p.c_c;
        if h_sigma {
            pc += (p.c_c * (2.0 - p.c_c) * p.mu_eff).sqrt() * &y_w;
        }
        let delta = if h_sigma { 0.0 } else { p.c_c * (2.0 - p.c_c) };

        let mut c = DMatrix::from_row_slice(n, n, &state.covariance);
        c *= 1.0 + p.c_1 * delta - p.c_1 - p.c_mu;
        c += p.c_1 * &pc * pc.transpose();
        for (w, y) in p.weights.iter().zip(&steps) {
            c += (p.c_mu * w) * y * y.transpose();
        }
        c = (&c + c.transpose()) * 0.5;

        state.sigma *= ((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp();
        state.mean = mean.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        state.path_sigma = ps.as_slice().to_vec();
        state.path_c = pc.as_slice().to_vec();
        state.covariance = c.transpose().as_slice().to_vec();
    }

    fn track<P: Problem>(
        &self,
        state: &mut CmaesState,
        samples: &[Sample],
        order: &[usize],
        generation: usize,
        problem: &P,
    ) -> Result<()> {
        let best = &samples[order[0]];
        let candidate = Scored {
            genome: best.genome.clone(),
            value: best.value(),
            stderr: best.stderrs.first().copied().unwrap_or(0.0),
            evaluations: 1,
            generation,
        };
        if !best.failed {
            if state.best_observed.as_ref().is_none_or(|b| candidate.value < b.value) {
                state.best_observed = Some(candidate.clone());
            }
            if state.incumbent.as_ref().is_none_or(|b| candidate.value < b.value) {
                state.incumbent = Some(candidate);
            }
        }

        let every = self.config.reevaluate_every;
        let due = every > 0 && (generation % every == 0 || generation == self.config.generations);
        if due {
            if let Some(inc) = state.incumbent.as_mut() {
                let again = evaluate(
                    problem,
                    BatchKey::Reevaluation(generation as u64),
                    vec![inc.genome.clone()],
                );
                state.evaluations += 1;
                let s = &again[0];
                if s.failed {
                    warn!("generation {generation}: incumbent re-evaluation failed");
                } else {
                    let k = inc.evaluations as f64;
                    inc.value = (inc.value * k + s.value()) / (k + 1.0);
                    // pooled standard error of the mean of k + 1 estimates
                    let se = s.stderrs.first().copied().unwrap_or(0.0);
                    inc.stderr = ((inc.stderr * k).powi(2) + se * se).sqrt() / (k + 1.0);
                    inc.evaluations += 1;
                    debug!("generation {generation}: incumbent re-evaluated to {}", inc.value);
                }
            }
        }

        let mut values: Vec<f64> = samples.iter().map(Sample::value).collect();
        values.sort_by(f64::total_cmp);
        let median = if values.len() % 2 == 1 {
            values[values.len() / 2]
        } else {
            0.5 * (values[values.len() / 2 - 1] + values[values.len() / 2])
        };
        let inc = state.incumbent.as_ref();
        state.history.push(HistoryRow {
            generation,
            evaluations: state.evaluations,
            best_observed: state.best_observed.as_ref().map_or(f64::NAN, |b| b.value),
            generation_best: values[0],
            generation_median: median,
            incumbent: inc.map_or(f64::NAN, |b| b.value),
            incumbent_evaluations: inc.map_or(0, |b| b.evaluations),
            sigma: state.sigma,
        });
        state.generation = generation;
        Ok(())
    }

    pub fn run<P, F>(&self, problem: &P, observer: F) -> Result<CmaesState>
    where
        P: Problem,
        F: FnMut(&CmaesReport<'_>) -> Result<ControlFlow<()>>,
    {
        let state = self.initial_state(problem.bounds())?;
        self.resume(state, problem, observer)
    }

    /// Continues a saved run through `config.generations`.
    pub fn resume<P, F>(&self, mut state: CmaesState, problem: &P, mut observer: F) -> Result<CmaesState>
    where
        P: Problem,
        F: FnMut(&CmaesReport<'_>) -> Result<ControlFlow<()>>,
    {
        if problem.objective_count() == 0 {
            return Err(Error::InvalidInput("problem has no objectives".into()));
        }
        while state.generation < self.config.generations {
            let samples = self.step(&mut state, problem)?;
            let report = CmaesReport {
                generation: state.generation,
                evaluated: &samples,
                state: &state,
            };
            if observer(&report)?.is_break() {
                break;
            }
        }
        Ok(state)
    }
}

/// `C = B diag(d²) Bᵀ`.
struct Basis {
    b: DMatrix<f64>,
    d: Vec<f64>,
}

impl Basis {
    /// Eigendecomposition of the row-major covariance, repairing it in place
    /// when eigenvalues collapse or go negative.
    fn decompose(covariance: &mut [f64], n: usize) -> Self {
        let c = DMatrix::from_row_slice(n, n, covariance);
        let eig = SymmetricEigen::new(c);
        let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let floor = if max > 0.0 && max.is_finite() { max * EIGEN_FLOOR } else { EIGEN_FLOOR };
        let mut repaired = false;
        let values: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|&v| {
                if v.is_finite() && v >= floor {
                    v
                } else {
                    repaired = true;
                    floor
                }
            })
            .collect();
        let b = eig.eigenvectors;
        if repaired {
            warn!("covariance eigenvalues floored at {floor:e}");
            let diag = DMatrix::from_diagonal(&DVector::from_column_slice(&values));
            let c = &b * diag * b.transpose();
            let c = (&c + c.transpose()) * 0.5;
            covariance.copy_from_slice(c.transpose().as_slice());
        }
        Self {
            b,
            d: values.iter().map(|v| v.sqrt()).collect(),
        }
    }

    /// `C^{-1/2} y`.
    fn inv_sqrt_times(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut t = self.b.transpose() * y;
        for (ti, d) in t.iter_mut().zip(&self.d) {
            *ti /= d;
        }
        &self.b * t
    }
}

fn to_unit(bounds: &Bounds, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let w = bounds.width(i);
            if w > 0.0 {
                (x[i] - bounds.lower()[i]) / w
            } else {
                0.5
            }
        })
        .collect()
}

fn from_unit(bounds: &Bounds, u: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = (0..u.len())
        .map(|i| bounds.lower()[i] + u[i] * bounds.width(i))
        .collect();
    bounds.clip(&mut x);
    x
}

fn evaluate<P: Problem>(problem: &P, batch: BatchKey, genomes: Vec<Vec<f64>>) -> Vec<Sample> {
    let worst = problem.worst_objectives();
    let mut results = problem.evaluate(batch, &genomes);
    results.resize_with(genomes.len(), || Err(Error::InvalidCandidate("missing evaluation".into())));
    genomes
        .into_iter()
        .zip(results)
        .map(|(genome, r)| match r {
            Ok(e) if e.objectives.first().is_some_and(|v| v.is_finite()) => Sample {
                genome,
                objectives: e.objectives,
                stderrs: e.stderrs,
                failed: false,
            },
            other => {
                if let Err(err) = other {
                    warn!("{batch:?}: evaluation failed ({err}), assigning worst case");
                }
                Sample {
                    genome,
                    objectives: worst.clone(),
                    stderrs: vec![0.0; worst.len()],
                    failed: true,
                }
            }
        })
        .collect()
}
