//! The interface the optimizers see: a boxed decision space and a batch
//! evaluator returning objective vectors with standard errors.

use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsConfig, PulseSchedule};
use crate::error::{Error, Result};
use crate::evaluator::{BatchEvaluator, EvaluationBudget};

/// Box constraints on a real-valued genome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidInput("bounds must be non-empty and of equal length".into()));
        }
        if let Some(i) = (0..lower.len())
            .find(|&i| !(lower[i].is_finite() && upper[i].is_finite() && lower[i] <= upper[i]))
        {
            return Err(Error::InvalidInput(format!(
                "bound {i} is invalid: [{}, {}]",
                lower[i], upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dimension: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dimension], vec![upper; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, genome: &[f64]) -> bool {
        genome.len() == self.dimension()
            && genome
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    pub fn clip(&self, genome: &mut [f64]) {
        for (x, (lo, hi)) in genome.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = x.clamp(*lo, *hi);
        }
    }
}

/// Which batch of evaluations a request belongs to. Mixed into the noise
/// streams, so distinct keys never reuse realizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatchKey {
    Generation(u64),
    /// Extra evaluation of an incumbent during the given generation.
    Reevaluation(u64),
}

impl BatchKey {
    pub fn stream_label(self) -> u64 {
        match self {
            BatchKey::Generation(g) => g,
            BatchKey::Reevaluation(g) => g | (1 << 62),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objectives: Vec<f64>,
    pub stderrs: Vec<f64>,
}

impl Evaluation {
    pub fn exact(objectives: Vec<f64>) -> Self {
        let stderrs = vec![0.0; objectives.len()];
        Self {
            objectives,
            stderrs,
        }
    }
}

pub trait Problem: Sync {
    fn objective_count(&self) -> usize;

    fn bounds(&self) -> &Bounds;

    /// Objectives assigned to candidates whose evaluation failed.
    fn worst_objectives(&self) -> Vec<f64>;

    /// One result per genome, in order. Genome `i` is candidate `i` of `batch`.
    fn evaluate(&self, batch: BatchKey, genomes: &[Vec<f64>]) -> Vec<Result<Evaluation>>;
}

/// Genome layout for the pulse problem: `N` phases, then the duration unless
/// it is held fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DurationMode {
    Fixed(f64),
    Variable { min: f64, max: f64 },
}

/// `(F, G)`, or `F` alone, of a pulse schedule, estimated by Monte Carlo.
#[derive(Debug, Clone)]
pub struct GateProblem {
    evaluator: BatchEvaluator,
    slice_count: usize,
    duration: DurationMode,
    trajectory_count: usize,
    master_seed: u64,
    common_random_numbers: bool,
    infidelity_only: bool,
    bounds: Bounds,
}

impl GateProblem {
    pub fn new(
        evaluator: BatchEvaluator,
        slice_count: usize,
        duration: DurationMode,
        trajectory_count: usize,
        master_seed: u64,
    ) -> Result<Self> {
        if slice_count == 0 {
            return Err(Error::InvalidInput("slice count must be at least 1".into()));
        }
        let mut lower = vec![0.0; slice_count];
        let mut upper = vec![std::f64::consts::TAU; slice_count];
        match duration {
            DurationMode::Fixed(t) if !(t.is_finite() && t > 0.0) => {
                return Err(Error::InvalidInput(format!("fixed duration {t} must be positive")));
            }
            DurationMode::Fixed(_) => {}
            DurationMode::Variable { min, max } => {
                if !(min > 0.0 && min <= max) {
                    return Err(Error::InvalidInput(format!(
                        "duration bounds [{min}, {max}] are invalid"
                    )));
                }
                lower.push(min);
                upper.push(max);
            }
        }
        Ok(Self {
            evaluator,
            slice_count,
            duration,
            trajectory_count,
            master_seed,
            common_random_numbers: false,
            infidelity_only: false,
            bounds: Bounds::new(lower, upper)?,
        })
    }

    pub fn with_common_random_numbers(mut self, enabled: bool) -> Self {
        self.common_random_numbers = enabled;
        self
    }

    /// Report `F` as the only objective (single-objective studies).
    pub fn infidelity_only(mut self) -> Self {
        self.infidelity_only = true;
        self
    }

    pub fn evaluator(&self) -> &BatchEvaluator {
        &self.evaluator
    }

    pub fn dynamics(&self) -> &DynamicsConfig {
        self.evaluator.dynamics()
    }

    pub fn duration_mode(&self) -> DurationMode {
        self.duration
    }

    pub fn budget(&self, batch: BatchKey) -> EvaluationBudget {
        EvaluationBudget {
            trajectory_count: self.trajectory_count,
            master_seed: self.master_seed,
            generation: batch.stream_label(),
            common_random_numbers: self.common_random_numbers,
        }
    }

    pub fn schedule(&self, genome: &[f64]) -> Result<PulseSchedule> {
        if genome.len() != self.bounds.dimension() {
            return Err(Error::InvalidCandidate(format!(
                "genome has {} genes, expected {}",
                genome.len(),
                self.bounds.dimension()
            )));
        }
        let duration = match self.duration {
            DurationMode::Fixed(t) => t,
            DurationMode::Variable { .. } => genome[self.slice_count],
        };
        PulseSchedule::new(genome[..self.slice_count].to_vec(), duration)
            .map_err(|e| Error::InvalidCandidate(e.to_string()))
    }

    /// Full `(phases…, duration)` vector for a genome, whatever the mode.
    pub fn full_genome(&self, genome: &[f64]) -> Vec<f64> {
        let mut out = genome[..self.slice_count.min(genome.len())].to_vec();
        match self.duration {
            DurationMode::Fixed(t) => out.push(t),
            DurationMode::Variable { .. } => out.extend(genome.get(self.slice_count).copied()),
        }
        out
    }

    fn max_duration(&self) -> f64 {
        match self.duration {
            DurationMode::Fixed(t) => t,
            DurationMode::Variable { max, .. } => max,
        }
    }
}

impl Problem for GateProblem {
    fn objective_count(&self) -> usize {
        if self.infidelity_only {
            1
        } else {
            2
        }
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn worst_objectives(&self) -> Vec<f64> {
        if self.infidelity_only {
            vec![1.0]
        } else {
            vec![1.0, self.max_duration()]
        }
    }

    fn evaluate(&self, batch: BatchKey, genomes: &[Vec<f64>]) -> Vec<Result<Evaluation>> {
        let schedules: Vec<Result<PulseSchedule>> =
            genomes.iter().map(|g| self.schedule(g)).collect();
        let valid: Vec<(u64, &PulseSchedule)> = schedules
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().ok().map(|s| (i as u64, s)))
            .collect();
        let mut estimates = self
            .evaluator
            .evaluate_candidates(&valid, &self.budget(batch))
            .into_iter();

        schedules
            .into_iter()
            .map(|s| {
                s?;
                let est = estimates.next().expect("one estimate per valid schedule")?;
                Ok(if self.infidelity_only {
                    Evaluation {
                        objectives: vec![est.infidelity],
                        stderrs: vec![est.infidelity_stderr],
                    }
                } else {
                    Evaluation {
                        objectives: vec![est.infidelity, est.rydberg_time],
                        stderrs: vec![est.infidelity_stderr, est.rydberg_time_stderr],
                    }
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::SpectralNoiseModel;

    fn problem(duration: DurationMode) -> GateProblem {
        let evaluator = BatchEvaluator::new(
            SpectralNoiseModel::with_level(0.0).unwrap(),
            DynamicsConfig::new(std::f64::consts::FRAC_PI_2, 2).unwrap(),
            1,
        )
        .unwrap();
        GateProblem::new(evaluator, 5, duration, 4, 1).unwrap()
    }

    #[test]
    fn bounds_follow_duration_mode() {
        let p = problem(DurationMode::Variable { min: 1.0, max: 5.0 });
        assert_eq!(p.bounds().dimension(), 6);
        assert_eq!(p.bounds().lower()[5], 1.0);
        assert_eq!(p.bounds().upper()[5], 5.0);
        assert_eq!(p.worst_objectives(), vec![1.0, 5.0]);
        let p = problem(DurationMode::Fixed(1.0)).infidelity_only();
        assert_eq!(p.bounds().dimension(), 5);
        assert_eq!(p.worst_objectives(), vec![1.0]);
        assert_eq!(p.full_genome(&[0.0; 5]).len(), 6);
    }

    #[test]
    fn invalid_genomes_fail_in_isolation() {
        let p = problem(DurationMode::Variable { min: 1.0, max: 5.0 });
        let good = vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let bad = vec![f64::NAN, 0.0, 0.0, 0.0, 0.0, 1.0];
        let out = p.evaluate(BatchKey::Generation(0), &[bad, good.clone(), vec![1.0]]);
        assert!(matches!(out[0], Err(Error::InvalidCandidate(_))));
        assert!(out[1].as_ref().unwrap().objectives[0] < 1e-12);
        assert!(out[2].is_err());
    }

    #[test]
    fn clip_and_contains() {
        let b = Bounds::uniform(3, 0.0, 1.0).unwrap();
        let mut g = vec![-1.0, 0.5, 2.0];
        assert!(!b.contains(&g));
        b.clip(&mut g);
        assert_eq!(g, vec![0.0, 0.5, 1.0]);
        assert!(b.contains(&g));
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
    }
}
