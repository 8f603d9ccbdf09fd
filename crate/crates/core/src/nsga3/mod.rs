//! Reference-point based non-dominated sorting GA (NSGA-III).
//!
//! Each generation breeds `N` offspring from the parents by binary tournament
//! on `(rank, perpendicular distance)`, SBX crossover and polynomial
//! mutation, evaluates them as one batch, and keeps `N` of the `2N` merged
//! individuals: whole fronts first, then the last front is truncated by
//! niching around Das–Dennis reference directions.
//!
//! All randomness is drawn from streams keyed by `(seed, generation, pair)`,
//! so a run resumed from a saved [`Nsga3State`] continues exactly as the
//! uninterrupted run would have.

pub mod niching;
pub mod operators;
pub mod reference;
pub mod sorting;

use std::ops::ControlFlow;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{BatchKey, Evaluation, Problem};
use crate::rng::{self, Purpose};

pub use niching::{associate, niching_select, normalize, normalize_and_associate, Association};
pub use operators::{polynomial_mutation, sbx_crossover};
pub use reference::{das_dennis_points, ReferencePointSet};
pub use sorting::{dominates, fast_nondominated_sort};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Nsga3Config {
    pub population_size: usize,
    pub generations: usize,
    /// Das–Dennis divisions `P` per objective axis.
    pub divisions: usize,
    pub crossover_probability: f64,
    pub crossover_eta: f64,
    /// Per-gene mutation probability; `None` means `1 / genome length`.
    pub mutation_probability: Option<f64>,
    pub mutation_eta: f64,
    /// Adaptive reference-point updates. Not implemented; must stay `false`.
    pub adaptive_reference_points: bool,
}

impl Default for Nsga3Config {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 200,
            divisions: 99,
            crossover_probability: 1.0,
            crossover_eta: 30.0,
            mutation_probability: None,
            mutation_eta: 20.0,
            adaptive_reference_points: false,
        }
    }
}

impl Nsga3Config {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::config("nsga3.population_size", "must be at least 2"));
        }
        if self.divisions < 1 {
            return Err(Error::config("nsga3.divisions", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) {
            return Err(Error::config("nsga3.crossover_probability", "must lie in [0, 1]"));
        }
        if let Some(p) = self.mutation_probability {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config("nsga3.mutation_probability", "must lie in [0, 1]"));
            }
        }
        if !(self.crossover_eta >= 0.0 && self.crossover_eta.is_finite()) {
            return Err(Error::config("nsga3.crossover_eta", "must be finite and >= 0"));
        }
        if !(self.mutation_eta >= 0.0 && self.mutation_eta.is_finite()) {
            return Err(Error::config("nsga3.mutation_eta", "must be finite and >= 0"));
        }
        if self.adaptive_reference_points {
            return Err(Error::config(
                "nsga3.adaptive_reference_points",
                "adaptive reference points are not supported; only the fixed Das-Dennis set is",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub objectives: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Generation in which this individual was created and evaluated.
    pub generation: usize,
    /// Evaluation failed; `objectives` hold the problem's worst case.
    pub failed: bool,
    pub rank: usize,
    pub reference: Option<usize>,
    pub distance: f64,
}

impl Individual {
    fn from_evaluation(
        genome: Vec<f64>,
        result: Result<Evaluation>,
        generation: usize,
        worst: &[f64],
    ) -> Self {
        let (objectives, stderrs, failed) = match result {
            Ok(e) if e.objectives.iter().all(|v| v.is_finite()) => (e.objectives, e.stderrs, false),
            Ok(_) => {
                warn!("generation {generation}: non-finite objectives, assigning worst case");
                (worst.to_vec(), vec![0.0; worst.len()], true)
            }
            Err(err) => {
                warn!("generation {generation}: evaluation failed ({err}), assigning worst case");
                (worst.to_vec(), vec![0.0; worst.len()], true)
            }
        };
        Self {
            genome,
            objectives,
            stderrs,
            generation,
            failed,
            rank: 0,
            reference: None,
            distance: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub genome: Vec<f64>,
    pub objectives: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub generation: usize,
}

/// Every non-dominated objective vector seen so far.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds `entry` unless an archived vector dominates or equals it; evicts
    /// what it dominates. Entries stay sorted by objectives.
    pub fn insert(&mut self, entry: ArchiveEntry) -> bool {
        if self
            .entries
            .iter()
            .any(|e| e.objectives == entry.objectives || dominates(&e.objectives, &entry.objectives))
        {
            return false;
        }
        self.entries
            .retain(|e| !dominates(&entry.objectives, &e.objectives));
        let pos = self
            .entries
            .partition_point(|e| lexicographic(&e.objectives, &entry.objectives).is_lt());
        self.entries.insert(pos, entry);
        true
    }

    pub fn objectives(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|e| e.objectives.clone()).collect()
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Area dominated by a set of 2-D points (minimization) and bounded by
/// `reference`. Points not strictly better than the reference in both
/// coordinates contribute nothing.
pub fn hypervolume_2d<T: AsRef<[f64]>>(points: &[T], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .map(|p| [p.as_ref()[0], p.as_ref()[1]])
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

/// Everything needed to continue a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nsga3State {
    /// Last completed generation (0 = evaluated initial population).
    pub generation: usize,
    pub population: Vec<Individual>,
    pub archive: ParetoArchive,
    pub evaluations: usize,
}

pub struct GenerationReport<'a> {
    pub generation: usize,
    /// Individuals evaluated in this generation, in candidate order.
    pub evaluated: &'a [Individual],
    pub state: &'a Nsga3State,
}

#[derive(Clone, Debug)]
pub struct Nsga3 {
    config: Nsga3Config,
    references: ReferencePointSet,
    seed: u64,
}

impl Nsga3 {
    pub fn new(config: Nsga3Config, objective_count: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let references = das_dennis_points(objective_count, config.divisions)?;
        if config.population_size < references.len() {
            warn!(
                "population size {} is below the {} reference points",
                config.population_size,
                references.len()
            );
        }
        Ok(Self {
            config,
            references,
            seed,
        })
    }

    pub fn config(&self) -> &Nsga3Config {
        &self.config
    }

    pub fn references(&self) -> &ReferencePointSet {
        &self.references
    }

    fn mutation_probability(&self, dimension: usize) -> f64 {
        self.config
            .mutation_probability
            .unwrap_or(1.0 / dimension as f64)
    }

    fn evaluate<P: Problem>(
        &self,
        problem: &P,
        generation: usize,
        genomes: Vec<Vec<f64>>,
    ) -> Vec<Individual> {
        let mut results = problem.evaluate(BatchKey::Generation(generation as u64), &genomes);
        results.resize_with(genomes.len(), || {
            Err(Error::InvalidCandidate("missing evaluation".into()))
        });
        let worst = problem.worst_objectives();
        genomes
            .into_iter()
            .zip(results)
            .map(|(g, r)| Individual::from_evaluation(g, r, generation, &worst))
            .collect()
    }

    /// Uniform random initial population, evaluated as generation 0. Also
    /// returns the evaluated individuals in candidate order.
    pub fn initialize<P: Problem>(&self, problem: &P) -> (Nsga3State, Vec<Individual>) {
        let bounds = problem.bounds();
        let genomes: Vec<Vec<f64>> = (0..self.config.population_size)
            .map(|j| {
                let mut rng = rng::stream(self.seed, Purpose::Initialization, &[j as u64]);
                (0..bounds.dimension())
                    .map(|i| bounds.lower()[i] + rng.random::<f64>() * bounds.width(i))
                    .collect()
            })
            .collect();
        let evaluated = self.evaluate(problem, 0, genomes);
        let mut archive = ParetoArchive::default();
        archive_all(&mut archive, &evaluated);
        let population = self.environmental_selection(evaluated.clone(), 0);
        let state = Nsga3State {
            generation: 0,
            evaluations: evaluated.len(),
            population,
            archive,
        };
        (state, evaluated)
    }

    fn tournament<'a, R: Rng + ?Sized>(&self, population: &'a [Individual], rng: &mut R) -> &'a Individual {
        let a = &population[rng.random_range(0..population.len())];
        let b = &population[rng.random_range(0..population.len())];
        match a.rank.cmp(&b.rank).then(a.distance.total_cmp(&b.distance)) {
            std::cmp::Ordering::Less => a,
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Equal => {
                if rng.random::<bool>() {
                    a
                } else {
                    b
                }
            }
        }
    }

    /// Offspring genomes for `generation`; pair `k` uses its own stream.
    pub fn breed(&self, population: &[Individual], bounds: &crate::problem::Bounds, generation: usize) -> Vec<Vec<f64>> {
        let n = self.config.population_size;
        let p_m = self.mutation_probability(bounds.dimension());
        let mut children = Vec::with_capacity(n + 1);
        for pair in 0..n.div_ceil(2) {
            let mut rng = rng::stream(
                self.seed,
                Purpose::Variation,
                &[generation as u64, pair as u64],
            );
            let p1 = self.tournament(population, &mut rng);
            let p2 = self.tournament(population, &mut rng);
            let (mut c1, mut c2) = sbx_crossover(
                &p1.genome,
                &p2.genome,
                bounds,
                self.config.crossover_probability,
                self.config.crossover_eta,
                &mut rng,
            );
            polynomial_mutation(&mut c1, bounds, p_m, self.config.mutation_eta, &mut rng);
            polynomial_mutation(&mut c2, bounds, p_m, self.config.mutation_eta, &mut rng);
            children.push(c1);
            children.push(c2);
        }
        children.truncate(n);
        children
    }

    /// Keeps `population_size` of `merged`, setting rank and association.
    pub fn environmental_selection(&self, mut merged: Vec<Individual>, generation: usize) -> Vec<Individual> {
        let n = self.config.population_size.min(merged.len());
        let objectives: Vec<&[f64]> = merged.iter().map(|i| i.objectives.as_slice()).collect();
        let fronts = fast_nondominated_sort(&objectives);

        let mut accepted: Vec<usize> = Vec::with_capacity(merged.len());
        let mut last_front: &[usize] = &[];
        for (rank, front) in fronts.iter().enumerate() {
            for &id in front {
                merged[id].rank = rank;
            }
            if accepted.len() + front.len() <= n {
                accepted.extend(front);
                if accepted.len() == n {
                    break;
                }
            } else {
                last_front = front;
                break;
            }
        }

        // normalize over everything still in contention
        let mut contention = accepted.clone();
        contention.extend_from_slice(last_front);
        let contention_objectives: Vec<&[f64]> = contention
            .iter()
            .map(|&id| merged[id].objectives.as_slice())
            .collect();
        let associations = normalize_and_associate(&contention_objectives, &self.references);
        let mut by_id = vec![None; merged.len()];
        for (k, &id) in contention.iter().enumerate() {
            by_id[id] = Some(associations[k]);
        }

        let mut chosen = accepted.clone();
        if accepted.len() < n {
            let mut niche_counts = vec![0usize; self.references.len()];
            for &id in &accepted {
                niche_counts[by_id[id].expect("accepted ids are associated").reference] += 1;
            }
            let local: Vec<Association> = contention.iter().map(|&id| by_id[id].unwrap()).collect();
            let last_local: Vec<usize> = (accepted.len()..contention.len()).collect();
            let mut rng = rng::stream(self.seed, Purpose::Niching, &[generation as u64]);
            let picked = niching_select(
                &last_local,
                &local,
                &mut niche_counts,
                n - accepted.len(),
                &mut rng,
            );
            chosen.extend(picked.into_iter().map(|k| contention[k]));
        }

        let mut slots: Vec<Option<Individual>> = merged.into_iter().map(Some).collect();
        chosen
            .into_iter()
            .map(|id| {
                let mut ind = slots[id].take().expect("each id chosen once");
                let a = by_id[id].expect("chosen ids are associated");
                ind.reference = Some(a.reference);
                ind.distance = a.distance;
                ind
            })
            .collect()
    }

    /// Advances `state` by one generation and returns the new offspring.
    pub fn step<P: Problem>(&self, state: &mut Nsga3State, problem: &P) -> Vec<Individual> {
        let generation = state.generation + 1;
        let genomes = self.breed(&state.population, problem.bounds(), generation);
        let offspring = self.evaluate(problem, generation, genomes);
        archive_all(&mut state.archive, &offspring);
        let mut merged = std::mem::take(&mut state.population);
        merged.extend(offspring.iter().cloned());
        state.population = self.environmental_selection(merged, generation);
        state.generation = generation;
        state.evaluations += offspring.len();
        offspring
    }

    /// Runs from scratch through `config.generations`. The observer sees every
    /// generation (including 0) and may stop the run early.
    pub fn run<P, F>(&self, problem: &P, mut observer: F) -> Result<Nsga3State>
    where
        P: Problem,
        F: FnMut(&GenerationReport<'_>) -> Result<ControlFlow<()>>,
    {
        let (state, evaluated) = self.initialize(problem);
        let report = GenerationReport {
            generation: 0,
            evaluated: &evaluated,
            state: &state,
        };
        if observer(&report)?.is_break() {
            return Ok(state);
        }
        self.resume(state, problem, observer)
    }

    /// Continues a saved run through `config.generations`.
    pub fn resume<P, F>(&self, mut state: Nsga3State, problem: &P, mut observer: F) -> Result<Nsga3State>
    where
        P: Problem,
        F: FnMut(&GenerationReport<'_>) -> Result<ControlFlow<()>>,
    {
        while state.generation < self.config.generations {
            let offspring = self.step(&mut state, problem);
            let report = GenerationReport {
                generation: state.generation,
                evaluated: &offspring,
                state: &state,
            };
            if observer(&report)?.is_break() {
                break;
            }
        }
        Ok(state)
    }
}

fn archive_all(archive: &mut ParetoArchive, individuals: &[Individual]) {
    for ind in individuals.iter().filter(|i| !i.failed) {
        archive.insert(ArchiveEntry {
            genome: ind.genome.clone(),
            objectives: ind.objectives.clone(),
            stderrs: ind.stderrs.clone(),
            generation: ind.generation,
        });
    }
}
