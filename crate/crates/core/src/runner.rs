//! Experiment orchestration: config in, artifacts out.
//!
//! An output directory holds
//!
//! * `manifest.json`: resolved config and crate version;
//! * `evaluations.csv`: one row per evaluated candidate, appended per generation;
//! * `front.csv`, `archive.csv`, `front.svg`: NSGA-III results;
//! * `history.csv`, `best.csv`: CMA-ES results;
//! * `checkpoint.json`: optimizer state for `resume`.
//!
//! A checkpoint records how many bytes of the log belonged to it; resuming
//! truncates the log there, so an interrupted and resumed run leaves the same
//! bytes on disk as an uninterrupted one.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::cmaes::{Cmaes, CmaesState, Scored};
use crate::config::{Algorithm, RunConfig};
use crate::dynamics::PulseSchedule;
use crate::error::{Error, Result};
use crate::evaluator::{BatchEvaluator, EvaluationBudget, ObjectiveEstimate};
use crate::nsga3::{fast_nondominated_sort, Individual, Nsga3, Nsga3State};
use crate::plot::{render_svg, Series};
use crate::problem::GateProblem;
use crate::records::{
    evaluation_header, fmt_float, write_front_file, write_history, EvaluationRecord, FrontRecord,
};
use crate::rng::{self, Purpose};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOG_FILE: &str = "evaluations.csv";
pub const FRONT_FILE: &str = "front.csv";
pub const ARCHIVE_FILE: &str = "archive.csv";
pub const PLOT_FILE: &str = "front.svg";
pub const HISTORY_FILE: &str = "history.csv";
pub const BEST_FILE: &str = "best.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Stop (with a checkpoint) once this generation has completed.
    pub halt_after: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Halted,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub status: RunStatus,
    pub output_dir: PathBuf,
    /// Last completed generation.
    pub generation: usize,
    /// Final non-dominated set (NSGA-III).
    pub front: Vec<FrontRecord>,
    /// Incumbent (CMA-ES).
    pub best: Option<Scored>,
    /// Evaluated candidates (evaluate-only).
    pub evaluations: Vec<EvaluationRecord>,
}

impl RunSummary {
    fn new(status: RunStatus, output_dir: &Path, generation: usize) -> Self {
        Self {
            status,
            output_dir: output_dir.to_path_buf(),
            generation,
            front: Vec::new(),
            best: None,
            evaluations: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub package: String,
    pub version: String,
    pub config: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmState {
    Nsga3(Nsga3State),
    Cmaes(CmaesState),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub config: RunConfig,
    /// Length of the evaluation log when the checkpoint was taken.
    pub log_bytes: u64,
    pub state: AlgorithmState,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(&tmp, text + "\n").map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Appends evaluation rows; `bytes` is the file length after the last flush.
struct EvaluationLog {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl EvaluationLog {
    fn create(path: &Path, slice_count: usize) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
        writer.write_record(evaluation_header(slice_count))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    /// Reopens an existing log, discarding everything after `bytes`.
    fn reopen(path: &Path, bytes: u64) -> Result<Self> {
        let file = OpenOptions::new().write(true).open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        if len < bytes {
            return Err(Error::Checkpoint(format!(
                "{} has {len} bytes but the checkpoint expects at least {bytes}",
                path.display()
            )));
        }
        file.set_len(bytes).map_err(|e| Error::io(path, e))?;
        let mut file = file;
        std::io::Seek::seek(&mut file, std::io::SeekFrom::End(0)).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer: csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file)),
        })
    }

    fn append(&mut self, record: &EvaluationRecord) -> Result<()> {
        self.writer.write_record(record.to_row())?;
        Ok(())
    }

    fn flush(&mut self) -> Result<u64> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))?;
        let file = self.writer.get_ref().get_ref();
        Ok(file.metadata().map_err(|e| Error::io(&self.path, e))?.len())
    }
}

/// Builds the evaluation problem a config describes.
pub fn gate_problem(config: &RunConfig) -> Result<GateProblem> {
    let evaluator = BatchEvaluator::new(
        config.noise_model()?,
        config.dynamics_config()?,
        config.effective_threads()?,
    )?;
    let problem = GateProblem::new(
        evaluator,
        config.dynamics.slice_count,
        config.duration_mode(),
        config.evaluation.trajectories,
        config.run.seed,
    )?
    .with_common_random_numbers(config.evaluation.common_random_numbers);
    Ok(if config.run.algorithm == Algorithm::Cmaes {
        problem.infidelity_only()
    } else {
        problem
    })
}

fn record_for(
    problem: &GateProblem,
    generation: usize,
    index: usize,
    genome: &[f64],
    objectives: &[f64],
    stderrs: &[f64],
    failed: bool,
) -> EvaluationRecord {
    let full = problem.full_genome(genome);
    let (phases, duration) = full.split_at(full.len() - 1);
    EvaluationRecord {
        generation,
        index,
        failed,
        infidelity: objectives[0],
        infidelity_stderr: stderrs[0],
        rydberg_time: (objectives.len() > 1).then(|| (objectives[1], stderrs[1])),
        duration: duration[0],
        phases: phases.to_vec(),
    }
}

fn front_record(problem: &GateProblem, level: f64, ind: &Individual) -> FrontRecord {
    let full = problem.full_genome(&ind.genome);
    let (phases, duration) = full.split_at(full.len() - 1);
    FrontRecord {
        noise_level: level,
        generation: ind.generation,
        infidelity: ind.objectives[0],
        infidelity_stderr: ind.stderrs[0],
        rydberg_time: ind.objectives[1],
        rydberg_time_stderr: ind.stderrs[1],
        duration: duration[0],
        phases: phases.to_vec(),
    }
}

fn sort_front(records: &mut [FrontRecord]) {
    records.sort_by(|a, b| {
        a.infidelity
            .total_cmp(&b.infidelity)
            .then(a.rydberg_time.total_cmp(&b.rydberg_time))
            .then(a.generation.cmp(&b.generation))
    });
}

/// Non-dominated, successfully evaluated members of the final population.
pub fn final_front(problem: &GateProblem, level: f64, state: &Nsga3State) -> Vec<FrontRecord> {
    let ok: Vec<&Individual> = state.population.iter().filter(|i| !i.failed).collect();
    let objectives: Vec<&[f64]> = ok.iter().map(|i| i.objectives.as_slice()).collect();
    let fronts = fast_nondominated_sort(&objectives);
    let mut records: Vec<FrontRecord> = fronts
        .first()
        .map(|f| f.iter().map(|&k| front_record(problem, level, ok[k])).collect())
        .unwrap_or_default();
    sort_front(&mut records);
    records
}

struct Session<'a> {
    config: &'a RunConfig,
    dir: PathBuf,
    problem: GateProblem,
    log: EvaluationLog,
    options: &'a RunOptions,
}

impl Session<'_> {
    fn checkpoint_due(&self, generation: usize) -> bool {
        let every = self.config.run.checkpoint_every;
        every > 0 && generation > 0 && generation % every == 0
    }

    fn halting(&self, generation: usize) -> bool {
        self.options.halt_after.is_some_and(|h| generation >= h)
    }

    fn save(&mut self, state: AlgorithmState) -> Result<()> {
        let log_bytes = self.log.flush()?;
        let checkpoint = Checkpoint {
            version: VERSION.to_string(),
            config: self.config.clone(),
            log_bytes,
            state,
        };
        write_json(&self.dir.join(CHECKPOINT_FILE), &checkpoint)
    }

    fn run_nsga3(mut self, resume_from: Option<Nsga3State>) -> Result<RunSummary> {
        let nsga = Nsga3::new(self.config.nsga3.clone(), 2, self.config.run.seed)?;
        let mut halted = false;
        let problem = self.problem.clone();
        let observer = |report: &crate::nsga3::GenerationReport<'_>| -> Result<ControlFlow<()>> {
            for (i, ind) in report.evaluated.iter().enumerate() {
                let rec = record_for(
                    &problem,
                    report.generation,
                    i,
                    &ind.genome,
                    &ind.objectives,
                    &ind.stderrs,
                    ind.failed,
                );
                self.log.append(&rec)?;
            }
            info!(
                "generation {}: archive {} points, {} evaluations",
                report.generation,
                report.state.archive.len(),
                report.state.evaluations
            );
            let halt = self.halting(report.generation);
            if halt || self.checkpoint_due(report.generation) {
                self.save(AlgorithmState::Nsga3(report.state.clone()))?;
            } else {
                self.log.flush()?;
            }
            if halt && report.generation < nsga.config().generations {
                halted = true;
                return Ok(ControlFlow::Break(()));
            }
            Ok(ControlFlow::Continue(()))
        };
        let state = match resume_from {
            Some(s) => nsga.resume(s, &problem, observer)?,
            None => nsga.run(&problem, observer)?,
        };
        if halted {
            return Ok(RunSummary::new(RunStatus::Halted, &self.dir, state.generation));
        }
        self.save(AlgorithmState::Nsga3(state.clone()))?;

        let level = self.config.noise.level;
        let front = final_front(&problem, level, &state);
        if front.is_empty() {
            return Err(Error::EmptyFront("every final individual failed to evaluate".into()));
        }
        write_front_file(&self.dir.join(FRONT_FILE), &front)?;
        let mut archive: Vec<FrontRecord> = state
            .archive
            .entries()
            .iter()
            .map(|e| {
                let ind = Individual {
                    genome: e.genome.clone(),
                    objectives: e.objectives.clone(),
                    stderrs: e.stderrs.clone(),
                    generation: e.generation,
                    failed: false,
                    rank: 0,
                    reference: None,
                    distance: 0.0,
                };
                front_record(&problem, level, &ind)
            })
            .collect();
        sort_front(&mut archive);
        write_front_file(&self.dir.join(ARCHIVE_FILE), &archive)?;
        let svg = render_svg(&[Series::from_front(&front, "front")])?;
        let plot = self.dir.join(PLOT_FILE);
        std::fs::write(&plot, svg).map_err(|e| Error::io(&plot, e))?;

        let mut summary = RunSummary::new(RunStatus::Completed, &self.dir, state.generation);
        summary.front = front;
        Ok(summary)
    }

    fn run_cmaes(mut self, resume_from: Option<CmaesState>) -> Result<RunSummary> {
        let cma = Cmaes::new(self.config.cmaes.clone(), self.config.run.seed)?;
        let mut halted = false;
        let problem = self.problem.clone();
        let generations = self.config.cmaes.generations;
        let observer = |report: &crate::cmaes::CmaesReport<'_>| -> Result<ControlFlow<()>> {
            for (i, s) in report.evaluated.iter().enumerate() {
                let rec = record_for(
                    &problem,
                    report.generation,
                    i,
                    &s.genome,
                    &s.objectives,
                    &s.stderrs,
                    s.failed,
                );
                self.log.append(&rec)?;
            }
            if let Some(h) = report.state.history.last() {
                info!(
                    "generation {}: best {:.6e}, incumbent {:.6e}, sigma {:.3e}",
                    h.generation, h.generation_best, h.incumbent, h.sigma
                );
            }
            let halt = self.halting(report.generation);
            if halt || self.checkpoint_due(report.generation) {
                self.save(AlgorithmState::Cmaes(report.state.clone()))?;
            } else {
                self.log.flush()?;
            }
            if halt && report.generation < generations {
                halted = true;
                return Ok(ControlFlow::Break(()));
            }
            Ok(ControlFlow::Continue(()))
        };
        let state = match resume_from {
            Some(s) => cma.resume(s, &problem, observer)?,
            None => cma.run(&problem, observer)?,
        };
        if halted {
            return Ok(RunSummary::new(RunStatus::Halted, &self.dir, state.generation));
        }
        self.save(AlgorithmState::Cmaes(state.clone()))?;

        let history_path = self.dir.join(HISTORY_FILE);
        let file = File::create(&history_path).map_err(|e| Error::io(&history_path, e))?;
        write_history(BufWriter::new(file), &state.history)?;
        if let Some(best) = &state.incumbent {
            write_best(&self.dir.join(BEST_FILE), &problem, best)?;
        }
        let mut summary = RunSummary::new(RunStatus::Completed, &self.dir, state.generation);
        summary.best = state.incumbent.clone();
        Ok(summary)
    }
}

fn write_best(path: &Path, problem: &GateProblem, best: &Scored) -> Result<()> {
    let full = problem.full_genome(&best.genome);
    let (phases, duration) = full.split_at(full.len() - 1);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header: Vec<String> = ["generation", "evaluations", "F", "F_stderr", "duration"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..phases.len()).map(|i| format!("phase_{i}")));
    w.write_record(&header)?;
    let mut row = vec![
        best.generation.to_string(),
        best.evaluations.to_string(),
        fmt_float(best.value),
        fmt_float(best.stderr),
        fmt_float(duration[0]),
    ];
    row.extend(phases.iter().map(|p| fmt_float(*p)));
    w.write_record(&row)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_manifest(dir: &Path, config: &RunConfig) -> Result<()> {
    write_json(
        &dir.join(MANIFEST_FILE),
        &Manifest {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: VERSION.to_string(),
            config: config.clone(),
        },
    )
}

/// Runs the experiment a config describes, writing into `run.output_dir`.
pub fn run_experiment(config: &RunConfig, options: &RunOptions) -> Result<RunSummary> {
    config.validate()?;
    let dir = config.run.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_manifest(&dir, config)?;
    let stale = dir.join(CHECKPOINT_FILE);
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
    }

    if config.run.algorithm == Algorithm::EvaluateOnly {
        let genome = evaluate_section_genome(config)?;
        let records = evaluate_genomes(config, &[genome])?;
        write_evaluations(&dir.join(LOG_FILE), config.dynamics.slice_count, &records)?;
        let mut summary = RunSummary::new(RunStatus::Completed, &dir, 0);
        summary.evaluations = records;
        return Ok(summary);
    }

    let session = Session {
        config,
        log: EvaluationLog::create(&dir.join(LOG_FILE), config.dynamics.slice_count)?,
        problem: gate_problem(config)?,
        dir,
        options,
    };
    match config.run.algorithm {
        Algorithm::Nsga3 => session.run_nsga3(None),
        Algorithm::Cmaes => session.run_cmaes(None),
        Algorithm::EvaluateOnly => unreachable!("handled above"),
    }
}

pub fn run_config_file(path: &Path, options: &RunOptions) -> Result<RunSummary> {
    run_experiment(&RunConfig::load(path)?, options)
}

/// Continues the run a checkpoint belongs to, in the checkpoint's directory.
///
/// With `config`, the run is only resumed if it describes the same experiment
/// (seed included); thread count and output directory may differ.
pub fn resume(
    checkpoint_path: &Path,
    config: Option<&RunConfig>,
    options: &RunOptions,
) -> Result<RunSummary> {
    let checkpoint: Checkpoint = read_json(checkpoint_path)?;
    let dir = checkpoint_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    if checkpoint.version != VERSION {
        return Err(Error::Checkpoint(format!(
            "written by version {}, this is {VERSION}",
            checkpoint.version
        )));
    }
    let mut effective = checkpoint.config.clone();
    if let Some(given) = config {
        if given.run.seed != checkpoint.config.run.seed {
            return Err(Error::Checkpoint(format!(
                "seed {} does not match the checkpoint's seed {}",
                given.run.seed, checkpoint.config.run.seed
            )));
        }
        if !given.same_experiment(&checkpoint.config) {
            return Err(Error::Checkpoint("config differs from the one the checkpoint was written with".into()));
        }
        effective.run.threads = given.run.threads;
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        let manifest: Manifest = read_json(&manifest_path)?;
        if !manifest.config.same_experiment(&checkpoint.config) {
            return Err(Error::Checkpoint(format!(
                "{} describes a different experiment",
                manifest_path.display()
            )));
        }
    }
    effective.run.output_dir = dir.clone();

    let session = Session {
        config: &effective,
        log: EvaluationLog::reopen(&dir.join(LOG_FILE), checkpoint.log_bytes)?,
        problem: gate_problem(&effective)?,
        dir,
        options,
    };
    info!("resuming from {}", checkpoint_path.display());
    match checkpoint.state {
        AlgorithmState::Nsga3(s) if effective.run.algorithm == Algorithm::Nsga3 => session.run_nsga3(Some(s)),
        AlgorithmState::Cmaes(s) if effective.run.algorithm == Algorithm::Cmaes => session.run_cmaes(Some(s)),
        _ => Err(Error::Checkpoint("state does not match run.algorithm".into())),
    }
}

fn evaluate_section_genome(config: &RunConfig) -> Result<Vec<f64>> {
    let e = &config.evaluate;
    let mut genome = match (&e.phases, e.phase) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => vec![p; config.dynamics.slice_count],
        (None, None) => return Err(Error::config("evaluate.phases", "no genome given")),
    };
    genome.push(e.duration.unwrap_or(config.duration.fixed));
    Ok(genome)
}

/// Evaluates genomes of `N` phases (duration from `duration.fixed`) or `N + 1`
/// genes (duration last), as candidates `0, 1, …` of generation 0.
pub fn evaluate_genomes(config: &RunConfig, genomes: &[Vec<f64>]) -> Result<Vec<EvaluationRecord>> {
    let n = config.dynamics.slice_count;
    let schedules: Vec<PulseSchedule> = genomes
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let duration = match g.len() {
                l if l == n => config.duration.fixed,
                l if l == n + 1 => g[n],
                l => {
                    return Err(Error::InvalidInput(format!(
                        "genome {i} has {l} values, expected {n} phases or {n} phases plus a duration"
                    )))
                }
            };
            PulseSchedule::new(g[..n].to_vec(), duration)
        })
        .collect::<Result<_>>()?;
    let evaluator = BatchEvaluator::new(
        config.noise_model()?,
        config.dynamics_config()?,
        config.effective_threads()?,
    )?;
    let mut budget = EvaluationBudget::new(config.evaluation.trajectories, config.run.seed);
    budget.common_random_numbers = config.evaluation.common_random_numbers;
    let estimates = evaluator.evaluate(&schedules, &budget);
    Ok(schedules
        .iter()
        .zip(estimates)
        .enumerate()
        .map(|(i, (s, est))| {
            let (est, failed) = match est {
                Ok(e) => (e, false),
                Err(err) => {
                    log::warn!("candidate {i}: {err}");
                    (
                        ObjectiveEstimate {
                            infidelity: 1.0,
                            infidelity_stderr: 0.0,
                            rydberg_time: s.duration(),
                            rydberg_time_stderr: 0.0,
                        },
                        true,
                    )
                }
            };
            EvaluationRecord {
                generation: 0,
                index: i,
                failed,
                infidelity: est.infidelity,
                infidelity_stderr: est.infidelity_stderr,
                rydberg_time: Some((est.rydberg_time, est.rydberg_time_stderr)),
                duration: s.duration(),
                phases: s.phases().to_vec(),
            }
        })
        .collect())
}

pub fn write_evaluations_to<W: Write>(out: W, slice_count: usize, records: &[EvaluationRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(evaluation_header(slice_count))?;
    for r in records {
        w.write_record(r.to_row())?;
    }
    w.flush().map_err(|e| Error::io("<evaluations>", e))
}

pub fn write_evaluations(path: &Path, slice_count: usize, records: &[EvaluationRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_evaluations_to(BufWriter::new(file), slice_count, records)
}

/// Samples `samples` equally spaced points of the noise on `[0, duration]`.
/// Realization `k` is the one trajectory `k` of candidate 0 sees in
/// generation 0 (without common random numbers).
pub fn noise_dump<W: Write>(
    config: &RunConfig,
    realizations: usize,
    samples: usize,
    duration: f64,
    out: W,
) -> Result<()> {
    if samples < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidInput(format!("duration {duration} must be positive")));
    }
    let model = config.noise_model()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["realization", "t", "amplitude", "detuning"])?;
    let dt = duration / (samples - 1) as f64;
    for k in 0..realizations {
        let mut rng = rng::stream(config.run.seed, Purpose::Noise, &[0, 0, k as u64]);
        let r = model.sample_realization(&mut rng);
        for i in 0..samples {
            let t = i as f64 * dt;
            let (a, d) = r.evaluate(t);
            w.write_record([k.to_string(), fmt_float(t), fmt_float(a), fmt_float(d)])?;
        }
    }
    w.flush().map_err(|e| Error::io("<noise dump>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path, algorithm: Algorithm) -> RunConfig {
        let mut c = RunConfig::default();
        c.run.algorithm = algorithm;
        c.run.output_dir = dir.to_path_buf();
        c.run.threads = 1;
        c.run.checkpoint_every = 2;
        c.dynamics.slice_count = 6;
        c.dynamics.substeps = 2;
        c.dynamics.pulse_area = std::f64::consts::FRAC_PI_2;
        c.evaluation.trajectories = 4;
        c.nsga3.population_size = 8;
        c.nsga3.generations = 4;
        c.nsga3.divisions = 7;
        c.cmaes.population_size = 6;
        c.cmaes.generations = 4;
        c.cmaes.reevaluate_every = 2;
        c
    }

    #[test]
    fn evaluate_only_noiseless_pi_pulse() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(dir.path(), Algorithm::EvaluateOnly);
        c.noise.level = 0.0;
        c.dynamics.pulse_area = std::f64::consts::TAU;
        c.evaluate.phase = Some(0.0);
        c.evaluate.duration = Some(0.25);
        let s = run_experiment(&c, &RunOptions::default()).unwrap();
        assert!(s.evaluations[0].infidelity <= 1e-10);
        assert!(dir.path().join(LOG_FILE).exists());
        assert!(dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn nsga3_writes_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let s = run_experiment(&small(dir.path(), Algorithm::Nsga3), &RunOptions::default()).unwrap();
        assert_eq!(s.status, RunStatus::Completed);
        for f in [MANIFEST_FILE, LOG_FILE, FRONT_FILE, ARCHIVE_FILE, PLOT_FILE, CHECKPOINT_FILE] {
            assert!(dir.path().join(f).exists(), "{f} missing");
        }
        let log = std::fs::read_to_string(dir.path().join(LOG_FILE)).unwrap();
        // header plus 8 candidates for each of generations 0..=4
        assert_eq!(log.lines().count(), 1 + 8 * 5);
    }

    #[test]
    fn cmaes_writes_history_and_best() {
        let dir = tempfile::tempdir().unwrap();
        let s = run_experiment(&small(dir.path(), Algorithm::Cmaes), &RunOptions::default()).unwrap();
        assert!(s.best.is_some());
        let history = std::fs::read_to_string(dir.path().join(HISTORY_FILE)).unwrap();
        assert_eq!(history.lines().count(), 1 + 4);
        assert!(dir.path().join(BEST_FILE).exists());
    }

    #[test]
    fn halted_run_leaves_a_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(dir.path(), Algorithm::Nsga3);
        let s = run_experiment(&c, &RunOptions { halt_after: Some(1) }).unwrap();
        assert_eq!(s.status, RunStatus::Halted);
        assert_eq!(s.generation, 1);
        assert!(!dir.path().join(FRONT_FILE).exists());
        let cp: Checkpoint = read_json(&dir.path().join(CHECKPOINT_FILE)).unwrap();
        assert_eq!(cp.config, c);
    }

    #[test]
    fn noise_dump_has_a_row_per_sample() {
        let mut out = Vec::new();
        noise_dump(&RunConfig::default(), 2, 5, 1.0, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 5);
        assert!(noise_dump(&RunConfig::default(), 1, 1, 1.0, Vec::new()).is_err());
    }
}
