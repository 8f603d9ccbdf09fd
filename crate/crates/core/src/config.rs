//! Experiment configuration files (TOML, one table per module).
//!
//! ```toml
//! [run]
//! algorithm = "nsga3"        # nsga3 | cmaes | evaluate-only
//! seed = 1
//! output_dir = "out/nsga3"
//!
//! [noise]
//! level = 0.1
//!
//! [dynamics]
//! pulse_area = 1.5707963267948966
//! ```
//!
//! Every key has a default; unknown keys are rejected. Validation errors name
//! the offending key as `table.key`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cmaes::CmaesConfig;
use crate::dynamics::{DynamicsConfig, DEFAULT_PULSE_AREA, DEFAULT_SLICE_COUNT, DEFAULT_SUBSTEPS};
use crate::error::{Error, Result};
use crate::evaluator::DEFAULT_TRAJECTORY_COUNT;
use crate::noise::{SpectralNoiseModel, DEFAULT_HARMONIC_COUNT, DEFAULT_MAX_FREQUENCY};
use crate::nsga3::Nsga3Config;
use crate::problem::DurationMode;

/// Environment variable overriding `run.threads`.
pub const THREADS_ENV: &str = "RYDOPT_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Nsga3,
    Cmaes,
    EvaluateOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads for evaluation; 0 uses all available cores.
    pub threads: usize,
    /// Write a checkpoint every this many generations (0: only when halted).
    pub checkpoint_every: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Nsga3,
            seed: 1,
            output_dir: PathBuf::from("out"),
            threads: 0,
            checkpoint_every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Fraction of the base Rabi frequency, e.g. 0.1 for 10%.
    pub level: f64,
    pub harmonic_count: usize,
    /// Highest harmonic in units of `f_max`.
    pub max_frequency: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            level: 0.1,
            harmonic_count: DEFAULT_HARMONIC_COUNT,
            max_frequency: DEFAULT_MAX_FREQUENCY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub slice_count: usize,
    pub substeps: usize,
    /// `κ` in `Ω = κ f_max e^{iφ}`.
    pub pulse_area: f64,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            slice_count: DEFAULT_SLICE_COUNT,
            substeps: DEFAULT_SUBSTEPS,
            pulse_area: DEFAULT_PULSE_AREA,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub trajectories: usize,
    /// Share noise realizations between all candidates of a generation.
    pub common_random_numbers: bool,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            trajectories: DEFAULT_TRAJECTORY_COUNT,
            common_random_numbers: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DurationKind {
    /// Variable for NSGA-III, fixed for CMA-ES and evaluation.
    Auto,
    Fixed,
    Variable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DurationSection {
    pub mode: DurationKind,
    pub fixed: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for DurationSection {
    fn default() -> Self {
        Self {
            mode: DurationKind::Auto,
            fixed: 1.0,
            min: 1.0,
            max: 5.0,
        }
    }
}

/// Genome for `evaluate-only` runs: explicit phases, or one constant phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub phases: Option<Vec<f64>>,
    pub phase: Option<f64>,
    /// Defaults to `duration.fixed`.
    pub duration: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub noise: NoiseSection,
    pub dynamics: DynamicsSection,
    pub evaluation: EvaluationSection,
    pub duration: DurationSection,
    pub nsga3: Nsga3Config,
    pub cmaes: CmaesConfig,
    pub evaluate: EvaluateSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::ConfigParse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.noise;
        if !(n.level.is_finite() && n.level >= 0.0) {
            return Err(Error::config("noise.level", "must be finite and >= 0"));
        }
        if n.harmonic_count == 0 {
            return Err(Error::config("noise.harmonic_count", "must be at least 1"));
        }
        if !(n.max_frequency.is_finite() && n.max_frequency >= 1.0) {
            return Err(Error::config("noise.max_frequency", "must be finite and >= 1"));
        }
        let d = &self.dynamics;
        if d.slice_count == 0 {
            return Err(Error::config("dynamics.slice_count", "must be at least 1"));
        }
        if d.substeps == 0 {
            return Err(Error::config("dynamics.substeps", "must be at least 1"));
        }
        if !(d.pulse_area.is_finite() && d.pulse_area > 0.0) {
            return Err(Error::config("dynamics.pulse_area", "must be positive"));
        }
        if self.evaluation.trajectories == 0 {
            return Err(Error::config("evaluation.trajectories", "must be at least 1"));
        }
        let t = &self.duration;
        if !(t.fixed.is_finite() && t.fixed > 0.0) {
            return Err(Error::config("duration.fixed", "must be positive"));
        }
        if !(t.min.is_finite() && t.min > 0.0) {
            return Err(Error::config("duration.min", "must be positive"));
        }
        if !(t.max.is_finite() && t.max >= t.min) {
            return Err(Error::config("duration.max", "must be >= duration.min"));
        }
        match self.run.algorithm {
            Algorithm::Nsga3 => self.nsga3.validate()?,
            Algorithm::Cmaes => self.cmaes.validate()?,
            Algorithm::EvaluateOnly => {
                let e = &self.evaluate;
                match (&e.phases, e.phase) {
                    (Some(_), Some(_)) => {
                        return Err(Error::config("evaluate.phase", "give either `phases` or `phase`"))
                    }
                    (None, None) => {
                        return Err(Error::config("evaluate.phases", "evaluate-only needs `phases` or `phase`"))
                    }
                    (Some(p), None) if p.len() != d.slice_count => {
                        return Err(Error::config(
                            "evaluate.phases",
                            format!("has {} entries, dynamics.slice_count is {}", p.len(), d.slice_count),
                        ))
                    }
                    _ => {}
                }
                if let Some(t) = e.duration {
                    if !(t.is_finite() && t > 0.0) {
                        return Err(Error::config("evaluate.duration", "must be positive"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn noise_model(&self) -> Result<SpectralNoiseModel> {
        SpectralNoiseModel::pink(self.noise.level, self.noise.harmonic_count, self.noise.max_frequency)
    }

    pub fn dynamics_config(&self) -> Result<DynamicsConfig> {
        DynamicsConfig::new(self.dynamics.pulse_area, self.dynamics.substeps)
    }

    pub fn duration_mode(&self) -> DurationMode {
        let variable = match self.duration.mode {
            DurationKind::Auto => self.run.algorithm == Algorithm::Nsga3,
            DurationKind::Fixed => false,
            DurationKind::Variable => true,
        };
        if variable {
            DurationMode::Variable {
                min: self.duration.min,
                max: self.duration.max,
            }
        } else {
            DurationMode::Fixed(self.duration.fixed)
        }
    }

    /// Worker count after applying the environment override.
    pub fn effective_threads(&self) -> Result<usize> {
        match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                Error::config("run.threads", format!("{THREADS_ENV}={v:?} is not a thread count"))
            }),
            Err(_) => Ok(self.run.threads),
        }
    }

    /// The same experiment: everything except where and how fast it runs.
    pub fn same_experiment(&self, other: &RunConfig) -> bool {
        let strip = |c: &RunConfig| {
            let mut c = c.clone();
            c.run.threads = 0;
            c.run.output_dir = PathBuf::new();
            c
        };
        strip(self) == strip(other)
    }
}
