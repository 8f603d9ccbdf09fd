//! Design of noise-resilient π-pulses on a two-level `|1⟩ ↔ |r⟩` transition.
//!
//! A pulse is a piecewise-constant sequence of laser phases plus a total
//! duration. Its quality is measured by two Monte Carlo objectives taken over
//! realizations of band-limited pink amplitude and dephasing noise:
//!
//! * `F`: the expected gate infidelity against the target `U₀ = [[0, i], [i, 0]]`;
//! * `G`: the expected time spent in the Rydberg state.
//!
//! The crate provides the simulator ([`dynamics`], [`noise`]), the Monte Carlo
//! estimator ([`evaluator`]), two optimizers ([`nsga3`] for the bi-objective
//! problem and [`cmaes`] for infidelity alone), and the experiment runner
//! ([`runner`]) that ties them to config files, logs, checkpoints and plots.

pub mod cmaes;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod evaluator;
pub mod noise;
pub mod nsga3;
pub mod plot;
pub mod problem;
pub mod records;
pub mod rng;
pub mod runner;
pub mod unitary;

pub use dynamics::{DynamicsConfig, PulseSchedule, TrajectoryResult};
pub use error::{Error, Result};
pub use evaluator::{EvaluationBudget, ObjectiveEstimate};
pub use noise::{NoiseRealization, SpectralNoiseModel};
pub use unitary::Unitary2;
