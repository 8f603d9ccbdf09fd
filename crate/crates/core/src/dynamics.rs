//! Noisy two-level dynamics under a piecewise-constant phase pulse.
//!
//! The Hamiltonian is
//!
//! ```text
//! H(t) = [[ ε_d(t),                 (1 + ε_a(t)) Ω*(t) ],
//!         [ (1 + ε_a(t)) Ω(t),      −ε_d(t)            ]],     Ω = κ e^{iφ(t)}
//! ```
//!
//! and the pulse unitary solves `dU/dt = i H U`, `U(0) = I`. Within a
//! sub-interval the noise is held at its value at the sub-interval start, so
//! each step is an exact 2×2 exponential and propagation stays unitary to
//! rounding.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::noise::NoiseRealization;
use crate::unitary::Unitary2;

pub const DEFAULT_SLICE_COUNT: usize = 50;
pub const DEFAULT_SUBSTEPS: usize = 8;

/// `κ = 2π`: `Ω = 2π f_max e^{iφ}`, so a constant-phase π-pulse lasts `0.25 / f_max`.
pub const DEFAULT_PULSE_AREA: f64 = TAU;

/// `κ = π/2`: a constant-phase pulse of duration `1 / f_max` is a π-pulse.
/// This is the convention under which the `T = 1` naive pulse is meaningful.
pub const UNIT_DURATION_PULSE_AREA: f64 = FRAC_PI_2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsConfig {
    /// `κ` in `Ω = κ f_max e^{iφ}` (rad·f_max).
    pub pulse_area: f64,
    /// Sub-intervals per phase slice.
    pub substeps: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            pulse_area: DEFAULT_PULSE_AREA,
            substeps: DEFAULT_SUBSTEPS,
        }
    }
}

impl DynamicsConfig {
    pub fn new(pulse_area: f64, substeps: usize) -> Result<Self> {
        let cfg = Self {
            pulse_area,
            substeps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_area.is_finite() && self.pulse_area > 0.0) {
            return Err(Error::InvalidInput(format!(
                "pulse area must be finite and positive, got {}",
                self.pulse_area
            )));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidInput("substeps must be at least 1".into()));
        }
        Ok(())
    }

    /// Duration of the noiseless constant-phase π-pulse, `π / (2κ)`.
    pub fn pi_pulse_duration(&self) -> f64 {
        FRAC_PI_2 / self.pulse_area
    }
}

/// Piecewise-constant laser phases over `[0, T]`: `φ(t) = φ_i` on
/// `[iT/N, (i+1)T/N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    phases: Vec<f64>,
    duration: f64,
}

impl PulseSchedule {
    pub fn new(phases: Vec<f64>, duration: f64) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::InvalidInput("schedule needs at least one phase".into()));
        }
        if let Some((i, p)) = phases
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && (0.0..=TAU).contains(*p)))
        {
            return Err(Error::InvalidInput(format!(
                "phase {i} = {p} is outside [0, 2π]"
            )));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidInput(format!(
                "duration must be finite and positive, got {duration}"
            )));
        }
        Ok(Self { phases, duration })
    }

    pub fn constant(phase: f64, slice_count: usize, duration: f64) -> Result<Self> {
        Self::new(vec![phase; slice_count], duration)
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn slice_count(&self) -> usize {
        self.phases.len()
    }

    pub fn slice_duration(&self) -> f64 {
        self.duration / self.phases.len() as f64
    }
}

/// Hamiltonian parameters held constant over one sub-interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianSample {
    /// `ε_d`, rad·f_max.
    pub detuning: f64,
    /// `1 + ε_a`.
    pub amplitude_factor: f64,
    /// `φ`, rad.
    pub phase: f64,
    /// `|Ω|` without noise, rad·f_max.
    pub base_rabi: f64,
}

impl HamiltonianSample {
    pub fn noiseless(phase: f64, base_rabi: f64) -> Self {
        Self {
            detuning: 0.0,
            amplitude_factor: 1.0,
            phase,
            base_rabi,
        }
    }

    /// Rows of `H` in the `(|1⟩, |r⟩)` basis.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let omega = Complex64::from_polar(self.base_rabi * self.amplitude_factor, self.phase);
        [
            [Complex64::new(self.detuning, 0.0), omega.conj()],
            [omega, Complex64::new(-self.detuning, 0.0)],
        ]
    }

    fn is_finite(&self) -> bool {
        self.detuning.is_finite()
            && self.amplitude_factor.is_finite()
            && self.phase.is_finite()
            && self.base_rabi.is_finite()
    }
}

/// `exp(i H dt)` in closed form.
pub fn slice_propagator(h: &HamiltonianSample, dt: f64) -> Result<Unitary2> {
    if !h.is_finite() || !dt.is_finite() {
        return Err(Error::InvalidInput(format!(
            "non-finite Hamiltonian sample or step: {h:?}, dt = {dt}"
        )));
    }
    if dt < 0.0 {
        return Err(Error::InvalidInput(format!("negative time step {dt}")));
    }
    let coupling = h.base_rabi * h.amplitude_factor;
    Ok(exp_step(
        h.detuning,
        coupling,
        Complex64::from_polar(1.0, h.phase),
        dt,
    ))
}

/// `H = d σ_z + a (cos φ σ_x + sin φ σ_y)`, `ω = √(d² + a²)`:
/// `exp(i H dt) = cos(ω dt) I + i sin(ω dt) H / ω`.
#[inline]
fn exp_step(detuning: f64, coupling: f64, phase_unit: Complex64, dt: f64) -> Unitary2 {
    let omega = detuning.hypot(coupling);
    if omega == 0.0 {
        return Unitary2::identity();
    }
    let (s, c) = (omega * dt).sin_cos();
    let k = s / omega;
    let off = phase_unit * (coupling * k);
    // i · (a e^{∓iφ}) · sin/ω
    let upper = Complex64::new(off.im, off.re); // i · conj(off)
    let lower = Complex64::new(-off.im, off.re); // i · off
    Unitary2::from_rows([
        [Complex64::new(c, detuning * k), upper],
        [lower, Complex64::new(c, -detuning * k)],
    ])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub final_unitary: Unitary2,
    /// `∫ |⟨r|U(t)|1⟩|² dt` over the propagated window.
    pub rydberg_time: f64,
    pub infidelity: f64,
}

/// `1 − |Tr(U U₀†)|² / 4`, clamped to `[0, 1]`.
pub fn infidelity_of(u: &Unitary2) -> f64 {
    let overlap = (*u * Unitary2::pi_pulse().adjoint()).trace().norm_sqr();
    (1.0 - overlap / 4.0).clamp(0.0, 1.0)
}

/// `|⟨r|U|1⟩|²`.
pub fn rydberg_population(u: &Unitary2) -> f64 {
    u.transfer_amplitude().norm_sqr().min(1.0)
}

/// Propagates the whole schedule from `t = 0`.
pub fn propagate(
    schedule: &PulseSchedule,
    noise: &NoiseRealization,
    config: &DynamicsConfig,
) -> Result<TrajectoryResult> {
    propagate_window(
        schedule.phases(),
        schedule.slice_duration(),
        0.0,
        noise,
        config,
    )
}

/// Propagates consecutive slices of length `slice_duration`, the first
/// starting at `t_start`. Noise is sampled on the grid
/// `t_start + k · slice_duration / substeps`.
///
/// The returned unitary is the propagator of the window alone, so windows
/// compose by left multiplication.
pub fn propagate_window(
    phases: &[f64],
    slice_duration: f64,
    t_start: f64,
    noise: &NoiseRealization,
    config: &DynamicsConfig,
) -> Result<TrajectoryResult> {
    config.validate()?;
    if !(slice_duration.is_finite() && slice_duration > 0.0) || !t_start.is_finite() {
        return Err(Error::InvalidInput(format!(
            "invalid window: slice duration {slice_duration}, start {t_start}"
        )));
    }
    if let Some(p) = phases.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite phase {p}")));
    }

    let substeps = config.substeps;
    let dt = slice_duration / substeps as f64;
    let half = 0.5 * dt;
    let steps = phases.len() * substeps;
    let mut eps_a = Vec::with_capacity(steps);
    let mut eps_d = Vec::with_capacity(steps);
    noise.sample_grid(t_start, dt, steps, &mut eps_a, &mut eps_d);

    let mut u = Unitary2::identity();
    let mut rydberg_time = 0.0;
    for (slice, phase) in phases.iter().enumerate() {
        let phase_unit = Complex64::from_polar(1.0, *phase);
        for k in slice * substeps..(slice + 1) * substeps {
            let coupling = config.pulse_area * (1.0 + eps_a[k]);
            let half_step = exp_step(eps_d[k], coupling, phase_unit, half);
            let mid = half_step * u;
            rydberg_time += rydberg_population(&mid) * dt;
            u = half_step * mid;
        }
    }

    if !u.is_finite() {
        return Err(Error::InvalidInput("propagation produced non-finite values".into()));
    }
    let window = slice_duration * phases.len() as f64;
    Ok(TrajectoryResult {
        final_unitary: u,
        rydberg_time: rydberg_time.clamp(0.0, window),
        infidelity: infidelity_of(&u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::SpectralNoiseModel;
    use std::f64::consts::PI;

    fn sigma_x_rotation(angle: f64) -> Unitary2 {
        // exp(i angle σ_x)
        let (s, c) = angle.sin_cos();
        Unitary2::from_rows([
            [Complex64::new(c, 0.0), Complex64::new(0.0, s)],
            [Complex64::new(0.0, s), Complex64::new(c, 0.0)],
        ])
    }

    #[test]
    fn quarter_period_slice_is_the_target_pi_pulse() {
        let h = HamiltonianSample::noiseless(0.0, TAU);
        let u = slice_propagator(&h, 0.25).unwrap();
        assert!(u.max_abs_diff(&Unitary2::pi_pulse()) < 1e-15);
    }

    #[test]
    fn zero_time_step_is_identity() {
        let h = HamiltonianSample {
            detuning: 0.7,
            amplitude_factor: 1.2,
            phase: 2.1,
            base_rabi: TAU,
        };
        assert_eq!(slice_propagator(&h, 0.0).unwrap(), Unitary2::identity());
    }

    #[test]
    fn pure_detuning_is_diagonal_phase() {
        let (d, dt) = (1.3, 0.41);
        let h = HamiltonianSample {
            detuning: d,
            amplitude_factor: 0.0,
            phase: 0.9,
            base_rabi: TAU,
        };
        let u = slice_propagator(&h, dt).unwrap();
        let expected = Unitary2::from_rows([
            [Complex64::from_polar(1.0, d * dt), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, -d * dt)],
        ]);
        assert!(u.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn degenerate_hamiltonian_returns_exact_identity() {
        let h = HamiltonianSample {
            detuning: 0.0,
            amplitude_factor: 0.0,
            phase: 0.3,
            base_rabi: TAU,
        };
        assert_eq!(slice_propagator(&h, 3.0).unwrap(), Unitary2::identity());
    }

    #[test]
    fn rejects_non_finite_inputs() {
        let mut h = HamiltonianSample::noiseless(0.0, TAU);
        h.detuning = f64::NAN;
        assert!(slice_propagator(&h, 0.1).is_err());
        let h = HamiltonianSample::noiseless(0.0, TAU);
        assert!(slice_propagator(&h, f64::INFINITY).is_err());
        assert!(slice_propagator(&h, -0.1).is_err());
    }

    #[test]
    fn closed_form_matches_series_exponential() {
        // independent route: Taylor series of exp(i H dt) on the full matrix
        let h = HamiltonianSample {
            detuning: 0.8,
            amplitude_factor: 1.1,
            phase: 1.2,
            base_rabi: TAU,
        };
        let dt = 0.07;
        let m = h.matrix();
        let ih = Unitary2::from_rows([
            [m[0][0] * Complex64::new(0.0, dt), m[0][1] * Complex64::new(0.0, dt)],
            [m[1][0] * Complex64::new(0.0, dt), m[1][1] * Complex64::new(0.0, dt)],
        ]);
        let mut term = Unitary2::identity();
        let mut sum = Unitary2::identity();
        for n in 1..40 {
            term = (term * ih).scaled(Complex64::new(1.0 / n as f64, 0.0));
            let s = [[0, 0], [0, 1], [1, 0], [1, 1]].map(|[r, c]| sum.entry(r, c) + term.entry(r, c));
            sum = Unitary2::from_rows([[s[0], s[1]], [s[2], s[3]]]);
        }
        let u = slice_propagator(&h, dt).unwrap();
        assert!(u.max_abs_diff(&sum) < 1e-14);
    }

    #[test]
    fn infidelity_reference_values() {
        assert_eq!(infidelity_of(&Unitary2::pi_pulse()), 0.0);
        assert!((infidelity_of(&Unitary2::identity()) - 1.0).abs() < 1e-15);
        for theta in [0.3, 1.7, -2.9, PI] {
            let u = Unitary2::pi_pulse().scaled(Complex64::from_polar(1.0, theta));
            assert!(infidelity_of(&u) < 1e-15, "theta = {theta}");
        }
    }

    #[test]
    fn rydberg_population_reference_values() {
        assert_eq!(rydberg_population(&Unitary2::identity()), 0.0);
        assert_eq!(rydberg_population(&Unitary2::pi_pulse()), 1.0);
        for t in [0.03, 0.1, 0.2, 0.31] {
            let p = rydberg_population(&sigma_x_rotation(TAU * t));
            assert!((p - (TAU * t).sin().powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn noiseless_constant_pulse_reaches_target() {
        let model = SpectralNoiseModel::with_level(0.0).unwrap();
        let noise = model.silent_realization();
        let sched = PulseSchedule::constant(0.0, 50, 0.25).unwrap();
        let cfg = DynamicsConfig::new(TAU, 1).unwrap();
        let r = propagate(&sched, &noise, &cfg).unwrap();
        assert!(r.final_unitary.max_abs_diff(&Unitary2::pi_pulse()) < 1e-12);
        assert!(r.infidelity <= 1e-10);
    }

    #[test]
    fn full_rotation_gives_minus_identity() {
        let noise = SpectralNoiseModel::with_level(0.0).unwrap().silent_realization();
        let sched = PulseSchedule::constant(0.0, 50, 0.5).unwrap();
        let r = propagate(&sched, &noise, &DynamicsConfig::default()).unwrap();
        let minus_id = Unitary2::identity().scaled(Complex64::new(-1.0, 0.0));
        assert!(r.final_unitary.max_abs_diff(&minus_id) < 1e-12);
        assert!((r.infidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rydberg_time_of_noiseless_pi_pulse_is_one_eighth() {
        // the midpoint rule integrates sin²(2πt) over a quarter period exactly
        let noise = SpectralNoiseModel::with_level(0.0).unwrap().silent_realization();
        let sched = PulseSchedule::constant(0.0, 50, 0.25).unwrap();
        for substeps in [1, 2, 4, 8, 16, 256] {
            let cfg = DynamicsConfig::new(TAU, substeps).unwrap();
            let r = propagate(&sched, &noise, &cfg).unwrap();
            assert!((r.rydberg_time - 0.125).abs() < 1e-12, "substeps = {substeps}");
        }
    }

    #[test]
    fn unit_duration_convention_is_a_pi_pulse_at_t_one() {
        let noise = SpectralNoiseModel::with_level(0.0).unwrap().silent_realization();
        let cfg = DynamicsConfig::new(UNIT_DURATION_PULSE_AREA, 8).unwrap();
        assert!((cfg.pi_pulse_duration() - 1.0).abs() < 1e-15);
        let sched = PulseSchedule::constant(0.0, 50, 1.0).unwrap();
        let r = propagate(&sched, &noise, &cfg).unwrap();
        assert!(r.infidelity < 1e-12);
        assert!((r.rydberg_time - 0.5).abs() < 1e-6);
    }

    #[test]
    fn schedule_validation() {
        assert!(PulseSchedule::new(vec![], 1.0).is_err());
        assert!(PulseSchedule::new(vec![0.0, 7.0], 1.0).is_err());
        assert!(PulseSchedule::new(vec![0.0, -0.1], 1.0).is_err());
        assert!(PulseSchedule::new(vec![0.0, TAU], 1.0).is_ok());
        assert!(PulseSchedule::new(vec![0.0], 0.0).is_err());
        assert!(PulseSchedule::new(vec![0.0], f64::NAN).is_err());
        assert!(DynamicsConfig::new(TAU, 0).is_err());
        assert!(DynamicsConfig::new(-1.0, 4).is_err());
    }
}
