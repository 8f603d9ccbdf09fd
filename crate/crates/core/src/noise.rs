//! Band-limited pink noise as a random trigonometric series.
//!
//! A unit-variance process is built from `M` harmonics on a log-spaced grid
//! `ν_n = ν_max^{n/M}`, `n = 0..M-1`:
//!
//! ```text
//! X(t) = (1/√M) Σ_n [a_n cos(2π ν_n t) + b_n sin(2π ν_n t)],   a_n, b_n ~ N(0, 1) i.i.d.
//! ```
//!
//! Equal variance per harmonic on a log-spaced grid gives a spectral density
//! proportional to `1/f` between the cutoffs, and the covariance is
//! `E[X(t+h) X(t)] = (1/M) Σ_n cos(2π ν_n h)`.
//!
//! Two independent copies drive the two channels: relative amplitude noise
//! `ε_a = σ_a X_a` and additive detuning `ε_d = σ_d X_d` with
//! `σ_a = level` and `σ_d = 2π · level`.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const DEFAULT_HARMONIC_COUNT: usize = 25;
pub const DEFAULT_MAX_FREQUENCY: f64 = 100.0;

/// Grid points between exact re-anchors of the phasor recurrence in
/// [`NoiseRealization::sample_grid`].
const REANCHOR_INTERVAL: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Amplitude,
    Detuning,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralNoiseModel {
    noise_level: f64,
    max_frequency: f64,
    frequencies: Arc<[f64]>,
}

impl SpectralNoiseModel {
    /// Pink noise with `harmonic_count` log-spaced harmonics in `[1, max_frequency)`
    /// (units of `f_max`), scaled to `noise_level` (a fraction of `2π f_max`).
    pub fn pink(noise_level: f64, harmonic_count: usize, max_frequency: f64) -> Result<Self> {
        if !(noise_level.is_finite() && noise_level >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise level must be finite and non-negative, got {noise_level}"
            )));
        }
        if harmonic_count == 0 {
            return Err(Error::InvalidInput("harmonic count must be at least 1".into()));
        }
        if !(max_frequency.is_finite() && max_frequency >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "max frequency must be finite and >= 1, got {max_frequency}"
            )));
        }
        if harmonic_count > 1 && max_frequency <= 1.0 {
            return Err(Error::InvalidInput(
                "max frequency must exceed 1 when more than one harmonic is used".into(),
            ));
        }
        let m = harmonic_count as f64;
        let frequencies: Arc<[f64]> = (0..harmonic_count)
            .map(|n| max_frequency.powf(n as f64 / m))
            .collect();
        Ok(Self {
            noise_level,
            max_frequency,
            frequencies,
        })
    }

    /// 25 harmonics up to `100 f_max`.
    pub fn with_level(noise_level: f64) -> Result<Self> {
        Self::pink(noise_level, DEFAULT_HARMONIC_COUNT, DEFAULT_MAX_FREQUENCY)
    }

    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    pub fn harmonic_count(&self) -> usize {
        self.frequencies.len()
    }

    pub fn max_frequency(&self) -> f64 {
        self.max_frequency
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Standard deviation of the relative amplitude noise `ε_a`.
    pub fn amplitude_level(&self) -> f64 {
        self.noise_level
    }

    /// Standard deviation of the detuning noise `ε_d`, in rad·f_max.
    pub fn detuning_level(&self) -> f64 {
        self.noise_level * TAU
    }

    /// `C_M(h) = (1/M) Σ_n cos(2π ν_n h)`.
    pub fn covariance_theoretical(&self, lag: f64) -> f64 {
        let sum: f64 = self.frequencies.iter().map(|nu| (TAU * nu * lag).cos()).sum();
        sum / self.frequencies.len() as f64
    }

    /// Draws `4M` standard normals: amplitude `(a_n, b_n)` pairs first, then
    /// detuning pairs.
    pub fn sample_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> NoiseRealization {
        let m = self.harmonic_count();
        let mut draw = |count: usize| -> Vec<(f64, f64)> {
            (0..count)
                .map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        };
        let amplitude = draw(m);
        let detuning = draw(m);
        NoiseRealization::new(self, amplitude, detuning)
    }

    /// A realization whose channels vanish identically.
    pub fn silent_realization(&self) -> NoiseRealization {
        let zeros = vec![(0.0, 0.0); self.harmonic_count()];
        NoiseRealization::new(self, zeros.clone(), zeros)
    }
}

/// One draw of both noise channels. Evaluation is a pure function of the
/// stored coefficients.
#[derive(Clone, Debug)]
pub struct NoiseRealization {
    frequencies: Arc<[f64]>,
    amplitude: Vec<(f64, f64)>,
    detuning: Vec<(f64, f64)>,
    amplitude_level: f64,
    detuning_level: f64,
}

impl NoiseRealization {
    /// Builds a realization from explicit unit coefficients `(a_n, b_n)` per
    /// channel. Panics if the lengths do not match the model's harmonic count.
    pub fn new(
        model: &SpectralNoiseModel,
        amplitude: Vec<(f64, f64)>,
        detuning: Vec<(f64, f64)>,
    ) -> Self {
        assert_eq!(amplitude.len(), model.harmonic_count());
        assert_eq!(detuning.len(), model.harmonic_count());
        Self {
            frequencies: Arc::clone(&model.frequencies),
            amplitude,
            detuning,
            amplitude_level: model.amplitude_level(),
            detuning_level: model.detuning_level(),
        }
    }

    pub fn coefficients(&self, channel: Channel) -> &[(f64, f64)] {
        match channel {
            Channel::Amplitude => &self.amplitude,
            Channel::Detuning => &self.detuning,
        }
    }

    /// Unit-variance process `X(t)` of one channel.
    pub fn unit_process(&self, channel: Channel, t: f64) -> f64 {
        let coefficients = self.coefficients(channel);
        let sum: f64 = self
            .frequencies
            .iter()
            .zip(coefficients)
            .map(|(nu, (a, b))| {
                let (s, c) = (TAU * nu * t).sin_cos();
                a * c + b * s
            })
            .sum();
        sum / (self.frequencies.len() as f64).sqrt()
    }

    /// `(ε_a(t), ε_d(t))`.
    pub fn evaluate(&self, t: f64) -> (f64, f64) {
        (
            self.amplitude_level * self.unit_process(Channel::Amplitude, t),
            self.detuning_level * self.unit_process(Channel::Detuning, t),
        )
    }

    pub fn is_silent(&self) -> bool {
        self.amplitude_level == 0.0 && self.detuning_level == 0.0
    }

    /// Fills `amplitude` and `detuning` with `ε_a`, `ε_d` at `t0 + k·dt` for
    /// `k = 0..count`. Uses a phasor recurrence re-anchored with exact
    /// trigonometry every few hundred points; agrees with [`Self::evaluate`]
    /// to rounding.
    pub fn sample_grid(
        &self,
        t0: f64,
        dt: f64,
        count: usize,
        amplitude: &mut Vec<f64>,
        detuning: &mut Vec<f64>,
    ) {
        amplitude.clear();
        detuning.clear();
        if self.is_silent() {
            amplitude.resize(count, 0.0);
            detuning.resize(count, 0.0);
            return;
        }
        let norm = 1.0 / (self.frequencies.len() as f64).sqrt();
        // X(t) = Re Σ (a - i b) e^{iωt}
        let weights: Vec<(Complex64, Complex64)> = self
            .amplitude
            .iter()
            .zip(&self.detuning)
            .map(|((aa, ba), (ad, bd))| {
                (
                    Complex64::new(*aa, -*ba) * (self.amplitude_level * norm),
                    Complex64::new(*ad, -*bd) * (self.detuning_level * norm),
                )
            })
            .collect();
        let steps: Vec<Complex64> = self
            .frequencies
            .iter()
            .map(|nu| Complex64::from_polar(1.0, TAU * nu * dt))
            .collect();
        let mut phasors = vec![Complex64::new(0.0, 0.0); self.frequencies.len()];

        for k in 0..count {
            if k % REANCHOR_INTERVAL == 0 {
                let t = t0 + k as f64 * dt;
                for (p, nu) in phasors.iter_mut().zip(self.frequencies.iter()) {
                    *p = Complex64::from_polar(1.0, TAU * nu * t);
                }
            }
            let mut ea = 0.0;
            let mut ed = 0.0;
            for ((p, (wa, wd)), step) in phasors.iter_mut().zip(&weights).zip(&steps) {
                ea += wa.re * p.re - wa.im * p.im;
                ed += wd.re * p.re - wd.im * p.im;
                *p *= step;
            }
            amplitude.push(ea);
            detuning.push(ed);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frequency_grid_is_log_spaced_and_increasing() {
        let model = SpectralNoiseModel::with_level(0.1).unwrap();
        let f = model.frequencies();
        assert_eq!(f.len(), 25);
        assert_eq!(f[0], 1.0);
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        // top harmonic sits at 100^{24/25}
        assert!((f[24] - 100f64.powf(0.96)).abs() < 1e-12);
        assert!(f[24] < 100.0);
        let ratio = f[1] / f[0];
        for w in f.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_levels_follow_noise_level() {
        let model = SpectralNoiseModel::with_level(0.2).unwrap();
        assert_eq!(model.amplitude_level(), 0.2);
        assert!((model.detuning_level() - 0.2 * TAU).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_models() {
        assert!(SpectralNoiseModel::pink(-0.1, 25, 100.0).is_err());
        assert!(SpectralNoiseModel::pink(f64::NAN, 25, 100.0).is_err());
        assert!(SpectralNoiseModel::pink(0.1, 0, 100.0).is_err());
        assert!(SpectralNoiseModel::pink(0.1, 3, 1.0).is_err());
        assert!(SpectralNoiseModel::pink(0.1, 1, 1.0).is_ok());
    }

    #[test]
    fn zero_level_gives_zero_noise() {
        let model = SpectralNoiseModel::with_level(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = model.sample_realization(&mut rng);
        for t in [0.0, 0.13, 0.5, 7.25] {
            assert_eq!(r.evaluate(t), (0.0, 0.0));
        }
    }

    #[test]
    fn single_harmonic_is_a_cosine() {
        let model = SpectralNoiseModel::pink(1.0, 1, 100.0).unwrap();
        let r = NoiseRealization::new(&model, vec![(1.0, 0.0)], vec![(0.0, 0.0)]);
        for t in [0.0, 0.1, 0.25, 0.37, 1.9] {
            assert_eq!(r.unit_process(Channel::Amplitude, t), (TAU * t).cos());
        }
    }

    #[test]
    fn value_at_zero_is_scaled_sum_of_cosine_coefficients() {
        let model = SpectralNoiseModel::with_level(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = model.sample_realization(&mut rng);
        let expected: f64 = r.coefficients(Channel::Detuning).iter().map(|(a, _)| a).sum::<f64>()
            / 5.0;
        assert!((r.unit_process(Channel::Detuning, 0.0) - expected).abs() < 1e-14);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let model = SpectralNoiseModel::with_level(0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = model.sample_realization(&mut rng);
        let first = r.evaluate(0.4321);
        for _ in 0..10 {
            let again = r.evaluate(0.4321);
            assert_eq!(first.0.to_bits(), again.0.to_bits());
            assert_eq!(first.1.to_bits(), again.1.to_bits());
        }
    }

    #[test]
    fn covariance_limits() {
        let model = SpectralNoiseModel::with_level(0.1).unwrap();
        assert!((model.covariance_theoretical(0.0) - 1.0).abs() < 1e-15);
        let single = SpectralNoiseModel::pink(0.1, 1, 100.0).unwrap();
        for h in [0.1, 0.3, 2.2] {
            assert!((single.covariance_theoretical(h) - (TAU * h).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn covariance_matches_direct_summation_at_half_lag() {
        // independent oracle: explicit 25-term loop with 10^{2n/25} frequencies
        let mut oracle = 0.0;
        for n in 0..25 {
            let nu = 10f64.powf(2.0 * n as f64 / 25.0);
            oracle += (2.0 * std::f64::consts::PI * nu * 0.5).cos();
        }
        oracle /= 25.0;
        let model = SpectralNoiseModel::with_level(0.1).unwrap();
        assert!((model.covariance_theoretical(0.5) - oracle).abs() < 1e-12);
    }

    #[test]
    fn grid_sampler_matches_direct_evaluation() {
        let model = SpectralNoiseModel::with_level(0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let r = model.sample_realization(&mut rng);
        let (t0, dt, count) = (0.37, 1.0 / 400.0, 2000);
        let (mut a, mut d) = (Vec::new(), Vec::new());
        r.sample_grid(t0, dt, count, &mut a, &mut d);
        for k in 0..count {
            let (ea, ed) = r.evaluate(t0 + k as f64 * dt);
            assert!((a[k] - ea).abs() < 1e-11, "k={k}");
            assert!((d[k] - ed).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn channels_use_independent_draws() {
        let model = SpectralNoiseModel::with_level(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = model.sample_realization(&mut rng);
        assert_ne!(r.coefficients(Channel::Amplitude), r.coefficients(Channel::Detuning));
    }
}
