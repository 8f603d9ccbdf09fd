//! Oracles and fixtures shared by the integration tests and the acceptance
//! binary.
#![allow(dead_code)]

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use rydopt::nsga3::{dominates, polynomial_mutation, sbx_crossover};
use rydopt::problem::{BatchKey, Bounds, Evaluation, Problem};
use rydopt::records::parse_genomes;
use rydopt::{Result, SpectralNoiseModel};

pub const REFERENCE_PHASES: &str = include_str!("../../fixtures/reference_phases.txt");

pub fn reference_phases() -> Vec<f64> {
    parse_genomes(REFERENCE_PHASES).unwrap().remove(0)
}

/// Fronts by repeated peeling: front k is every remaining point no remaining
/// point dominates.
pub fn brute_force_fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates(&points[j], &points[i])))
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Mean and standard error of a sample.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unit-variance process values `X_a(t)` of `count` independent realizations.
pub fn unit_samples(model: &SpectralNoiseModel, count: usize, seed: u64, t: f64, lag: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = model.sample_realization(&mut rng);
            let a = r.unit_process(rydopt::noise::Channel::Amplitude, t);
            let b = r.unit_process(rydopt::noise::Channel::Amplitude, t + lag);
            (a, b)
        })
        .collect()
}

/// `(empirical variance of X(0), its standard error)`.
pub fn variance_at_zero(model: &SpectralNoiseModel, count: usize, seed: u64) -> (f64, f64) {
    let squares: Vec<f64> = unit_samples(model, count, seed, 0.0, 0.0)
        .iter()
        .map(|(a, _)| a * a)
        .collect();
    mean_se(&squares)
}

/// `(empirical E[X(t) X(t + lag)], standard error)` at a random `t` per draw.
pub fn autocovariance(model: &SpectralNoiseModel, lag: f64, count: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    let products: Vec<f64> = (0..count)
        .map(|_| {
            let r = model.sample_realization(&mut noise_rng);
            let t = rng.random::<f64>() * 10.0;
            let a = r.unit_process(rydopt::noise::Channel::Detuning, t);
            let b = r.unit_process(rydopt::noise::Channel::Detuning, t + lag);
            a * b
        })
        .collect();
    mean_se(&products)
}

/// Log-log slope of the band-averaged power spectral density of the
/// amplitude channel between `f_lo` and `f_hi`.
///
/// The process has a line spectrum: equal power at log-spaced frequencies.
/// Each band spans two adjacent lines with edges midway (in log frequency)
/// between lines, so its mean density is `power / bandwidth`.
pub fn spectral_slope(model: &SpectralNoiseModel, realizations: usize, seed: u64, f_lo: f64, f_hi: f64) -> f64 {
    let window = 64.0;
    let dt = 1.0 / (8.0 * model.max_frequency());
    let n = (window / dt) as usize;
    let hann: Vec<f64> = (0..n)
        .map(|k| 0.5 - 0.5 * (TAU * k as f64 / n as f64).cos())
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut power = vec![0.0; n / 2];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut amp, mut det) = (Vec::new(), Vec::new());
    for _ in 0..realizations {
        let r = model.sample_realization(&mut rng);
        r.sample_grid(0.0, dt, n, &mut amp, &mut det);
        let mut buf: Vec<Complex<f64>> = amp
            .iter()
            .zip(&hann)
            .map(|(x, w)| Complex::new(x * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p += c.norm_sqr();
        }
    }
    let df = 1.0 / window;
    let lines: Vec<f64> = model.frequencies().to_vec();
    let log_step = (lines[1] / lines[0]).ln();
    let inside: Vec<usize> = (0..lines.len())
        .filter(|&i| lines[i] >= f_lo && lines[i] <= f_hi)
        .collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for pair in inside.chunks_exact(2) {
        let lo = lines[pair[0]] * (-0.5 * log_step).exp();
        let hi = lines[pair[1]] * (0.5 * log_step).exp();
        let (k_lo, k_hi) = ((lo / df).ceil() as usize, (hi / df).floor() as usize);
        let band: f64 = power[k_lo..=k_hi].iter().sum();
        xs.push((lo * hi).sqrt().ln());
        ys.push((band / (hi - lo)).ln());
    }
    let (mx, my) = (
        xs.iter().sum::<f64>() / xs.len() as f64,
        ys.iter().sum::<f64>() / ys.len() as f64,
    );
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `min (x², (x − 2)²)` on `x ∈ [−10, 10]` (extra genes ignored).
pub struct Schaffer {
    pub bounds: Bounds,
}

impl Schaffer {
    pub fn new() -> Self {
        Self {
            bounds: Bounds::uniform(1, -10.0, 10.0).unwrap(),
        }
    }

    /// Area dominated by the true front `f₂ = (√f₁ − 2)²`, `f₁ ∈ [0, 4]`,
    /// inside the box bounded by `(4, 4)`, by the midpoint rule.
    pub fn optimal_hypervolume() -> f64 {
        let n = 200_000;
        let h = 4.0 / n as f64;
        (0..n)
            .map(|i| {
                let f1 = (i as f64 + 0.5) * h;
                (4.0 - (f1.sqrt() - 2.0).powi(2)) * h
            })
            .sum()
    }
}

impl Problem for Schaffer {
    fn objective_count(&self) -> usize {
        2
    }
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }
    fn worst_objectives(&self) -> Vec<f64> {
        vec![f64::MAX, f64::MAX]
    }
    fn evaluate(&self, _: BatchKey, genomes: &[Vec<f64>]) -> Vec<Result<Evaluation>> {
        genomes
            .iter()
            .map(|g| Ok(Evaluation::exact(vec![g[0] * g[0], (g[0] - 2.0).powi(2)])))
            .collect()
    }
}

/// Largest per-variable `|mean(children) − mean(parents)|` over `trials`
/// crossovers of fixed parents, in units of the children's standard error.
pub fn sbx_mean_z(trials: usize, seed: u64) -> f64 {
    let bounds = Bounds::uniform(3, -100.0, 100.0).unwrap();
    let p1 = [0.2, -1.0, 3.0];
    let p2 = [0.8, 1.5, -2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let children: Vec<(Vec<f64>, Vec<f64>)> = (0..trials)
        .map(|_| sbx_crossover(&p1, &p2, &bounds, 1.0, 2.0, &mut rng))
        .collect();
    (0..3)
        .map(|i| {
            let values: Vec<f64> = children.iter().flat_map(|(a, b)| [a[i], b[i]]).collect();
            let (m, se) = mean_se(&values);
            (m - 0.5 * (p1[i] + p2[i])).abs() / se
        })
        .fold(0.0, f64::max)
}

/// `(observed mutated fraction, expected, standard error)` for `trials`
/// mutations of a 51-gene genome at `p_m = 1/51`.
pub fn mutation_rate(trials: usize, seed: u64) -> (f64, f64, f64) {
    let genes = 51;
    let p = 1.0 / genes as f64;
    let bounds = Bounds::uniform(genes, 0.0, TAU).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mutated = 0usize;
    for _ in 0..trials {
        let mut g: Vec<f64> = (0..genes).map(|_| rng.random::<f64>() * TAU).collect();
        mutated += polynomial_mutation(&mut g, &bounds, p, 20.0, &mut rng);
        assert!(bounds.contains(&g));
    }
    let n = (trials * genes) as f64;
    let observed = mutated as f64 / n;
    (observed, p, (p * (1.0 - p) / n).sqrt())
}

/// A seconds-scale NSGA-III experiment writing into `dir`.
pub fn small_nsga3(dir: &std::path::Path, threads: usize) -> rydopt::config::RunConfig {
    let text = format!(
        r#"
[run]
algorithm = "nsga3"
seed = 7
output_dir = "{}"
threads = {threads}
checkpoint_every = 2

[noise]
level = 0.1

[dynamics]
pulse_area = 1.5707963267948966
slice_count = 10
substeps = 4

[evaluation]
trajectories = 20

[nsga3]
population_size = 8
generations = 5
divisions = 7
"#,
        dir.display()
    );
    rydopt::config::RunConfig::from_toml_str(&text, std::path::Path::new("<small nsga3>")).unwrap()
}

/// A seconds-scale CMA-ES experiment writing into `dir`.
pub fn small_cmaes(dir: &std::path::Path, threads: usize) -> rydopt::config::RunConfig {
    let text = format!(
        r#"
[run]
algorithm = "cmaes"
seed = 3
output_dir = "{}"
threads = {threads}
checkpoint_every = 3

[noise]
level = 0.1

[dynamics]
pulse_area = 1.5707963267948966
slice_count = 10
substeps = 4

[evaluation]
trajectories = 20

[duration]
mode = "fixed"

[cmaes]
population_size = 8
generations = 7
reevaluate_every = 3
"#,
        dir.display()
    );
    rydopt::config::RunConfig::from_toml_str(&text, std::path::Path::new("<small cmaes>")).unwrap()
}

/// Every `.csv` file in `dir`, by name.
pub fn csv_outputs(dir: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}
