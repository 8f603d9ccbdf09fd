//! Real-coded variation: simulated binary crossover and bounded polynomial
//! mutation.

use rand::Rng;

use crate::problem::Bounds;

/// SBX spread factor for a uniform draw `u ∈ [0, 1)`.
fn spread_factor(u: f64, eta: f64) -> f64 {
    let exponent = 1.0 / (eta + 1.0);
    if u <= 0.5 {
        (2.0 * u).powf(exponent)
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(exponent)
    }
}

/// Simulated binary crossover. With probability `1 − p_c` the children are
/// copies of the parents; otherwise every variable gets its own spread
/// factor `β` and the children `½[(1 ± β) x₁ + (1 ∓ β) x₂]`, clipped to the
/// bounds. Before clipping the children's mean equals the parents' mean.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    bounds: &Bounds,
    probability: f64,
    eta: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.random::<f64>() >= probability {
        return (c1, c2);
    }
    for i in 0..p1.len() {
        let beta = spread_factor(rng.random::<f64>(), eta);
        let mean = 0.5 * (p1[i] + p2[i]);
        let half_gap = 0.5 * (p2[i] - p1[i]);
        c1[i] = mean - beta * half_gap;
        c2[i] = mean + beta * half_gap;
    }
    bounds.clip(&mut c1);
    bounds.clip(&mut c2);
    (c1, c2)
}

/// Bounded polynomial mutation; each gene mutates independently with
/// probability `p_m`. Returns how many genes were selected for mutation.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    genome: &mut [f64],
    bounds: &Bounds,
    probability: f64,
    eta: f64,
    rng: &mut R,
) -> usize {
    let mut mutated = 0;
    let exponent = 1.0 / (eta + 1.0);
    for (i, x) in genome.iter_mut().enumerate() {
        if rng.random::<f64>() >= probability {
            continue;
        }
        mutated += 1;
        let (lo, hi) = (bounds.lower()[i], bounds.upper()[i]);
        let width = hi - lo;
        if width <= 0.0 {
            continue;
        }
        let delta1 = (*x - lo) / width;
        let delta2 = (hi - *x) / width;
        let u: f64 = rng.random();
        let deltaq = if u < 0.5 {
            let xy = 1.0 - delta1;
            let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
            val.powf(exponent) - 1.0
        } else {
            let xy = 1.0 - delta2;
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
            1.0 - val.powf(exponent)
        };
        *x = (*x + deltaq * width).clamp(lo, hi);
    }
    mutated
}
