//! Normalization, reference-direction association and niche-preserving
//! truncation of the last accepted front.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::reference::ReferencePointSet;

/// Weight given to off-axis objectives by the achievement scalarizing
/// function that locates extreme points.
const ASF_EPSILON: f64 = 1e-6;
const MIN_INTERCEPT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub reference: usize,
    /// Perpendicular distance from the normalized objective vector to the
    /// reference line.
    pub distance: f64,
}

/// Normalized objective vectors: translated by the ideal point, divided by the
/// intercepts of the hyperplane through the extreme points (or by the
/// per-objective maxima when that hyperplane is degenerate).
pub fn normalize<T: AsRef<[f64]>>(objectives: &[T]) -> Vec<Vec<f64>> {
    let Some(first) = objectives.first() else {
        return Vec::new();
    };
    let m = first.as_ref().len();
    let mut ideal = vec![f64::INFINITY; m];
    for f in objectives {
        for (z, v) in ideal.iter_mut().zip(f.as_ref()) {
            *z = z.min(*v);
        }
    }
    let translated: Vec<Vec<f64>> = objectives
        .iter()
        .map(|f| f.as_ref().iter().zip(&ideal).map(|(v, z)| v - z).collect())
        .collect();

    let intercepts = hyperplane_intercepts(&translated, m).unwrap_or_else(|| {
        (0..m)
            .map(|j| {
                let max = translated.iter().map(|f| f[j]).fold(0.0, f64::max);
                if max > MIN_INTERCEPT {
                    max
                } else {
                    1.0
                }
            })
            .collect()
    });

    translated
        .into_iter()
        .map(|f| f.iter().zip(&intercepts).map(|(v, a)| v / a).collect())
        .collect()
}

fn hyperplane_intercepts(translated: &[Vec<f64>], m: usize) -> Option<Vec<f64>> {
    let mut extremes = DMatrix::<f64>::zeros(m, m);
    for axis in 0..m {
        let asf = |f: &Vec<f64>| {
            f.iter()
                .enumerate()
                .map(|(k, v)| v / if k == axis { 1.0 } else { ASF_EPSILON })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut best = 0;
        let mut best_value = f64::INFINITY;
        for (i, f) in translated.iter().enumerate() {
            let v = asf(f);
            if v < best_value {
                best = i;
                best_value = v;
            }
        }
        for k in 0..m {
            extremes[(axis, k)] = translated[best][k];
        }
    }
    let b = extremes.lu().solve(&DVector::from_element(m, 1.0))?;
    let intercepts: Vec<f64> = b.iter().map(|x| 1.0 / x).collect();
    if intercepts.iter().all(|a| a.is_finite() && *a > MIN_INTERCEPT) {
        Some(intercepts)
    } else {
        None
    }
}

fn perpendicular_distance(point: &[f64], direction: &[f64]) -> f64 {
    let norm2: f64 = direction.iter().map(|w| w * w).sum();
    let t = point.iter().zip(direction).map(|(f, w)| f * w).sum::<f64>() / norm2;
    point
        .iter()
        .zip(direction)
        .map(|(f, w)| (f - t * w).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Nearest reference direction for each normalized vector; ties go to the
/// lowest reference index.
pub fn associate(normalized: &[Vec<f64>], refs: &ReferencePointSet) -> Vec<Association> {
    normalized
        .iter()
        .map(|f| {
            let mut best = Association {
                reference: 0,
                distance: f64::INFINITY,
            };
            for (j, w) in refs.points().iter().enumerate() {
                let d = perpendicular_distance(f, w);
                if d < best.distance {
                    best = Association {
                        reference: j,
                        distance: d,
                    };
                }
            }
            best
        })
        .collect()
}

pub fn normalize_and_associate<T: AsRef<[f64]>>(
    objectives: &[T],
    refs: &ReferencePointSet,
) -> Vec<Association> {
    associate(&normalize(objectives), refs)
}

/// Picks `slots` members of `last_front` (ids into `associations`).
///
/// `niche_counts[j]` is the number of already-selected individuals associated
/// with reference `j`; it is updated as members are chosen.
pub fn niching_select<R: Rng + ?Sized>(
    last_front: &[usize],
    associations: &[Association],
    niche_counts: &mut [usize],
    slots: usize,
    rng: &mut R,
) -> Vec<usize> {
    if slots >= last_front.len() {
        return last_front.to_vec();
    }
    let refs = niche_counts.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); refs];
    for &id in last_front {
        members[associations[id].reference].push(id);
    }
    let mut excluded = vec![false; refs];
    let mut chosen = Vec::with_capacity(slots);

    while chosen.len() < slots {
        let Some(min_count) = (0..refs)
            .filter(|&j| !excluded[j])
            .map(|j| niche_counts[j])
            .min()
        else {
            break;
        };
        let tied: Vec<usize> = (0..refs)
            .filter(|&j| !excluded[j] && niche_counts[j] == min_count)
            .collect();
        let j = tied[rng.random_range(0..tied.len())];
        if members[j].is_empty() {
            excluded[j] = true;
            continue;
        }
        let pick = if niche_counts[j] == 0 {
            let mut best = 0;
            for (k, &id) in members[j].iter().enumerate() {
                if associations[id].distance < associations[members[j][best]].distance {
                    best = k;
                }
            }
            best
        } else {
            rng.random_range(0..members[j].len())
        };
        chosen.push(members[j].remove(pick));
        niche_counts[j] += 1;
    }
    chosen
}
