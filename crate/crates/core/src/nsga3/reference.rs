//! Das–Dennis structured reference points on the unit simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper limit on generated points; beyond this the lattice is useless anyway.
const MAX_POINTS: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferencePointSet {
    points: Vec<Vec<f64>>,
}

impl ReferencePointSet {
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn objective_count(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

/// `C(n, k)` with overflow detection.
fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// All points with coordinates in `{0, 1/P, …, 1}` summing to one; there are
/// `C(M + P − 1, P)` of them.
pub fn das_dennis_points(objectives: usize, divisions: usize) -> Result<ReferencePointSet> {
    if objectives < 2 || divisions < 1 {
        return Err(Error::InvalidInput(format!(
            "Das-Dennis lattice needs M >= 2 and P >= 1, got M = {objectives}, P = {divisions}"
        )));
    }
    let overflow = Error::ReferencePointOverflow {
        objectives,
        divisions,
    };
    let n = (objectives as u64 + divisions as u64 - 1) as u64;
    let count = binomial(n, divisions as u64).ok_or(overflow)?;
    if count > MAX_POINTS {
        return Err(Error::ReferencePointOverflow {
            objectives,
            divisions,
        });
    }

    let mut points = Vec::with_capacity(count as usize);
    let mut current = vec![0usize; objectives];
    fill(&mut points, &mut current, 0, divisions, divisions);
    Ok(ReferencePointSet { points })
}

fn fill(out: &mut Vec<Vec<f64>>, current: &mut [usize], axis: usize, left: usize, total: usize) {
    if axis + 1 == current.len() {
        current[axis] = left;
        out.push(current.iter().map(|&k| k as f64 / total as f64).collect());
        return;
    }
    for k in 0..=left {
        current[axis] = k;
        fill(out, current, axis + 1, left - k, total);
    }
}
