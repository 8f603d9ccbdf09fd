//! Fast non-dominated sorting (minimization).

/// `a` dominates `b`: no worse anywhere, strictly better somewhere.
#[inline]
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Partitions indices into fronts; front 0 is the non-dominated set. Indices
/// inside each front are ascending.
pub fn fast_nondominated_sort<T: AsRef<[f64]>>(objectives: &[T]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in p + 1..n {
            let (a, b) = (objectives[p].as_ref(), objectives[q].as_ref());
            if dominates(a, b) {
                dominated_by[p].push(q);
                domination_count[q] += 1;
            } else if dominates(b, a) {
                dominated_by[q].push(p);
                domination_count[p] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_hand_cases() {
        let pts = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 3.0]];
        assert_eq!(fast_nondominated_sort(&pts), vec![vec![0, 1], vec![2]]);
        assert_eq!(fast_nondominated_sort(&[vec![5.0, 5.0]]), vec![vec![0]]);
        let chain = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        assert_eq!(fast_nondominated_sort(&chain), vec![vec![0], vec![1], vec![2]]);
        assert!(fast_nondominated_sort::<Vec<f64>>(&[]).is_empty());
    }

    #[test]
    fn duplicates_share_a_front() {
        let pts = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![0.5, 2.0]];
        assert_eq!(fast_nondominated_sort(&pts), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn dominance_relation() {
        assert!(dominates(&[1.0, 1.0], &[1.0, 2.0]));
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]));
        assert!(!dominates(&[0.0, 3.0], &[1.0, 2.0]));
    }
}
