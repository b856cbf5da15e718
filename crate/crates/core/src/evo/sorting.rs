//! Non-dominated sorting and crowding distance.

use crate::objectives::ObjectivePair;
use crate::scalar::Real;

/// Fronts of member indices, best first; each front in ascending index order.
pub fn nondominated_fronts<T: Real>(objs: &[ObjectivePair<T>]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in (p + 1)..n {
            if objs[p].dominates(&objs[q]) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if objs[q].dominates(&objs[p]) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Density of each member of one front, in front order. Boundary members
/// along any objective get `T::infinity()`.
pub fn crowding_distance<T: Real>(front: &[ObjectivePair<T>]) -> Vec<T> {
    let n = front.len();
    if n <= 2 {
        return vec![T::infinity(); n];
    }
    let mut density = vec![T::zero(); n];
    for o in 0..2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| front[a].get(o).total_cmp(&front[b].get(o)).then(a.cmp(&b)));
        let lo = front[order[0]].get(o);
        let hi = front[order[n - 1]].get(o);
        let range = hi - lo;
        // a flat objective has no meaningful boundary and contributes nothing
        if !(range > T::zero()) {
            continue;
        }
        density[order[0]] = T::infinity();
        density[order[n - 1]] = T::infinity();
        for w in 1..n - 1 {
            let i = order[w];
            if density[i].is_infinite() {
                continue;
            }
            density[i] += (front[order[w + 1]].get(o) - front[order[w - 1]].get(o)) / range;
        }
    }
    density
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> ObjectivePair<f64> {
        ObjectivePair::new(a, b)
    }

    #[test]
    fn hand_fronts() {
        assert_eq!(nondominated_fronts(&[p(1.0, 1.0)]), vec![vec![0]]);
        let fronts = nondominated_fronts(&[p(1.0, 2.0), p(2.0, 1.0), p(3.0, 3.0)]);
        assert_eq!(fronts, vec![vec![0, 1], vec![2]]);
        assert!(nondominated_fronts::<f64>(&[]).is_empty());
    }

    #[test]
    fn duplicates_share_a_front() {
        let fronts = nondominated_fronts(&[p(1.0, 1.0), p(1.0, 1.0), p(2.0, 2.0)]);
        assert_eq!(fronts, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn three_point_density() {
        let d = crowding_distance(&[p(0.0, 1.0), p(0.5, 0.4), p(1.0, 0.0)]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert!((d[1] - 2.0).abs() < 1e-9);
        assert!(crowding_distance(&[p(0.0, 1.0), p(1.0, 0.0)]).iter().all(|d| d.is_infinite()));
    }

    #[test]
    fn flat_objective_contributes_nothing() {
        let d = crowding_distance(&[p(0.0, 0.5), p(0.3, 0.5), p(0.4, 0.5), p(1.0, 0.5)]);
        assert!((d[1] - 0.4).abs() < 1e-12);
        assert!((d[2] - 0.7).abs() < 1e-12);
    }
}
