use std::cmp::Ordering;

use super::{EvoError, Individual};

/// Pareto dominance for minimisation: `a` is no worse than `b` everywhere and
/// strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly_better = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly_better = true;
        }
    }
    strictly_better
}

/// `Less` if `a` dominates `b`, `Greater` if `b` dominates `a`, `Equal` when
/// neither does.
fn compare(a: &[f64], b: &[f64]) -> Ordering {
    let mut a_better = false;
    let mut b_better = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            a_better = true;
        } else if x > y {
            b_better = true;
        }
        if a_better && b_better {
            return Ordering::Equal;
        }
    }
    match (a_better, b_better) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => Ordering::Equal,
    }
}

/// Deb's fast non-dominated sort over raw objective points. Fronts are
/// returned in rank order; indices within a front are ascending.
pub fn sort_fronts<P: AsRef<[f64]>>(points: &[P]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            match compare(points[i].as_ref(), points[j].as_ref()) {
                Ordering::Less => {
                    dominated[i].push(j);
                    domination_count[j] += 1;
                }
                Ordering::Greater => {
                    dominated[j].push(i);
                    domination_count[i] += 1;
                }
                Ordering::Equal => {}
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Sorts a population into fronts and writes each individual's rank.
pub fn fast_nondominated_sort(population: &mut [Individual]) -> Result<Vec<Vec<usize>>, EvoError> {
    if population.is_empty() {
        return Err(EvoError::EmptyPopulation);
    }
    let points: Vec<[f64; 3]> = population.iter().map(|i| i.objectives.as_array()).collect();
    let fronts = sort_fronts(&points);
    for (rank, front) in fronts.iter().enumerate() {
        for &i in front {
            population[i].rank = rank;
        }
    }
    Ok(fronts)
}

/// Crowding distance of each point within one front. Per objective the
/// extreme points get `+inf`; interior points add the gap between their
/// neighbours normalised by the objective's range (a zero range adds 0).
pub fn crowding_distances<P: AsRef<[f64]>>(front: &[P]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].as_ref().len();
    let mut distance = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..m {
        let value = |i: usize| front[i].as_ref()[obj];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let (first, last) = (order[0], order[n - 1]);
        distance[first] = f64::INFINITY;
        distance[last] = f64::INFINITY;
        let range = value(last) - value(first);
        if range > 0.0 {
            for k in 1..n - 1 {
                distance[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
            }
        }
    }
    distance
}

/// Writes crowding distances onto the members of a single front.
pub fn crowding_distance(front: &mut [Individual]) {
    let points: Vec<[f64; 3]> = front.iter().map(|i| i.objectives.as_array()).collect();
    for (ind, d) in front.iter_mut().zip(crowding_distances(&points)) {
        ind.crowding = d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ObjectiveVector;

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]));
        assert!(!dominates(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]));
        assert!(!dominates(&[1.0, 3.0, 1.0], &[2.0, 2.0, 2.0]));
        assert!(!dominates(&[2.0, 2.0, 2.0], &[1.0, 3.0, 1.0]));
        assert!(dominates(&[1.0, 2.0, 2.0], &[2.0, 2.0, 2.0]));
    }

    #[test]
    fn chain_gives_singleton_fronts() {
        let pts = [[3.0, 3.0, 3.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]];
        assert_eq!(sort_fronts(&pts), vec![vec![1], vec![2], vec![0]]);
    }

    #[test]
    fn single_individual_is_one_front() {
        let mut pop = vec![Individual::new(vec![0.0], ObjectiveVector::new(1.0, 2.0, 3.0))];
        assert_eq!(fast_nondominated_sort(&mut pop).unwrap(), vec![vec![0]]);
        assert_eq!(pop[0].rank, 0);
    }

    #[test]
    fn empty_population_is_an_error() {
        assert_eq!(fast_nondominated_sort(&mut []), Err(EvoError::EmptyPopulation));
    }

    #[test]
    fn crowding_small_fronts_are_boundary() {
        assert_eq!(crowding_distances(&[[1.0, 2.0]]), vec![f64::INFINITY]);
        assert_eq!(
            crowding_distances(&[[1.0, 2.0], [2.0, 1.0]]),
            vec![f64::INFINITY; 2]
        );
    }

    #[test]
    fn crowding_collinear_equally_spaced() {
        let d = crowding_distances(&[[0.0, 2.0, 4.0], [1.0, 1.0, 2.0], [2.0, 0.0, 0.0]]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        // each objective contributes (range) / (range) = 1
        assert_eq!(d[1], 3.0);
    }

    #[test]
    fn crowding_zero_range_contributes_nothing() {
        let d = crowding_distances(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]);
        assert!(d[0].is_infinite() && d[3].is_infinite());
        assert_eq!(&d[1..3], &[0.0, 0.0]);
    }
}
