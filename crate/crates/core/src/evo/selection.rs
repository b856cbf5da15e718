//! Elitist environmental selection, mating tournaments and final pick.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sorting::{crowding_distance, nondominated_fronts};
use super::{Individual, Population};
use crate::error::{arg_err, GmeaError, Result};
use crate::objectives::ObjectivePair;
use crate::scalar::Real;

/// Outcome of ranking a pool and keeping `n_pop` of its members.
#[derive(Clone, Debug)]
pub struct Survivors<T> {
    /// Pool indices in admission order.
    pub indices: Vec<usize>,
    pub ranks: Vec<usize>,
    pub densities: Vec<T>,
    /// All fronts of the pool.
    pub fronts: Vec<Vec<usize>>,
}

/// Fills by whole fronts, truncating the last admitted front by descending
/// density (ties by pool index).
pub fn select_survivors<T: Real>(objs: &[ObjectivePair<T>], n_pop: usize) -> Survivors<T> {
    let fronts = nondominated_fronts(objs);
    let mut out = Survivors {
        indices: Vec::with_capacity(n_pop),
        ranks: Vec::with_capacity(n_pop),
        densities: Vec::with_capacity(n_pop),
        fronts: Vec::new(),
    };
    for (rank, front) in fronts.iter().enumerate() {
        let room = n_pop - out.indices.len();
        if room == 0 {
            break;
        }
        let values: Vec<ObjectivePair<T>> = front.iter().map(|&i| objs[i]).collect();
        let density = crowding_distance(&values);
        let mut order: Vec<usize> = (0..front.len()).collect();
        if front.len() > room {
            order.sort_by(|&a, &b| density[b].total_cmp(&density[a]).then(front[a].cmp(&front[b])));
            order.truncate(room);
        }
        for w in order {
            out.indices.push(front[w]);
            out.ranks.push(rank);
            out.densities.push(density[w]);
        }
    }
    out.fronts = fronts;
    out
}

fn fitness_of<T: Real>(members: &[Individual<T>]) -> Result<Vec<ObjectivePair<T>>> {
    members
        .iter()
        .enumerate()
        .map(|(i, m)| {
            m.fitness
                .ok_or_else(|| GmeaError::State(format!("member {i} has not been evaluated")))
        })
        .collect()
}

/// Fronts of an evaluated population.
pub fn fast_nondominated_sort<T: Real>(pop: &Population<T>) -> Result<Vec<Vec<usize>>> {
    Ok(nondominated_fronts(&fitness_of(&pop.members)?))
}

/// Elitist `(μ + λ)` selection over `parents ∪ offspring`.
pub fn environmental_selection<T: Real>(
    parents: &Population<T>,
    offspring: &Population<T>,
    n_pop: usize,
) -> Result<Population<T>> {
    let pool: Vec<&Individual<T>> = parents.members.iter().chain(&offspring.members).collect();
    let objs = pool
        .iter()
        .enumerate()
        .map(|(i, m)| {
            m.fitness
                .ok_or_else(|| GmeaError::State(format!("pool member {i} has not been evaluated")))
        })
        .collect::<Result<Vec<_>>>()?;
    let s = select_survivors(&objs, n_pop);
    let members = s
        .indices
        .iter()
        .zip(s.ranks.iter().zip(&s.densities))
        .map(|(&i, (&rank, &density))| Individual {
            rank: Some(rank),
            density: Some(density),
            ..pool[i].clone()
        })
        .collect();
    Ok(Population {
        members,
        generation: parents.generation + 1,
    })
}

/// Crowded comparison: lower rank, then higher density.
fn crowded_cmp<T: Real>(a: &Individual<T>, b: &Individual<T>) -> Ordering {
    let ra = a.rank.unwrap_or(usize::MAX);
    let rb = b.rank.unwrap_or(usize::MAX);
    ra.cmp(&rb).then_with(|| {
        let da = a.density.unwrap_or(T::neg_infinity());
        let db = b.density.unwrap_or(T::neg_infinity());
        db.total_cmp(&da)
    })
}

/// Binary tournament; ties go to the lower member index.
pub fn binary_tournament<T: Real, R: Rng + ?Sized>(members: &[Individual<T>], rng: &mut R) -> usize {
    let i = rng.random_range(0..members.len());
    let j = rng.random_range(0..members.len());
    match crowded_cmp(&members[i], &members[j]) {
        Ordering::Less => i,
        Ordering::Greater => j,
        Ordering::Equal => i.min(j),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionPolicy {
    /// Minimum visual loss.
    Quality,
    /// Minimum feature dispersion.
    Attack,
    /// Minimum sum of min-max normalized objectives.
    Balanced,
    /// Leave every group untouched. Not a front selection; handled by the
    /// attack driver.
    Identity,
}

impl std::str::FromStr for SelectionPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "quality" => Ok(Self::Quality),
            "attack" => Ok(Self::Attack),
            "balanced" => Ok(Self::Balanced),
            "identity" => Ok(Self::Identity),
            other => Err(format!(
                "unknown policy `{other}` (expected quality|attack|balanced|identity)"
            )),
        }
    }
}

/// Index of the chosen front member.
pub fn select_solution<T: Real>(front: &[Individual<T>], policy: SelectionPolicy) -> Result<usize> {
    if front.is_empty() {
        return arg_err("cannot select from an empty front");
    }
    let objs = fitness_of(front)?;
    let score: Box<dyn Fn(&ObjectivePair<T>) -> T> = match policy {
        SelectionPolicy::Quality => Box::new(|o| o.f1),
        SelectionPolicy::Attack => Box::new(|o| o.f2),
        SelectionPolicy::Balanced => {
            let range = |o: usize| {
                let lo = objs.iter().map(|p| p.get(o)).fold(T::infinity(), T::min);
                let hi = objs.iter().map(|p| p.get(o)).fold(T::neg_infinity(), T::max);
                (lo, hi - lo)
            };
            let ((lo1, r1), (lo2, r2)) = (range(0), range(1));
            let norm = |v: T, lo: T, r: T| if r > T::zero() { (v - lo) / r } else { T::zero() };
            Box::new(move |o| norm(o.f1, lo1, r1) + norm(o.f2, lo2, r2))
        }
        SelectionPolicy::Identity => {
            return arg_err("the identity policy does not select from a front");
        }
    };
    let mut best = 0;
    for i in 1..objs.len() {
        if score(&objs[i]) < score(&objs[best]) {
            best = i;
        }
    }
    Ok(best)
}
