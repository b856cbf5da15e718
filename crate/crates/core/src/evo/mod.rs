//! Multi-objective evolutionary attack: genomes, variation, selection and
//! the per-group and whole-model drivers.

mod attack;
mod evolve;
mod genome;
mod operators;
mod selection;
mod sorting;

pub use attack::{run_attack, AttackReport, AttackSettings, GroupReport};
pub use evolve::{evolve_submodel, EvolutionOutcome, Evaluator, GenerationStats, GenerationViews};
pub use genome::{decode_genome, decode_submodel, Decoded, Genome, MASK_THRESHOLD};
pub use operators::{pm_delta, polynomial_mutation, sbx_beta, sbx_crossover, sbx_pair};
pub use selection::{
    binary_tournament, environmental_selection, fast_nondominated_sort, select_solution, select_survivors,
    SelectionPolicy, Survivors,
};
pub use sorting::{crowding_distance, nondominated_fronts};

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::objectives::{ObjectivePair, DEFAULT_LAMBDA};
use crate::scalar::Real;

/// One candidate with its (optional) evaluation and ranking.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual<T> {
    pub genome: Genome<T>,
    pub fitness: Option<ObjectivePair<T>>,
    pub rank: Option<usize>,
    pub density: Option<T>,
}

impl<T: Real> Individual<T> {
    pub fn new(genome: Genome<T>) -> Self {
        Self {
            genome,
            fitness: None,
            rank: None,
            density: None,
        }
    }

    pub fn evaluated(genome: Genome<T>, fitness: ObjectivePair<T>) -> Self {
        Self {
            fitness: Some(fitness),
            ..Self::new(genome)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population<T> {
    pub members: Vec<Individual<T>>,
    pub generation: usize,
}

impl<T: Real> Population<T> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Hyperparameters of one sub-model evolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub n_pop: usize,
    pub generations: usize,
    pub eta_c: f64,
    pub p_m: f64,
    pub eta_m: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub n_views: usize,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            n_pop: 50,
            generations: 200,
            eta_c: 1.0,
            p_m: 0.1,
            eta_m: 20.0,
            epsilon: 50.0 / 255.0,
            lambda: DEFAULT_LAMBDA,
            n_views: 8,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pop < 2 {
            return arg_err("population size must be at least 2");
        }
        if self.n_views == 0 {
            return arg_err("at least one view per generation is required");
        }
        if !(0.0..=1.0).contains(&self.p_m) {
            return arg_err(format!("mutation probability {} outside [0, 1]", self.p_m));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return arg_err(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if !(self.epsilon >= 0.0 && self.eta_c >= 0.0 && self.eta_m >= 0.0) {
            return arg_err("epsilon and distribution indices must be non-negative");
        }
        Ok(())
    }

    pub(crate) fn scalar<T: Real>(&self, v: f64) -> T {
        T::lit(v)
    }
}
