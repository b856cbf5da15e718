//! Whole-model attack: cluster, evolve each group, select, merge.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evolve::{evolve_submodel, GenerationStats};
use super::genome::{decode_submodel, Genome};
use super::selection::{select_solution, SelectionPolicy};
use super::EvolutionConfig;
use crate::error::{arg_err, GmeaError, Result};
use crate::grouping::{kmeans, merge, partition, SubModel};
use crate::objectives::{ConvExtractor, FeatureExtractorSpec, ViewMode, ViewSampler};
use crate::render::render_views;
use crate::scalar::Real;
use crate::splat::SplatModel;
use crate::watermark::{fidelity, Fidelity};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackSettings {
    pub evolution: EvolutionConfig,
    pub k: usize,
    pub policy: SelectionPolicy,
    pub width: usize,
    pub height: usize,
    pub view_mode: ViewMode,
    /// Number of groups evolved concurrently.
    pub workers: usize,
    pub extractor: FeatureExtractorSpec,
}

impl Default for AttackSettings {
    fn default() -> Self {
        Self {
            evolution: EvolutionConfig::default(),
            k: crate::grouping::DEFAULT_GROUPS,
            policy: SelectionPolicy::Balanced,
            width: 128,
            height: 128,
            view_mode: ViewMode::Sphere,
            workers: 1,
            extractor: FeatureExtractorSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub index: usize,
    pub size: usize,
    /// (f1, f2) of every final first-front member.
    pub front: Vec<[f64; 2]>,
    pub selected: Option<usize>,
    pub kept: usize,
    pub history: Vec<GenerationStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub k: usize,
    pub policy: SelectionPolicy,
    pub cluster_sizes: Vec<usize>,
    pub wcss: f64,
    pub groups: Vec<GroupReport>,
    /// Attacked vs original model on the fixed report views.
    pub fidelity: Fidelity,
}

fn attack_group<T: Real>(
    index: usize,
    part: &SubModel<T>,
    sampler: &ViewSampler<T>,
    extractor: &ConvExtractor<T>,
    settings: &AttackSettings,
) -> Result<(SubModel<T>, GroupReport)> {
    let size = part.model.len();
    if settings.policy == SelectionPolicy::Identity || size == 0 {
        let eps = T::lit(settings.evolution.epsilon);
        let decoded = decode_submodel(&Genome::identity(size, eps), part)?;
        let report = GroupReport {
            index,
            size,
            front: Vec::new(),
            selected: None,
            kept: size,
            history: Vec::new(),
        };
        return Ok((decoded, report));
    }
    log::debug!("evolving group {index} ({size} kernels)");
    let outcome = evolve_submodel(&part.model, sampler, extractor, &settings.evolution, index as u64)?;
    let chosen = select_solution(&outcome.front, settings.policy)?;
    let decoded = decode_submodel(&outcome.front[chosen].genome, part)?;
    let report = GroupReport {
        index,
        size,
        front: outcome
            .front
            .iter()
            .filter_map(|m| m.fitness)
            .map(|f| [f.f1.as_f64(), f.f2.as_f64()])
            .collect(),
        selected: Some(chosen),
        kept: decoded.model.len(),
        history: outcome.history,
    };
    Ok((decoded, report))
}

/// Runs the grouped evolutionary attack on `model`.
pub fn run_attack<T: Real>(model: &SplatModel<T>, settings: &AttackSettings) -> Result<(SplatModel<T>, AttackReport)> {
    settings.evolution.validate()?;
    if model.is_empty() {
        return arg_err("cannot attack an empty model");
    }
    if settings.k == 0 || settings.k > model.len() {
        return arg_err(format!("k = {} invalid for {} kernels", settings.k, model.len()));
    }
    if settings.workers == 0 {
        return arg_err("at least one worker is required");
    }
    let assignment = kmeans(&model.positions(), settings.k, settings.evolution.seed)?;
    let parts = partition(model, &assignment)?;
    let sampler = ViewSampler::framing(model, settings.view_mode, settings.width, settings.height);
    let extractor = ConvExtractor::<T>::new(&settings.extractor)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| GmeaError::State(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(SubModel<T>, GroupReport)> = pool.install(|| {
        parts
            .par_iter()
            .enumerate()
            .map(|(i, part)| attack_group(i, part, &sampler, &extractor, settings))
            .collect::<Result<Vec<_>>>()
    })?;
    let (attacked_parts, groups): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let attacked = merge(&attacked_parts)?;

    let report_views = sampler.report_views()?;
    let before = render_views(model, &report_views.cameras);
    let after = render_views(&attacked, &report_views.cameras);
    let report = AttackReport {
        k: settings.k,
        policy: settings.policy,
        cluster_sizes: assignment.cluster_sizes(),
        wcss: assignment.wcss.as_f64(),
        groups,
        fidelity: fidelity(&before, &after)?,
    };
    Ok((attacked, report))
}
