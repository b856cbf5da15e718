//! Run configuration: a flat JSON document that command-line flags override.

use std::fs;
use std::path::{Path, PathBuf};

use gmea_core::evo::{AttackSettings, EvolutionConfig, SelectionPolicy};
use gmea_core::objectives::{FeatureExtractorSpec, ViewMode};
use gmea_core::watermark::ToyWatermarkSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    /// Not recorded in manifests, so runs into different directories stay
    /// byte-comparable.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub n_pop: usize,
    pub generations: usize,
    pub eta_c: f64,
    pub p_m: f64,
    pub eta_m: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub n_views: usize,
    pub seed: u64,
    pub k: usize,
    pub width: usize,
    pub height: usize,
    pub view_mode: ViewMode,
    pub policy: SelectionPolicy,
    pub workers: usize,
    pub extractor_seed: u64,
    /// When present, the input is first marked with a toy watermark so the
    /// attack's effect on it can be measured.
    pub watermark: Option<ToyWatermarkSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let evo = EvolutionConfig::default();
        Self {
            input: None,
            out: PathBuf::from("gmea-out"),
            n_pop: evo.n_pop,
            generations: evo.generations,
            eta_c: evo.eta_c,
            p_m: evo.p_m,
            eta_m: evo.eta_m,
            epsilon: evo.epsilon,
            lambda: evo.lambda,
            n_views: evo.n_views,
            seed: evo.seed,
            k: gmea_core::grouping::DEFAULT_GROUPS,
            width: 128,
            height: 128,
            view_mode: ViewMode::Sphere,
            policy: SelectionPolicy::Balanced,
            workers: 1,
            extractor_seed: FeatureExtractorSpec::default().seed,
            watermark: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            n_pop: self.n_pop,
            generations: self.generations,
            eta_c: self.eta_c,
            p_m: self.p_m,
            eta_m: self.eta_m,
            epsilon: self.epsilon,
            lambda: self.lambda,
            n_views: self.n_views,
            seed: self.seed,
        }
    }

    /// Attack settings; zero generations selects the identity path.
    pub fn attack_settings(&self) -> AttackSettings {
        AttackSettings {
            evolution: self.evolution(),
            k: self.k,
            policy: if self.generations == 0 {
                SelectionPolicy::Identity
            } else {
                self.policy
            },
            width: self.width,
            height: self.height,
            view_mode: self.view_mode,
            workers: self.workers,
            extractor: FeatureExtractorSpec::with_seed(self.extractor_seed),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.input.is_none() {
            return Err(CliError::Usage("no input model given".into()));
        }
        self.evolution()
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if self.k == 0 {
            return Err(CliError::Usage("k must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        let min = FeatureExtractorSpec::with_seed(self.extractor_seed).min_input_size();
        if self.width < min || self.height < min {
            return Err(CliError::Usage(format!("resolution must be at least {min}x{min}")));
        }
        Ok(())
    }
}

/// Parses `N` (square) or `WxH`.
pub fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("invalid resolution `{s}`"))
    };
    match s.split_once(['x', 'X']) {
        Some((w, h)) => Ok((parse(w)?, parse(h)?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}
