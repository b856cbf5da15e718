//! Evolution of one sub-model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::genome::Genome;
use super::operators::{polynomial_mutation, sbx_crossover};
use super::selection::{binary_tournament, select_survivors, Survivors};
use super::{EvolutionConfig, Individual, Population};
use crate::error::{arg_err, Result};
use crate::image::ImageBuffer;
use crate::objectives::{feature_dispersion, view_loss, FeatureExtractor, ObjectivePair, SsimReference, ViewSampler};
use crate::render::{prepare, PreparedView};
use crate::scalar::Real;
use crate::splat::SplatModel;

/// Salt separating the view stream from the evolution stream of one seed.
const VIEW_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Reference renders and cached projections for one generation's cameras.
pub struct GenerationViews<T> {
    prepared: Vec<PreparedView<T>>,
    references: Vec<(ImageBuffer<T>, SsimReference<T>)>,
}

impl<T: Real> GenerationViews<T> {
    pub fn reference_images(&self) -> impl Iterator<Item = &ImageBuffer<T>> {
        self.references.iter().map(|(img, _)| img)
    }
}

/// Computes both objectives for genomes of one sub-model.
pub struct Evaluator<'a, T: Real> {
    pub sub: &'a SplatModel<T>,
    pub sampler: &'a ViewSampler<T>,
    pub extractor: &'a dyn FeatureExtractor<T>,
    pub lambda: T,
    pub n_views: usize,
    pub view_seed: u64,
}

impl<'a, T: Real> Evaluator<'a, T> {
    /// Cameras of `generation`, shared by every individual of that generation.
    pub fn views_for(&self, generation: usize) -> Result<GenerationViews<T>> {
        let set = self
            .sampler
            .sample(self.view_seed ^ VIEW_SALT, generation as u64, self.n_views)?;
        let colors: Vec<_> = self.sub.kernels.iter().map(|k| k.dc_color).collect();
        let mut prepared = Vec::with_capacity(set.len());
        let mut references = Vec::with_capacity(set.len());
        for cam in &set.cameras {
            let view = prepare(self.sub, cam);
            let img = view.composite(&colors, None);
            references.push((img.clone(), SsimReference::new(&img)));
            prepared.push(view);
        }
        Ok(GenerationViews {
            prepared,
            references,
        })
    }

    /// Candidate renders of `genome`, bit-identical to rendering the decoded
    /// sub-model.
    pub fn render_candidate(&self, views: &GenerationViews<T>, genome: &Genome<T>) -> Vec<ImageBuffer<T>> {
        let keep = genome.keep_mask();
        let colors = genome.perturbed_colors(self.sub);
        views
            .prepared
            .iter()
            .map(|v| v.composite(&colors, Some(&keep)))
            .collect()
    }

    pub fn evaluate(&self, views: &GenerationViews<T>, genome: &Genome<T>) -> Result<ObjectivePair<T>> {
        if genome.kernel_count() != self.sub.len() {
            return arg_err("genome does not match the sub-model");
        }
        let mut f1 = T::zero();
        let mut f2 = T::zero();
        for (img, (reference, ssim_ref)) in self.render_candidate(views, genome).iter().zip(&views.references) {
            f1 += view_loss(img.mean_abs_diff(reference)?, ssim_ref.compare(img)?, self.lambda);
            f2 += feature_dispersion(img, self.extractor)?;
        }
        let n = T::from_usize_lossy(views.prepared.len());
        Ok(ObjectivePair::new(f1 / n, f2 / n))
    }
}

/// Per-generation summary of the surviving population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_f1: f64,
    pub best_f2: f64,
    pub mean_f1: f64,
    pub mean_f2: f64,
    /// Size of the first front of the merged parent+offspring pool.
    pub pool_first_front: usize,
    /// Whether every first-front pool member survived (only meaningful when
    /// the front fits in the population).
    pub elitism_held: bool,
}

impl GenerationStats {
    fn summarize<T: Real>(generation: usize, members: &[Individual<T>], s: &Survivors<T>, n_pop: usize) -> Self {
        let objs: Vec<ObjectivePair<T>> = members.iter().filter_map(|m| m.fitness).collect();
        let n = objs.len().max(1) as f64;
        let first = s.fronts.first().map(|f| f.as_slice()).unwrap_or(&[]);
        let elitism_held = first.len() > n_pop || first.iter().all(|i| s.indices.contains(i));
        Self {
            generation,
            best_f1: objs.iter().map(|o| o.f1.as_f64()).fold(f64::INFINITY, f64::min),
            best_f2: objs.iter().map(|o| o.f2.as_f64()).fold(f64::INFINITY, f64::min),
            mean_f1: objs.iter().map(|o| o.f1.as_f64()).sum::<f64>() / n,
            mean_f2: objs.iter().map(|o| o.f2.as_f64()).sum::<f64>() / n,
            pool_first_front: first.len(),
            elitism_held,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionOutcome<T> {
    pub population: Population<T>,
    /// First front of the final population, in population order.
    pub front: Vec<Individual<T>>,
    pub history: Vec<GenerationStats>,
}

fn initial_population<T: Real>(n: usize, cfg: &EvolutionConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Genome<T>>> {
    let eps: T = cfg.scalar(cfg.epsilon);
    let mut genomes = vec![Genome::identity(n, eps)];
    let color_bound = cfg.epsilon / 10.0;
    while genomes.len() < cfg.n_pop {
        let mask: Vec<T> = (0..n).map(|_| T::lit(rng.random_range(0.5..=1.0))).collect();
        let color: Vec<T> = (0..3 * n)
            .map(|_| {
                if color_bound > 0.0 {
                    T::lit(rng.random_range(-color_bound..=color_bound))
                } else {
                    T::zero()
                }
            })
            .collect();
        genomes.push(Genome::new(&mask, &color, eps)?);
    }
    Ok(genomes)
}

fn ranked<T: Real>(genomes: Vec<Genome<T>>, objs: &[ObjectivePair<T>], s: &Survivors<T>) -> Vec<Individual<T>> {
    s.indices
        .iter()
        .zip(s.ranks.iter().zip(&s.densities))
        .map(|(&i, (&rank, &density))| Individual {
            genome: genomes[i].clone(),
            fitness: Some(objs[i]),
            rank: Some(rank),
            density: Some(density),
        })
        .collect()
}

/// Evolves perturbations of one sub-model for `cfg.generations` generations.
/// `stream` selects an independent random stream of `cfg.seed`, so groups
/// evolved concurrently do not interfere.
pub fn evolve_submodel<T: Real>(
    sub: &SplatModel<T>,
    sampler: &ViewSampler<T>,
    extractor: &dyn FeatureExtractor<T>,
    cfg: &EvolutionConfig,
    stream: u64,
) -> Result<EvolutionOutcome<T>> {
    cfg.validate()?;
    if sub.is_empty() {
        return arg_err("cannot evolve an empty sub-model");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let evaluator = Evaluator {
        sub,
        sampler,
        extractor,
        lambda: cfg.scalar(cfg.lambda),
        n_views: cfg.n_views,
        view_seed: cfg.seed,
    };
    let eta_c: T = cfg.scalar(cfg.eta_c);
    let eta_m: T = cfg.scalar(cfg.eta_m);

    let genomes = initial_population::<T>(sub.len(), cfg, &mut rng)?;
    let views = evaluator.views_for(0)?;
    let objs = genomes
        .iter()
        .map(|g| evaluator.evaluate(&views, g))
        .collect::<Result<Vec<_>>>()?;
    let s = select_survivors(&objs, cfg.n_pop);
    let mut members = ranked(genomes, &objs, &s);
    let mut history = vec![GenerationStats::summarize(0, &members, &s, cfg.n_pop)];

    for t in 1..=cfg.generations {
        let mut pool: Vec<Genome<T>> = members.iter().map(|m| m.genome.clone()).collect();
        let parents = pool.len();
        while pool.len() < parents + cfg.n_pop {
            let a = binary_tournament(&members, &mut rng);
            let b = binary_tournament(&members, &mut rng);
            let (c1, c2) = sbx_crossover(&members[a].genome, &members[b].genome, eta_c, &mut rng)?;
            pool.push(polynomial_mutation(&c1, cfg.p_m, eta_m, &mut rng));
            let c2 = polynomial_mutation(&c2, cfg.p_m, eta_m, &mut rng);
            if pool.len() < parents + cfg.n_pop {
                pool.push(c2);
            }
        }
        let views = evaluator.views_for(t)?;
        let objs = pool
            .iter()
            .map(|g| evaluator.evaluate(&views, g))
            .collect::<Result<Vec<_>>>()?;
        let s = select_survivors(&objs, cfg.n_pop);
        members = ranked(pool, &objs, &s);
        history.push(GenerationStats::summarize(t, &members, &s, cfg.n_pop));
    }

    let front = members.iter().filter(|m| m.rank == Some(0)).cloned().collect();
    Ok(EvolutionOutcome {
        population: Population {
            members,
            generation: cfg.generations,
        },
        front,
        history,
    })
}
