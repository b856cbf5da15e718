use crate::error::{arg_err, Result};
use crate::grouping::SubModel;
use crate::scalar::{Real, Vec3};
use crate::splat::SplatModel;

/// Mask genes at or above this value keep their kernel.
pub const MASK_THRESHOLD: f64 = 0.5;

/// Decision vector of one candidate: `n` mask genes in `[0, 1]` followed by
/// `3n` color perturbation genes in `[-epsilon, epsilon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Genome<T> {
    genes: Vec<T>,
    kernels: usize,
    epsilon: T,
}

impl<T: Real> Genome<T> {
    pub fn new(mask: &[T], color: &[T], epsilon: T) -> Result<Self> {
        if color.len() != 3 * mask.len() {
            return arg_err(format!(
                "{} color genes for {} mask genes",
                color.len(),
                mask.len()
            ));
        }
        if !(epsilon >= T::zero()) {
            return arg_err("epsilon must be non-negative");
        }
        let mut genes = Vec::with_capacity(4 * mask.len());
        genes.extend_from_slice(mask);
        genes.extend_from_slice(color);
        let g = Self {
            genes,
            kernels: mask.len(),
            epsilon,
        };
        if let Some(j) = (0..g.len()).find(|&j| !(g.genes[j] >= g.lower(j) && g.genes[j] <= g.upper(j))) {
            return arg_err(format!("gene {j} = {} outside its bounds", g.genes[j]));
        }
        Ok(g)
    }

    /// Keeps every kernel and leaves colors untouched.
    pub fn identity(kernels: usize, epsilon: T) -> Self {
        let mut genes = vec![T::one(); kernels];
        genes.resize(4 * kernels, T::zero());
        Self {
            genes,
            kernels,
            epsilon,
        }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn kernel_count(&self) -> usize {
        self.kernels
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn genes(&self) -> &[T] {
        &self.genes
    }

    pub fn mask_genes(&self) -> &[T] {
        &self.genes[..self.kernels]
    }

    pub fn color_genes(&self) -> &[T] {
        &self.genes[self.kernels..]
    }

    #[inline]
    pub fn lower(&self, j: usize) -> T {
        if j < self.kernels {
            T::zero()
        } else {
            -self.epsilon
        }
    }

    #[inline]
    pub fn upper(&self, j: usize) -> T {
        if j < self.kernels {
            T::one()
        } else {
            self.epsilon
        }
    }

    pub fn within_bounds(&self) -> bool {
        (0..self.len()).all(|j| self.genes[j] >= self.lower(j) && self.genes[j] <= self.upper(j))
    }

    /// Builds a genome from raw genes, clipping each into its bounds.
    pub(crate) fn from_genes_clipped(mut genes: Vec<T>, kernels: usize, epsilon: T) -> Self {
        let mut g = Self {
            genes: Vec::new(),
            kernels,
            epsilon,
        };
        for (j, v) in genes.iter_mut().enumerate() {
            *v = v.max(g.lower(j)).min(g.upper(j));
        }
        g.genes = genes;
        g
    }

    pub(crate) fn same_layout(&self, other: &Self) -> bool {
        self.kernels == other.kernels && self.epsilon == other.epsilon
    }

    pub fn keep_mask(&self) -> Vec<bool> {
        let t = T::lit(MASK_THRESHOLD);
        self.mask_genes().iter().map(|&m| m >= t).collect()
    }

    /// Perturbed DC colors of every kernel of `sub`, pruned or not.
    pub fn perturbed_colors(&self, sub: &SplatModel<T>) -> Vec<Vec3<T>> {
        let c = self.color_genes();
        sub.kernels
            .iter()
            .enumerate()
            .map(|(j, k)| {
                [
                    k.dc_color[0] + c[3 * j],
                    k.dc_color[1] + c[3 * j + 1],
                    k.dc_color[2] + c[3 * j + 2],
                ]
            })
            .collect()
    }
}

/// A decoded candidate: surviving kernels and their positions in the input.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded<T> {
    pub model: SplatModel<T>,
    pub kept: Vec<usize>,
}

/// Applies a genome to a sub-model: prunes masked kernels and shifts the DC
/// color of the survivors. All other fields are copied unchanged.
pub fn decode_genome<T: Real>(genome: &Genome<T>, sub: &SplatModel<T>) -> Result<Decoded<T>> {
    if genome.kernel_count() != sub.len() {
        return arg_err(format!(
            "genome sized for {} kernels applied to {}",
            genome.kernel_count(),
            sub.len()
        ));
    }
    let colors = genome.perturbed_colors(sub);
    let mut kernels = Vec::new();
    let mut kept = Vec::new();
    for (j, keep) in genome.keep_mask().into_iter().enumerate() {
        if keep {
            let mut k = sub.kernels[j];
            k.dc_color = colors[j];
            kernels.push(k);
            kept.push(j);
        }
    }
    Ok(Decoded {
        model: SplatModel::new(kernels, sub.source_tag.clone()),
        kept,
    })
}

/// Decodes against a sub-model and maps survivors back to original indices.
pub fn decode_submodel<T: Real>(genome: &Genome<T>, sub: &SubModel<T>) -> Result<SubModel<T>> {
    let decoded = decode_genome(genome, &sub.model)?;
    Ok(SubModel {
        indices: decoded.kept.iter().map(|&j| sub.indices[j]).collect(),
        model: decoded.model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::GaussianKernel;

    fn sub(n: usize) -> SplatModel<f64> {
        SplatModel::new(
            (0..n)
                .map(|i| GaussianKernel::isotropic([i as f64, 0.0, 0.0], 0.1, 0.7, [0.5; 3]))
                .collect(),
            "s",
        )
    }

    #[test]
    fn identity_genome_is_identity() {
        let m = sub(4);
        let d = decode_genome(&Genome::identity(4, 50.0 / 255.0), &m).unwrap();
        assert_eq!(d.model, m);
        assert_eq!(d.kept, vec![0, 1, 2, 3]);
    }

    #[test]
    fn low_mask_gene_prunes() {
        let m = sub(3);
        let g = Genome::new(&[1.0, 0.3, 0.5], &[0.0; 9], 0.1).unwrap();
        let d = decode_genome(&g, &m).unwrap();
        assert_eq!(d.kept, vec![0, 2]);
        assert_eq!(d.model.kernels[1], m.kernels[2]);
    }

    #[test]
    fn full_positive_shift() {
        let eps = 50.0 / 255.0;
        let m = sub(2);
        let g = Genome::new(&[1.0, 1.0], &[eps; 6], eps).unwrap();
        let d = decode_genome(&g, &m).unwrap();
        for k in &d.model.kernels {
            assert_eq!(k.dc_color, [0.5 + eps; 3]);
            assert_eq!(k.position[1], 0.0);
        }
    }

    #[test]
    fn size_mismatch_and_bounds() {
        assert!(decode_genome(&Genome::identity(2, 0.1), &sub(3)).is_err());
        assert!(Genome::new(&[1.2], &[0.0; 3], 0.1).is_err());
        assert!(Genome::new(&[1.0], &[0.0, 0.2, 0.0], 0.1).is_err());
        assert!(Genome::new(&[1.0], &[0.0; 2], 0.1).is_err());
    }

    #[test]
    fn submodel_indices_follow_survivors() {
        let s = SubModel { model: sub(3), indices: vec![4, 7, 9] };
        let g = Genome::new(&[0.9, 0.1, 0.6], &[0.0; 9], 0.1).unwrap();
        assert_eq!(decode_submodel(&g, &s).unwrap().indices, vec![4, 9]);
    }
}
