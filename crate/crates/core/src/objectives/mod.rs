//! The two fitness objectives: visual loss and feature dispersion.

mod features;
mod ssim;
mod views;

pub use features::{extract_features, ConvExtractor, FeatureExtractor, FeatureExtractorSpec, FeatureMap};
pub use ssim::{gaussian_taps, ssim, SsimReference, C1, C2, SIGMA as SSIM_SIGMA, WINDOW as SSIM_WINDOW};
pub use views::{ViewMode, ViewSampler, ViewSet, DEFAULT_FOV_DEG, DISTANCE_FACTOR, REPORT_ELEVATION_DEG};

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::image::ImageBuffer;
use crate::scalar::Real;

pub const DEFAULT_LAMBDA: f64 = 0.85;

/// Fitness of one candidate; both components are minimized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePair<T> {
    pub f1: T,
    pub f2: T,
}

impl<T: Real> ObjectivePair<T> {
    pub fn new(f1: T, f2: T) -> Self {
        Self { f1, f2 }
    }

    #[inline]
    pub fn get(&self, objective: usize) -> T {
        match objective {
            0 => self.f1,
            1 => self.f2,
            _ => panic!("objective index {objective} out of range"),
        }
    }

    /// Pareto dominance for minimization.
    pub fn dominates(&self, other: &Self) -> bool {
        self.f1 <= other.f1 && self.f2 <= other.f2 && (self.f1 < other.f1 || self.f2 < other.f2)
    }
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return arg_err(format!("lambda {lambda} outside [0, 1]"));
    }
    Ok(())
}

/// Per-view visual loss `λ·L1 + (1-λ)·(1-SSIM)`.
pub fn view_loss<T: Real>(l1: T, ssim: T, lambda: T) -> T {
    lambda * l1 + (T::one() - lambda) * (T::one() - ssim)
}

/// Visual quality loss averaged over views.
pub fn f1_visual_loss<T: Real>(adv: &[ImageBuffer<T>], reference: &[ImageBuffer<T>], lambda: T) -> Result<T> {
    if adv.is_empty() || adv.len() != reference.len() {
        return arg_err(format!(
            "need equal, non-empty view sequences (got {} and {})",
            adv.len(),
            reference.len()
        ));
    }
    check_lambda(lambda)?;
    let mut total = T::zero();
    for (a, r) in adv.iter().zip(reference) {
        total += view_loss(a.mean_abs_diff(r)?, ssim(a, r)?, lambda);
    }
    Ok(total / T::from_usize_lossy(adv.len()))
}

/// Population standard deviation of one feature channel.
pub fn channel_std<T: Real>(channel: &[T]) -> T {
    let Some(&first) = channel.first() else {
        return T::zero();
    };
    if channel.iter().all(|&v| v == first) {
        return T::zero();
    }
    let n = T::from_usize_lossy(channel.len());
    let mean = channel.iter().copied().sum::<T>() / n;
    let var = channel.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    var.sqrt()
}

/// Mean channel dispersion of one image's features.
pub fn feature_dispersion<T: Real>(img: &ImageBuffer<T>, extractor: &dyn FeatureExtractor<T>) -> Result<T> {
    let map = extractor.extract(img)?;
    let total: T = (0..map.channels).map(|c| channel_std(map.channel(c))).sum();
    Ok(total / T::from_usize_lossy(map.channels.max(1)))
}

/// Watermark destruction objective: dispersion averaged over views and channels.
pub fn f2_watermark_destruction<T: Real>(imgs: &[ImageBuffer<T>], extractor: &dyn FeatureExtractor<T>) -> Result<T> {
    if imgs.is_empty() {
        return arg_err("at least one image is required");
    }
    let mut total = T::zero();
    for img in imgs {
        total += feature_dispersion(img, extractor)?;
    }
    Ok(total / T::from_usize_lossy(imgs.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_std_examples() {
        assert_eq!(channel_std(&[0.3f64; 17]), 0.0);
        let half: Vec<f64> = (0..10).map(|i| (i % 2) as f64).collect();
        assert_eq!(channel_std(&half), 0.5);
        assert_eq!(channel_std::<f64>(&[]), 0.0);
    }

    #[test]
    fn f1_identity_and_lambda_collapse() {
        let a = ImageBuffer::<f64>::from_fn(12, 12, |x, y, c| ((x + 2 * y + c) % 5) as f64 / 4.0);
        let b = ImageBuffer::<f64>::from_fn(12, 12, |x, y, c| ((x * y + c) % 3) as f64 / 2.0);
        assert!(f1_visual_loss(&[a.clone()], &[a.clone()], 0.85).unwrap().abs() < 1e-9);
        let l1 = a.mean_abs_diff(&b).unwrap();
        assert_eq!(f1_visual_loss(&[a.clone()], &[b.clone()], 1.0).unwrap(), l1);
        assert!(f1_visual_loss::<f64>(&[], &[], 0.5).is_err());
        assert!(f1_visual_loss(&[a.clone()], &[b.clone()], 1.5).is_err());
    }

    #[test]
    fn dominance() {
        let p = |a, b| ObjectivePair::<f64>::new(a, b);
        assert!(p(1.0, 1.0).dominates(&p(1.0, 2.0)));
        assert!(!p(1.0, 2.0).dominates(&p(1.0, 2.0)));
        assert!(!p(1.0, 2.0).dominates(&p(2.0, 1.0)));
    }
}
