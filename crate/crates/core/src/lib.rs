//! Group-based multi-objective evolutionary attacks on watermarked Gaussian
//! splat models.
//!
//! The pipeline clusters a model's kernels, evolves a pruning mask and a
//! bounded color perturbation for every cluster with NSGA-II against two
//! black-box objectives (visual loss and feature dispersion), and merges the
//! chosen per-cluster solutions back into one model.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod camera;
pub mod error;
pub mod evo;
pub mod grouping;
pub mod image;
pub mod objectives;
pub mod render;
pub mod scalar;
pub mod splat;
pub mod synthetic;
pub mod watermark;

pub use error::{GmeaError, Result};
pub use scalar::Real;

pub type Kernel = splat::GaussianKernel<f64>;
pub type Model = splat::SplatModel<f64>;
pub type Model32 = splat::SplatModel<f32>;
pub type Image = image::ImageBuffer<f64>;
pub type Image32 = image::ImageBuffer<f32>;
pub type Cam = camera::Camera<f64>;
pub type Sampler = objectives::ViewSampler<f64>;
pub type Watermark = watermark::ToyWatermark<f64>;
