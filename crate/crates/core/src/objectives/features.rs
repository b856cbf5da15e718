//! Seeded convolutional feature extractor with zero-sum kernels.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::image::ImageBuffer;
use crate::scalar::Real;

/// Architecture and seed of the extractor. Weights are a pure function of
/// this value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureExtractorSpec {
    pub seed: u64,
    /// Channel counts from input to output, e.g. `[3, 8, 16]`.
    pub channels: Vec<usize>,
    pub kernel_size: usize,
    pub stride: usize,
    /// Whether a rectifier follows each layer.
    pub relu_after: Vec<bool>,
}

impl FeatureExtractorSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn min_input_size(&self) -> usize {
        8
    }
}

impl Default for FeatureExtractorSpec {
    fn default() -> Self {
        Self {
            seed: 42,
            channels: vec![3, 8, 16],
            kernel_size: 3,
            stride: 2,
            relu_after: vec![true, false],
        }
    }
}

/// Channel-major feature tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap<T> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Real> FeatureMap<T> {
    pub fn channel(&self, c: usize) -> &[T] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }
}

/// Anything that maps an image to a feature tensor.
pub trait FeatureExtractor<T: Real>: Send + Sync {
    fn extract(&self, img: &ImageBuffer<T>) -> Result<FeatureMap<T>>;
}

#[derive(Clone, Debug)]
struct ConvLayer<T> {
    in_ch: usize,
    out_ch: usize,
    /// `[out][in][ky][kx]`.
    weights: Vec<T>,
    relu: bool,
}

/// Stack of valid-padding strided convolutions built from a spec.
#[derive(Clone, Debug)]
pub struct ConvExtractor<T> {
    spec: FeatureExtractorSpec,
    layers: Vec<ConvLayer<T>>,
}

impl<T: Real> ConvExtractor<T> {
    pub fn new(spec: &FeatureExtractorSpec) -> Result<Self> {
        if spec.channels.len() < 2 || spec.relu_after.len() != spec.channels.len() - 1 {
            return arg_err("extractor needs at least one layer and one relu flag per layer");
        }
        if spec.kernel_size == 0 || spec.stride == 0 {
            return arg_err("kernel size and stride must be positive");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let ks = spec.kernel_size;
        let layers = spec
            .channels
            .windows(2)
            .zip(&spec.relu_after)
            .map(|(io, &relu)| {
                let (in_ch, out_ch) = (io[0], io[1]);
                let fan = in_ch * ks * ks;
                let mut weights = Vec::with_capacity(out_ch * fan);
                for _ in 0..out_ch {
                    weights.extend(zero_sum_kernel(fan, &mut rng).into_iter().map(T::lit));
                }
                ConvLayer {
                    in_ch,
                    out_ch,
                    weights,
                    relu,
                }
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            layers,
        })
    }

    pub fn spec(&self) -> &FeatureExtractorSpec {
        &self.spec
    }

    /// Flattened coefficients of kernel `out` in layer `layer`.
    pub fn kernel(&self, layer: usize, out: usize) -> &[T] {
        let l = &self.layers[layer];
        let fan = l.in_ch * self.spec.kernel_size * self.spec.kernel_size;
        &l.weights[out * fan..(out + 1) * fan]
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }
}

/// Dyadic coefficients `(a_j - a_{π(j)}) / 256` for a random permutation π.
/// The sum is exactly zero in any binary floating point format.
fn zero_sum_kernel(fan: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let a: Vec<i32> = (0..fan).map(|_| rng.random_range(-64..=64)).collect();
    let mut perm: Vec<usize> = (0..fan).collect();
    perm.shuffle(rng);
    (0..fan).map(|j| (a[j] - a[perm[j]]) as f64 / 256.0).collect()
}

/// Dot product with four independent partial sums.
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail += *x * *y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl<T: Real> FeatureExtractor<T> for ConvExtractor<T> {
    fn extract(&self, img: &ImageBuffer<T>) -> Result<FeatureMap<T>> {
        let min = self.spec.min_input_size();
        if img.width < min || img.height < min {
            return arg_err(format!(
                "image {}x{} smaller than the {min}x{min} extractor minimum",
                img.width, img.height
            ));
        }
        let mut map = FeatureMap {
            channels: 3,
            height: img.height,
            width: img.width,
            data: (0..3).flat_map(|c| img.channel(c)).collect(),
        };
        let (ks, stride) = (self.spec.kernel_size, self.spec.stride);
        for layer in &self.layers {
            debug_assert_eq!(layer.in_ch, map.channels);
            if map.height < ks || map.width < ks {
                return arg_err("feature map collapsed below the kernel size");
            }
            let oh = (map.height - ks) / stride + 1;
            let ow = (map.width - ks) / stride + 1;
            let fan = layer.in_ch * ks * ks;
            // Gather every receptive field into a contiguous row, then take
            // one dot product per output value.
            let plane = map.height * map.width;
            let mut patches = Vec::with_capacity(oh * ow * fan);
            for oy in 0..oh {
                for ox in 0..ow {
                    for i in 0..layer.in_ch {
                        let src = &map.data[i * plane..(i + 1) * plane];
                        for ky in 0..ks {
                            let start = (oy * stride + ky) * map.width + ox * stride;
                            patches.extend_from_slice(&src[start..start + ks]);
                        }
                    }
                }
            }
            let mut out = vec![T::zero(); layer.out_ch * oh * ow];
            for (o, dst) in out.chunks_exact_mut(oh * ow).enumerate() {
                let w = &layer.weights[o * fan..(o + 1) * fan];
                for (d, patch) in dst.iter_mut().zip(patches.chunks_exact(fan)) {
                    let v = dot(w, patch);
                    *d = if layer.relu { v.max(T::zero()) } else { v };
                }
            }
            map = FeatureMap {
                channels: layer.out_ch,
                height: oh,
                width: ow,
                data: out,
            };
        }
        Ok(map)
    }
}

pub fn extract_features<T: Real>(img: &ImageBuffer<T>, spec: &FeatureExtractorSpec) -> Result<FeatureMap<T>> {
    ConvExtractor::new(spec)?.extract(img)
}
