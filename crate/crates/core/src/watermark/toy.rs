use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::BitString;
use crate::error::{arg_err, GmeaError, Result};
use crate::image::ImageBuffer;
use crate::objectives::{ViewMode, ViewSampler, ViewSet};
use crate::render::render;
use crate::scalar::Real;
use crate::splat::SplatModel;

/// Parameters for creating a toy watermark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyWatermarkSpec {
    pub bits: usize,
    pub rows: usize,
    pub cols: usize,
    pub strength: f64,
    /// Seed of the random message.
    pub seed: u64,
}

impl Default for ToyWatermarkSpec {
    fn default() -> Self {
        Self {
            bits: 16,
            rows: 4,
            cols: 4,
            strength: 0.05,
            seed: 0,
        }
    }
}

/// A green-channel cell watermark. Bit `i` lives in cell `i` (row-major) of
/// the first decode view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyWatermark<T> {
    pub bits: BitString,
    pub rows: usize,
    pub cols: usize,
    pub strength: T,
    pub views: ViewSet<T>,
    /// Mean green per view per cell of the un-watermarked render.
    pub reference: Vec<Vec<T>>,
    /// Bit positions that touched at least one kernel.
    pub embedded: Vec<usize>,
}

impl<T: Real> ToyWatermark<T> {
    pub fn new(bits: BitString, rows: usize, cols: usize, strength: T, views: ViewSet<T>) -> Result<Self> {
        if rows * cols < bits.len() {
            return arg_err(format!("{rows}x{cols} cells cannot hold {} bits", bits.len()));
        }
        if views.is_empty() {
            return arg_err("a toy watermark needs at least one decode view");
        }
        Ok(Self {
            bits,
            rows,
            cols,
            strength,
            views,
            reference: Vec::new(),
            embedded: Vec::new(),
        })
    }

    /// Random message decoded from the first report view of `model`.
    pub fn for_model(model: &SplatModel<T>, spec: &ToyWatermarkSpec, width: usize, height: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let bits = BitString::random(spec.bits, &mut rng)?;
        let sampler = ViewSampler::framing(model, ViewMode::Sphere, width, height);
        let mut views = sampler.report_views()?;
        views.cameras.truncate(1);
        Self::new(bits, spec.rows, spec.cols, T::lit(spec.strength), views)
    }

    /// The message restricted to embeddable positions.
    pub fn embedded_bits(&self) -> Result<BitString> {
        if self.embedded.is_empty() {
            return Err(GmeaError::State("no bit of the watermark was embedded".into()));
        }
        self.bits.select(&self.embedded)
    }

    fn cell_of(&self, x: usize, y: usize, width: usize, height: usize) -> usize {
        (y * self.rows / height) * self.cols + x * self.cols / width
    }

    fn cell_means(&self, img: &ImageBuffer<T>) -> Vec<T> {
        let cells = self.rows * self.cols;
        let mut sum = vec![T::zero(); cells];
        let mut count = vec![0usize; cells];
        for y in 0..img.height {
            for x in 0..img.width {
                let c = self.cell_of(x, y, img.width, img.height);
                sum[c] += img.get(x, y, 1);
                count[c] += 1;
            }
        }
        sum.iter()
            .zip(&count)
            .map(|(&s, &n)| if n > 0 { s / T::from_usize_lossy(n) } else { T::zero() })
            .collect()
    }
}

/// Shifts the green DC channel of every kernel whose center projects into
/// bit cell `i` by `+strength` (bit 1) or `-strength` (bit 0), and records
/// the pre-embedding reference statistics in `wm`.
pub fn embed_toy_watermark<T: Real>(model: &SplatModel<T>, wm: &mut ToyWatermark<T>) -> Result<SplatModel<T>> {
    wm.reference = wm
        .views
        .cameras
        .iter()
        .map(|cam| wm.cell_means(&render(model, cam)))
        .collect();
    let cam = &wm.views.cameras[0];
    let f = cam.focal();
    let [cx, cy] = cam.principal_point();
    let mut out = model.clone();
    let mut touched = vec![false; wm.bits.len()];
    for kernel in &mut out.kernels {
        let p = cam.world_to_camera(kernel.position);
        if p[2] <= cam.near {
            continue;
        }
        let u = (f * p[0] / p[2] + cx).as_f64();
        let v = (f * p[1] / p[2] + cy).as_f64();
        if !(u >= 0.0 && v >= 0.0 && u < cam.width as f64 && v < cam.height as f64) {
            continue;
        }
        let cell = wm.cell_of(u as usize, v as usize, cam.width, cam.height);
        if cell >= wm.bits.len() {
            continue;
        }
        touched[cell] = true;
        let shift = if wm.bits.bits()[cell] { wm.strength } else { -wm.strength };
        kernel.dc_color[1] += shift;
    }
    wm.embedded = (0..wm.bits.len()).filter(|&i| touched[i]).collect();
    Ok(out)
}

/// Reads the message back from renders: per-cell mean green residual against
/// the reference, averaged over decode views, thresholded at zero.
pub fn decode_toy_watermark<T: Real>(model: &SplatModel<T>, wm: &ToyWatermark<T>) -> Result<BitString> {
    if wm.reference.len() != wm.views.len() {
        return Err(GmeaError::State("toy watermark has not been embedded".into()));
    }
    let mut residual = vec![T::zero(); wm.rows * wm.cols];
    for (cam, reference) in wm.views.cameras.iter().zip(&wm.reference) {
        for (r, (m, base)) in residual.iter_mut().zip(wm.cell_means(&render(model, cam)).iter().zip(reference)) {
            *r += *m - *base;
        }
    }
    BitString::new(wm.embedded.iter().map(|&i| residual[i] > T::zero()).collect())
}
