//! Deterministic CPU forward splatting.
//!
//! Rendering is split in two stages. [`prepare`] projects every kernel,
//! sorts the projected splats front to back (ties by kernel index) and
//! evaluates the per-pixel Gaussian falloff once. [`PreparedView::composite`]
//! then alpha-composites those fragments with a per-kernel keep mask and
//! color table. [`render`] is exactly `prepare` followed by `composite`, so
//! re-compositing a prepared view with a decoded genome reproduces
//! `render(decode(genome))` bit for bit.

use crate::camera::Camera;
use crate::image::ImageBuffer;
use crate::scalar::{mat_mul, quat_to_mat, sigmoid, transpose, Real, Vec3};
use crate::splat::{GaussianKernel, SplatModel};

/// Low-pass dilation added to the screen-space covariance diagonal (px²).
pub const DILATION: f64 = 0.3;
pub const MAX_ALPHA: f64 = 0.99;
pub const MIN_ALPHA: f64 = 1.0 / 255.0;
pub const MIN_TRANSMITTANCE: f64 = 1e-4;

/// Screen-space footprint of one kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Splat2D<T> {
    pub mean2d: [T; 2],
    /// Symmetric covariance `[xx, xy, yy]` in px².
    pub cov2d: [T; 3],
    pub depth: T,
    pub color: Vec3<T>,
    pub alpha_peak: T,
}

impl<T: Real> Splat2D<T> {
    /// Inverse covariance `[xx, xy, yy]`; `None` if not positive definite.
    pub fn conic(&self) -> Option<[T; 3]> {
        let [a, b, c] = self.cov2d;
        let det = a * c - b * b;
        if !(det > T::zero()) {
            return None;
        }
        Some([c / det, -b / det, a / det])
    }

    /// Three-sigma radius along the major axis.
    pub fn radius(&self) -> T {
        let [a, b, c] = self.cov2d;
        let half = T::lit(0.5);
        let mid = half * (a + c);
        let disc = (mid * mid - (a * c - b * b)).max(T::zero()).sqrt();
        T::lit(3.0) * (mid + disc).sqrt()
    }
}

/// EWA projection of a kernel; `None` when at or behind the near plane.
pub fn project_gaussian<T: Real>(kernel: &GaussianKernel<T>, camera: &Camera<T>) -> Option<Splat2D<T>> {
    let t = camera.world_to_camera(kernel.position);
    let z = t[2];
    if !(z > camera.near) {
        return None;
    }
    let f = camera.focal();
    let [cx, cy] = camera.principal_point();
    let mean2d = [f * t[0] / z + cx, f * t[1] / z + cy];

    // clamp the Jacobian linearization point to a guard band around the frustum
    let lim_x = T::lit(1.3) * cx / f;
    let lim_y = T::lit(1.3) * cy / f;
    let tx = (t[0] / z).max(-lim_x).min(lim_x) * z;
    let ty = (t[1] / z).max(-lim_y).min(lim_y) * z;
    let zero = T::zero();
    let j = [
        [f / z, zero, -f * tx / (z * z)],
        [zero, f / z, -f * ty / (z * z)],
    ];

    let r = quat_to_mat(kernel.rotation);
    let s = kernel.scale();
    let rs = [
        [r[0][0] * s[0], r[0][1] * s[1], r[0][2] * s[2]],
        [r[1][0] * s[0], r[1][1] * s[1], r[1][2] * s[2]],
        [r[2][0] * s[0], r[2][1] * s[1], r[2][2] * s[2]],
    ];
    let sigma = mat_mul(&rs, &transpose(&rs));
    let w_sigma_wt = mat_mul(&mat_mul(&camera.rotation, &sigma), &transpose(&camera.rotation));

    // J (W Σ Wᵀ) Jᵀ for the 2x3 Jacobian
    let mut jm = [[zero; 3]; 2];
    for (row, jr) in jm.iter_mut().zip(&j) {
        for (col, cell) in row.iter_mut().enumerate() {
            *cell = jr[0] * w_sigma_wt[0][col] + jr[1] * w_sigma_wt[1][col] + jr[2] * w_sigma_wt[2][col];
        }
    }
    let dot = |a: &[T; 3], b: &[T; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let dil = T::lit(DILATION);
    let cov2d = [dot(&jm[0], &j[0]) + dil, dot(&jm[0], &j[1]), dot(&jm[1], &j[1]) + dil];

    Some(Splat2D {
        mean2d,
        cov2d,
        depth: z,
        color: clamp_color(kernel.dc_color),
        alpha_peak: sigmoid(kernel.opacity_logit),
    })
}

#[inline]
fn clamp_color<T: Real>(c: Vec3<T>) -> Vec3<T> {
    c.map(|v| v.max(T::zero()).min(T::one()))
}

#[derive(Clone, Copy, Debug)]
struct Fragment<T> {
    kernel: u32,
    pixel: u32,
    alpha: T,
}

/// Depth-sorted fragments of a model seen from one camera.
#[derive(Clone, Debug)]
pub struct PreparedView<T> {
    pub width: usize,
    pub height: usize,
    kernel_count: usize,
    fragments: Vec<Fragment<T>>,
}

/// Projects and sorts a model for one camera.
pub fn prepare<T: Real>(model: &SplatModel<T>, camera: &Camera<T>) -> PreparedView<T> {
    let (w, h) = (camera.width, camera.height);
    let mut splats: Vec<(usize, Splat2D<T>)> = model
        .kernels
        .iter()
        .enumerate()
        .filter_map(|(i, k)| project_gaussian(k, camera).map(|s| (i, s)))
        .collect();
    splats.sort_by(|a, b| a.1.depth.total_cmp(&b.1.depth).then(a.0.cmp(&b.0)));

    let max_alpha = T::lit(MAX_ALPHA);
    let min_alpha = T::lit(MIN_ALPHA);
    let half = T::lit(0.5);
    let mut fragments = Vec::new();
    for (index, splat) in &splats {
        if splat.alpha_peak < min_alpha {
            continue;
        }
        let Some(conic) = splat.conic() else { continue };
        let r = splat.radius();
        let [mx, my] = splat.mean2d;
        let x0 = (mx - r).floor().max(T::zero());
        let y0 = (my - r).floor().max(T::zero());
        let x1 = (mx + r).ceil().min(T::from_usize_lossy(w));
        let y1 = (my + r).ceil().min(T::from_usize_lossy(h));
        if !(x0 < x1 && y0 < y1) {
            continue;
        }
        let (x0, x1) = (x0.as_f64() as usize, x1.as_f64() as usize);
        let (y0, y1) = (y0.as_f64() as usize, y1.as_f64() as usize);
        for y in y0..y1 {
            let dy = T::from_usize_lossy(y) + half - my;
            for x in x0..x1 {
                let dx = T::from_usize_lossy(x) + half - mx;
                let power = -half * (conic[0] * dx * dx + conic[2] * dy * dy) - conic[1] * dx * dy;
                if power > T::zero() {
                    continue;
                }
                let alpha = (splat.alpha_peak * power.exp()).min(max_alpha);
                if alpha < min_alpha {
                    continue;
                }
                fragments.push(Fragment {
                    kernel: *index as u32,
                    pixel: (y * w + x) as u32,
                    alpha,
                });
            }
        }
    }
    PreparedView {
        width: w,
        height: h,
        kernel_count: model.len(),
        fragments,
    }
}

impl<T: Real> PreparedView<T> {
    pub fn kernel_count(&self) -> usize {
        self.kernel_count
    }

    pub fn fragment_count(&self) -> usize {
        self.fragments.len()
    }

    /// Front-to-back compositing over a black background. `colors` holds one
    /// (unclamped) RGB triple per kernel of the prepared model; kernels with
    /// `keep[i] == false` are skipped entirely.
    pub fn composite(&self, colors: &[Vec3<T>], keep: Option<&[bool]>) -> ImageBuffer<T> {
        assert_eq!(colors.len(), self.kernel_count, "one color per kernel");
        if let Some(k) = keep {
            assert_eq!(k.len(), self.kernel_count, "one keep flag per kernel");
        }
        let n = self.width * self.height;
        let mut trans = vec![T::one(); n];
        let mut done = vec![false; n];
        let mut img = ImageBuffer::<T>::black(self.width, self.height);
        let min_t = T::lit(MIN_TRANSMITTANCE);
        for f in &self.fragments {
            let kernel = f.kernel as usize;
            if keep.is_some_and(|k| !k[kernel]) {
                continue;
            }
            let p = f.pixel as usize;
            if done[p] {
                continue;
            }
            let t = trans[p];
            let weight = f.alpha * t;
            let color = clamp_color(colors[kernel]);
            for (c, value) in color.iter().enumerate() {
                img.pixels[p * 3 + c] += *value * weight;
            }
            let next = t * (T::one() - f.alpha);
            trans[p] = next;
            if next < min_t {
                done[p] = true;
            }
        }
        for v in img.pixels.iter_mut() {
            *v = v.max(T::zero()).min(T::one());
        }
        img
    }
}

/// Renders a model from one camera.
pub fn render<T: Real>(model: &SplatModel<T>, camera: &Camera<T>) -> ImageBuffer<T> {
    let colors: Vec<Vec3<T>> = model.kernels.iter().map(|k| k.dc_color).collect();
    prepare(model, camera).composite(&colors, None)
}

pub fn render_views<T: Real>(model: &SplatModel<T>, cameras: &[Camera<T>]) -> Vec<ImageBuffer<T>> {
    cameras.iter().map(|c| render(model, c)).collect()
}

/// Per-pixel transmittance sequence encountered while compositing, for
/// invariant checks. Returns the transmittance after each fragment that
/// touched `pixel`.
pub fn transmittance_trace<T: Real>(view: &PreparedView<T>, pixel: usize) -> Vec<T> {
    let mut t = T::one();
    let mut out = Vec::new();
    for f in view.fragments.iter().filter(|f| f.pixel as usize == pixel) {
        if t < T::lit(MIN_TRANSMITTANCE) {
            break;
        }
        t *= T::one() - f.alpha;
        out.push(t);
    }
    out
}
