//! Gaussian-window SSIM with zero padding at the borders.

use crate::error::Result;
use crate::image::ImageBuffer;
use crate::scalar::Real;

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
pub const C1: f64 = 0.01 * 0.01;
pub const C2: f64 = 0.03 * 0.03;

/// Normalized 1-D Gaussian taps.
pub fn gaussian_taps<T: Real>() -> [T; WINDOW] {
    let half = (WINDOW / 2) as f64;
    let raw: Vec<f64> = (0..WINDOW)
        .map(|i| (-((i as f64 - half).powi(2)) / (2.0 * SIGMA * SIGMA)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    std::array::from_fn(|i| T::lit(raw[i] / total))
}

/// Separable "same" filter with implicit zeros outside the plane.
fn blur<T: Real>(plane: &[T], w: usize, h: usize, taps: &[T; WINDOW], scratch: &mut Vec<T>) -> Vec<T> {
    let r = WINDOW / 2;
    scratch.clear();
    scratch.resize(w * h, T::zero());
    // Each tap adds a shifted copy of the row; the inner loops carry no
    // dependency between iterations so they vectorize.
    for (src, dst) in plane.chunks_exact(w).zip(scratch.chunks_exact_mut(w)) {
        for (t, &g) in taps.iter().enumerate() {
            let (lo, hi) = if t < r { (r - t, w) } else { (0, w.saturating_sub(t - r)) };
            if lo >= hi {
                continue;
            }
            let shift = t as isize - r as isize;
            let from = &src[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
            for (d, &v) in dst[lo..hi].iter_mut().zip(from) {
                *d += g * v;
            }
        }
    }
    let mut out = vec![T::zero(); w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (t, &g) in taps.iter().enumerate() {
            let sy = y as isize + t as isize - r as isize;
            if sy < 0 || sy as usize >= h {
                continue;
            }
            let src = &scratch[sy as usize * w..(sy as usize + 1) * w];
            for (d, &v) in dst.iter_mut().zip(src) {
                *d += g * v;
            }
        }
    }
    out
}

/// Windowed statistics of one image, reusable across many comparisons.
#[derive(Clone, Debug)]
pub struct SsimReference<T> {
    width: usize,
    height: usize,
    /// Per channel: (plane, local mean, local second moment).
    channels: Vec<(Vec<T>, Vec<T>, Vec<T>)>,
}

impl<T: Real> SsimReference<T> {
    pub fn new(img: &ImageBuffer<T>) -> Self {
        let taps = gaussian_taps::<T>();
        let (w, h) = (img.width, img.height);
        let mut scratch = Vec::new();
        let channels = (0..3)
            .map(|c| {
                let plane = img.channel(c);
                let sq: Vec<T> = plane.iter().map(|&v| v * v).collect();
                let mu = blur(&plane, w, h, &taps, &mut scratch);
                let m2 = blur(&sq, w, h, &taps, &mut scratch);
                (plane, mu, m2)
            })
            .collect();
        Self {
            width: w,
            height: h,
            channels,
        }
    }

    /// SSIM of `img` against the reference image.
    pub fn compare(&self, img: &ImageBuffer<T>) -> Result<T> {
        if img.width != self.width || img.height != self.height {
            return crate::error::arg_err(format!(
                "image dimensions differ: {}x{} vs {}x{}",
                img.width, img.height, self.width, self.height
            ));
        }
        let taps = gaussian_taps::<T>();
        let (w, h) = (self.width, self.height);
        let (c1, c2, two) = (T::lit(C1), T::lit(C2), T::lit(2.0));
        let mut scratch = Vec::new();
        let mut total = T::zero();
        for (c, (ref_plane, mu_y, m2_y)) in self.channels.iter().enumerate() {
            let plane = img.channel(c);
            let sq: Vec<T> = plane.iter().map(|&v| v * v).collect();
            let cross: Vec<T> = plane.iter().zip(ref_plane).map(|(&a, &b)| a * b).collect();
            let mu_x = blur(&plane, w, h, &taps, &mut scratch);
            let m2_x = blur(&sq, w, h, &taps, &mut scratch);
            let m_xy = blur(&cross, w, h, &taps, &mut scratch);
            let mut sum = T::zero();
            for i in 0..w * h {
                let (mx, my) = (mu_x[i], mu_y[i]);
                let var_x = m2_x[i] - mx * mx;
                let var_y = m2_y[i] - my * my;
                let cov = m_xy[i] - mx * my;
                let num = (two * mx * my + c1) * (two * cov + c2);
                let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
                sum += num / den;
            }
            total += sum / T::from_usize_lossy(w * h);
        }
        Ok(total / T::lit(3.0))
    }
}

/// Mean SSIM over an 11x11 Gaussian window, averaged over RGB.
pub fn ssim<T: Real>(a: &ImageBuffer<T>, b: &ImageBuffer<T>) -> Result<T> {
    a.check_shape(b)?;
    SsimReference::new(b).compare(a)
}
