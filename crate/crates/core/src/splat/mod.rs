//! Gaussian splat domain types.

mod ply;

pub use ply::{load_ply, load_ply_from_bytes, save_ply, save_ply_with, write_ply, PlyEncoding};

use crate::scalar::{sigmoid, Real, Vec3};

/// One splat primitive, stored in the raw (pre-activation) parametrization
/// used by exported 3DGS files.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianKernel<T> {
    pub position: Vec3<T>,
    /// Log of the per-axis standard deviations.
    pub log_scale: Vec3<T>,
    /// Unit quaternion `(w, x, y, z)`.
    pub rotation: [T; 4],
    pub opacity_logit: T,
    /// Degree-0 RGB color. Stored unclamped, clamped at render time.
    pub dc_color: Vec3<T>,
}

impl<T: Real> GaussianKernel<T> {
    /// Isotropic kernel with identity rotation.
    pub fn isotropic(position: Vec3<T>, scale: T, opacity: T, color: Vec3<T>) -> Self {
        let ls = scale.ln();
        Self {
            position,
            log_scale: [ls; 3],
            rotation: [T::one(), T::zero(), T::zero(), T::zero()],
            opacity_logit: logit(opacity),
            dc_color: color,
        }
    }

    pub fn opacity(&self) -> T {
        sigmoid(self.opacity_logit)
    }

    pub fn scale(&self) -> Vec3<T> {
        self.log_scale.map(|s| s.exp())
    }

    /// Converts every field to another scalar type.
    pub fn cast<U: Real>(&self) -> GaussianKernel<U> {
        let c = |x: T| U::lit(x.as_f64());
        GaussianKernel {
            position: self.position.map(c),
            log_scale: self.log_scale.map(c),
            rotation: self.rotation.map(c),
            opacity_logit: c(self.opacity_logit),
            dc_color: self.dc_color.map(c),
        }
    }
}

/// Inverse of the logistic function.
pub fn logit<T: Real>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

/// Ordered collection of kernels. Kernel indices are stable and referenced
/// by grouping and decoding.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SplatModel<T> {
    pub kernels: Vec<GaussianKernel<T>>,
    pub source_tag: String,
}

impl<T: Real> SplatModel<T> {
    pub fn new(kernels: Vec<GaussianKernel<T>>, source_tag: impl Into<String>) -> Self {
        Self {
            kernels,
            source_tag: source_tag.into(),
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), "")
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3<T>> {
        self.kernels.iter().map(|k| k.position).collect()
    }

    /// Center and radius of the smallest axis-aligned-box-centered sphere
    /// enclosing all kernel positions.
    pub fn bounding_sphere(&self) -> (Vec3<T>, T) {
        if self.kernels.is_empty() {
            return ([T::zero(); 3], T::one());
        }
        let mut lo = [T::infinity(); 3];
        let mut hi = [T::neg_infinity(); 3];
        for k in &self.kernels {
            for a in 0..3 {
                lo[a] = lo[a].min(k.position[a]);
                hi[a] = hi[a].max(k.position[a]);
            }
        }
        let half = T::lit(0.5);
        let center = [
            (lo[0] + hi[0]) * half,
            (lo[1] + hi[1]) * half,
            (lo[2] + hi[2]) * half,
        ];
        let radius = self
            .kernels
            .iter()
            .map(|k| crate::scalar::norm3(crate::scalar::sub3(k.position, center)))
            .fold(T::zero(), T::max);
        (center, radius.max(T::lit(1e-6)))
    }

    pub fn cast<U: Real>(&self) -> SplatModel<U> {
        SplatModel {
            kernels: self.kernels.iter().map(GaussianKernel::cast).collect(),
            source_tag: self.source_tag.clone(),
        }
    }
}
