//! Pinhole cameras.

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::scalar::{cross3, normalize3, sub3, Mat3, Real, Vec3};

/// Pinhole camera. `rotation` maps world directions into camera space, whose
/// axes are x right, y down, z forward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera<T> {
    pub position: Vec3<T>,
    pub rotation: Mat3<T>,
    /// Vertical field of view in radians.
    pub fov_y: T,
    pub width: usize,
    pub height: usize,
    pub near: T,
}

impl<T: Real> Camera<T> {
    pub fn new(
        position: Vec3<T>,
        rotation: Mat3<T>,
        fov_y: T,
        width: usize,
        height: usize,
        near: T,
    ) -> Result<Self> {
        let cam = Self {
            position,
            rotation,
            fov_y,
            width,
            height,
            near,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov_y > T::zero() && self.fov_y < T::PI()) {
            return arg_err(format!("field of view {} outside (0, pi)", self.fov_y));
        }
        if self.width == 0 || self.height == 0 {
            return arg_err("image dimensions must be at least 1x1");
        }
        if !(self.near > T::zero()) {
            return arg_err(format!("near plane {} must be positive", self.near));
        }
        Ok(())
    }

    /// Camera at `eye` looking at `target` with `up` as the world up direction.
    pub fn look_at(
        eye: Vec3<T>,
        target: Vec3<T>,
        up: Vec3<T>,
        fov_y: T,
        width: usize,
        height: usize,
        near: T,
    ) -> Result<Self> {
        let forward = normalize3(sub3(target, eye));
        let mut right = cross3(forward, up);
        if crate::scalar::norm3(right) < T::lit(1e-9) {
            // looking straight along `up`
            right = cross3(forward, [T::one(), T::zero(), T::zero()]);
        }
        let right = normalize3(right);
        let down = cross3(forward, right);
        Self::new(eye, [right, down, forward], fov_y, width, height, near)
    }

    /// Camera orbiting `center` on a y-up sphere; angles in radians.
    pub fn orbit(
        center: Vec3<T>,
        distance: T,
        azimuth: T,
        elevation: T,
        fov_y: T,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let limit = T::lit(89.0_f64.to_radians());
        let el = elevation.max(-limit).min(limit);
        let eye = [
            center[0] + distance * el.cos() * azimuth.sin(),
            center[1] + distance * el.sin(),
            center[2] + distance * el.cos() * azimuth.cos(),
        ];
        let near = distance * T::lit(0.01);
        Self::look_at(eye, center, [T::zero(), T::one(), T::zero()], fov_y, width, height, near)
    }

    /// Focal length in pixels (square pixels).
    pub fn focal(&self) -> T {
        T::from_usize_lossy(self.height) / (T::lit(2.0) * (self.fov_y * T::lit(0.5)).tan())
    }

    /// Principal point in pixel coordinates.
    pub fn principal_point(&self) -> [T; 2] {
        let half = T::lit(0.5);
        [
            T::from_usize_lossy(self.width) * half,
            T::from_usize_lossy(self.height) * half,
        ]
    }

    pub fn world_to_camera(&self, p: Vec3<T>) -> Vec3<T> {
        crate::scalar::mat_vec(&self.rotation, sub3(p, self.position))
    }

    /// Same pose, different resolution.
    pub fn with_resolution(&self, width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            ..*self
        }
    }
}
