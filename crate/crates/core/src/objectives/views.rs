//! Camera sets used for fitness evaluation and reporting.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::Result;
use crate::scalar::{Real, Vec3};
use crate::splat::SplatModel;

pub const DEFAULT_FOV_DEG: f64 = 50.0;
pub const DISTANCE_FACTOR: f64 = 2.5;
pub const REPORT_ELEVATION_DEG: f64 = 30.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewSet<T> {
    pub cameras: Vec<Camera<T>>,
    pub resample_seed: u64,
}

impl<T: Real> ViewSet<T> {
    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewMode {
    /// Full sphere around the scene, Blender style.
    Sphere,
    /// Forward-facing arc, LLFF style.
    Arc,
}

impl std::str::FromStr for ViewMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "arc" => Ok(Self::Arc),
            other => Err(format!("unknown view mode `{other}` (expected sphere|arc)")),
        }
    }
}

/// Generates seeded camera batches framed on a fixed scene.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewSampler<T> {
    pub mode: ViewMode,
    pub center: Vec3<T>,
    pub distance: T,
    pub fov_y: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> ViewSampler<T> {
    /// Frames `model` at 2.5x its bounding radius.
    pub fn framing(model: &SplatModel<T>, mode: ViewMode, width: usize, height: usize) -> Self {
        let (center, radius) = model.bounding_sphere();
        Self {
            mode,
            center,
            distance: radius * T::lit(DISTANCE_FACTOR),
            fov_y: T::lit(DEFAULT_FOV_DEG.to_radians()),
            width,
            height,
        }
    }

    pub fn camera(&self, azimuth_deg: f64, elevation_deg: f64) -> Result<Camera<T>> {
        Camera::orbit(
            self.center,
            self.distance,
            T::lit(azimuth_deg.to_radians()),
            T::lit(elevation_deg.to_radians()),
            self.fov_y,
            self.width,
            self.height,
        )
    }

    /// `count` cameras drawn from stream `stream` of `seed`.
    pub fn sample(&self, seed: u64, stream: u64, count: usize) -> Result<ViewSet<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let cameras = (0..count)
            .map(|_| {
                let (az, el) = match self.mode {
                    ViewMode::Sphere => {
                        let az = rng.random::<f64>() * 360.0;
                        let el = (2.0 * rng.random::<f64>() - 1.0).asin() * 180.0 / PI;
                        (az, el.clamp(-80.0, 80.0))
                    }
                    ViewMode::Arc => (
                        rng.random_range(-30.0..30.0),
                        rng.random_range(-10.0..10.0),
                    ),
                };
                self.camera(az, el)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ViewSet {
            cameras,
            resample_seed: seed,
        })
    }

    /// Four fixed report cameras at azimuths 0/90/180/270 degrees, 30 degrees up.
    pub fn report_views(&self) -> Result<ViewSet<T>> {
        let cameras = [0.0, 90.0, 180.0, 270.0]
            .iter()
            .map(|&az| self.camera(az, REPORT_ELEVATION_DEG))
            .collect::<Result<Vec<_>>>()?;
        Ok(ViewSet {
            cameras,
            resample_seed: 0,
        })
    }
}
