//! Seeded synthetic scenes for tests, benchmarks and demos.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Real;
use crate::splat::{logit, GaussianKernel, SplatModel};

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

fn unit_quaternion(rng: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| Distribution::<f64>::sample(&StandardNormal, rng));
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-6 {
            return q.map(|v| v / n);
        }
    }
}

fn kernel<T: Real>(position: [f64; 3], scale: [f64; 3], rotation: [f64; 4], opacity: f64, color: [f64; 3]) -> GaussianKernel<T> {
    GaussianKernel {
        position: position.map(T::lit),
        log_scale: scale.map(|s| T::lit(s.ln())),
        rotation: rotation.map(T::lit),
        opacity_logit: T::lit(logit(opacity)),
        dc_color: color.map(T::lit),
    }
}

/// `n` anisotropic kernels on a unit sphere shell with smoothly varying
/// colors in roughly [0.15, 0.85].
pub fn sphere_scene<T: Real>(n: usize, seed: u64) -> SplatModel<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernels = (0..n)
        .map(|_| {
            let d = unit_vector(&mut rng);
            let r = rng.random_range(0.9..1.0);
            let pos = d.map(|v| v * r);
            let color = [
                0.5 + 0.35 * (2.0 * d[0] + d[1]).sin(),
                0.5 + 0.35 * (3.0 * d[1] - d[2]).cos() * 0.9,
                0.5 + 0.35 * (2.5 * d[2] + 0.5 * d[0]).sin(),
            ];
            let scale = std::array::from_fn(|_| rng.random_range(0.06..0.12));
            let opacity = rng.random_range(0.6..0.95);
            kernel(pos, scale, unit_quaternion(&mut rng), opacity, color)
        })
        .collect();
    SplatModel::new(kernels, format!("sphere-{n}-{seed}"))
}

/// Two isotropic clusters of `per_blob` kernels centered at `(+-separation/2, 0, 0)`
/// with unit-variance-scaled spread `spread`.
pub fn two_blobs<T: Real>(per_blob: usize, separation: f64, spread: f64, seed: u64) -> SplatModel<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kernels = Vec::with_capacity(2 * per_blob);
    for side in [-0.5, 0.5] {
        for _ in 0..per_blob {
            let offset: [f64; 3] = std::array::from_fn(|_| spread * Distribution::<f64>::sample(&StandardNormal, &mut rng));
            let pos = [side * separation + offset[0], offset[1], offset[2]];
            kernels.push(kernel(pos, [0.05; 3], [1.0, 0.0, 0.0, 0.0], 0.8, [0.5; 3]));
        }
    }
    SplatModel::new(kernels, "two-blobs")
}

/// Kernels with every field drawn independently, for serialization tests.
pub fn random_model<T: Real>(n: usize, seed: u64) -> SplatModel<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernels = (0..n)
        .map(|_| {
            let pos = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
            let scale = std::array::from_fn(|_| rng.random_range(0.01..0.5));
            let color = std::array::from_fn(|_| rng.random_range(-0.5..1.5));
            let opacity = rng.random_range(0.01..0.99);
            kernel(pos, scale, unit_quaternion(&mut rng), opacity, color)
        })
        .collect();
    SplatModel::new(kernels, format!("random-{n}-{seed}"))
}
