//! Spatial decomposition of a model into sub-models and their reassembly.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{arg_err, Result};
use crate::scalar::{Real, Vec3};
use crate::splat::SplatModel;

pub const DEFAULT_GROUPS: usize = 10;
pub const MAX_LLOYD_ITERATIONS: usize = 100;
pub const CONVERGENCE_SHIFT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment<T> {
    pub k: usize,
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec3<T>>,
    pub wcss: T,
    /// WCSS after every centroid update, starting with the seeding step.
    pub wcss_history: Vec<T>,
}

impl<T: Real> ClusterAssignment<T> {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Writes `kernel_index,label` rows.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "kernel_index,label")?;
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(out, "{i},{l}")?;
        }
        Ok(())
    }
}

#[inline]
fn dist2<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

fn wcss_of<T: Real>(points: &[Vec3<T>], labels: &[usize], centroids: &[Vec3<T>]) -> T {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| dist2(p, &centroids[l]))
        .sum()
}

fn seed_plus_plus<T: Real>(points: &[Vec3<T>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3<T>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut nearest: Vec<T> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: T = nearest.iter().copied().sum();
        let pick = if total > T::zero() {
            let target = T::lit(rng.random::<f64>()) * total;
            let mut acc = T::zero();
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if acc > target && d > T::zero() {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick];
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Reassigns each point to its nearest centroid, keeping the current label
/// unless another centroid is strictly closer.
fn assign<T: Real>(points: &[Vec3<T>], centroids: &[Vec3<T>], labels: &mut [usize]) {
    for (p, label) in points.iter().zip(labels.iter_mut()) {
        let mut best = *label;
        let mut best_d = dist2(p, &centroids[best]);
        for (j, c) in centroids.iter().enumerate() {
            let d = dist2(p, c);
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        *label = best;
    }
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty<T: Real>(points: &[Vec3<T>], centroids: &mut [Vec3<T>], labels: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = T::neg_infinity();
        for (i, p) in points.iter().enumerate() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let d = dist2(p, &centroids[labels[i]]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= n guarantees a donor cluster");
        labels[i] = empty;
        centroids[empty] = points[i];
    }
}

fn update_centroids<T: Real>(points: &[Vec3<T>], labels: &[usize], centroids: &mut [Vec3<T>]) -> T {
    let k = centroids.len();
    let mut sums = vec![[T::zero(); 3]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        for a in 0..3 {
            sums[l][a] += p[a];
        }
        counts[l] += 1;
    }
    let mut shift = T::zero();
    for j in 0..k {
        if counts[j] == 0 {
            continue;
        }
        let n = T::from_usize_lossy(counts[j]);
        let mean = sums[j].map(|s| s / n);
        shift = shift.max(dist2(&mean, &centroids[j]).sqrt());
        centroids[j] = mean;
    }
    shift
}

/// Lloyd's algorithm from a seeded k-means++ start.
pub fn kmeans<T: Real>(points: &[Vec3<T>], k: usize, seed: u64) -> Result<ClusterAssignment<T>> {
    if k == 0 {
        return arg_err("k must be at least 1");
    }
    if k > points.len() {
        return arg_err(format!("k = {k} exceeds the number of points {}", points.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(points, k, &mut rng);
    let mut labels = vec![0usize; points.len()];
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        assign(points, &centroids, &mut labels);
        repair_empty(points, &mut centroids, &mut labels);
        let shift = update_centroids(points, &labels, &mut centroids);
        let wcss = wcss_of(points, &labels, &centroids);
        if let Some(&prev) = history.last() {
            debug_assert!(wcss <= prev, "WCSS increased from {prev} to {wcss}");
        }
        history.push(wcss);
        if shift < T::lit(CONVERGENCE_SHIFT) {
            break;
        }
    }
    Ok(ClusterAssignment {
        k,
        wcss: *history.last().expect("at least one iteration"),
        labels,
        centroids,
        wcss_history: history,
    })
}

/// A sub-model together with the original indices of its kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct SubModel<T> {
    pub model: SplatModel<T>,
    pub indices: Vec<usize>,
}

/// Splits a model by cluster label, preserving original order inside each part.
pub fn partition<T: Real>(model: &SplatModel<T>, assignment: &ClusterAssignment<T>) -> Result<Vec<SubModel<T>>> {
    partition_by_labels(model, &assignment.labels, assignment.k)
}

pub fn partition_by_labels<T: Real>(model: &SplatModel<T>, labels: &[usize], k: usize) -> Result<Vec<SubModel<T>>> {
    if labels.len() != model.len() {
        return arg_err(format!(
            "{} labels for a model of {} kernels",
            labels.len(),
            model.len()
        ));
    }
    let mut parts: Vec<SubModel<T>> = (0..k)
        .map(|i| SubModel {
            model: SplatModel::new(Vec::new(), format!("{}#group{i}", model.source_tag)),
            indices: Vec::new(),
        })
        .collect();
    for (i, (&l, kernel)) in labels.iter().zip(&model.kernels).enumerate() {
        let Some(part) = parts.get_mut(l) else {
            return arg_err(format!("label {l} out of range for k = {k}"));
        };
        part.model.kernels.push(*kernel);
        part.indices.push(i);
    }
    Ok(parts)
}

/// Union of disjoint sub-models, ordered by original index. Gaps left by
/// pruned kernels are allowed.
pub fn merge<T: Real>(parts: &[SubModel<T>]) -> Result<SplatModel<T>> {
    let mut entries = Vec::new();
    for (p, part) in parts.iter().enumerate() {
        if part.model.len() != part.indices.len() {
            return arg_err(format!(
                "part {p} has {} kernels but {} indices",
                part.model.len(),
                part.indices.len()
            ));
        }
        entries.extend(part.indices.iter().copied().zip(part.model.kernels.iter().copied()));
    }
    entries.sort_by_key(|(i, _)| *i);
    if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
        return arg_err(format!("index {} appears in more than one part", w[0].0));
    }
    let tag = parts
        .first()
        .map(|p| p.model.source_tag.split("#group").next().unwrap_or("").to_string())
        .unwrap_or_default();
    Ok(SplatModel::new(entries.into_iter().map(|(_, k)| k).collect(), tag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::GaussianKernel;

    fn model_from(points: &[Vec3<f64>]) -> SplatModel<f64> {
        SplatModel::new(
            points
                .iter()
                .map(|&p| GaussianKernel::isotropic(p, 0.1, 0.5, [0.5; 3]))
                .collect(),
            "t",
        )
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts: Vec<[f64; 3]> = vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 3.0, -3.0]];
        let a = kmeans(&pts, 1, 3).unwrap();
        assert_eq!(a.labels, vec![0, 0, 0]);
        let c = a.centroids[0];
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 1.0).abs() < 1e-12 && (c[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_points_have_zero_wcss() {
        let pts = vec![[1.0, 2.0, 3.0]; 4];
        let a = kmeans(&pts, 2, 0).unwrap();
        assert_eq!(a.wcss, 0.0);
        assert!(a.cluster_sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn too_many_clusters_rejected() {
        assert!(kmeans(&[[0.0f64; 3]; 2], 3, 0).is_err());
        assert!(kmeans(&[[0.0f64; 3]; 2], 0, 0).is_err());
    }

    #[test]
    fn partition_examples() {
        let m = model_from(&[[0.0; 3], [1.0; 3], [2.0; 3]]);
        let single = partition_by_labels(&m, &[0, 0, 0], 1).unwrap();
        assert_eq!(single[0].model.kernels, m.kernels);
        let parts = partition_by_labels(&m, &[0, 1, 0], 2).unwrap();
        assert_eq!(parts[0].indices, vec![0, 2]);
        assert_eq!(parts[1].indices, vec![1]);
        assert!(partition_by_labels(&m, &[0, 1], 2).is_err());
    }

    #[test]
    fn merge_rejects_overlap() {
        let m = model_from(&[[0.0; 3], [1.0; 3]]);
        let a = SubModel { model: model_from(&[[0.0; 3]]), indices: vec![5] };
        let b = SubModel { model: model_from(&[[1.0; 3]]), indices: vec![5] };
        assert!(merge(&[a, b]).is_err());
        let parts = partition_by_labels(&m, &[1, 0], 2).unwrap();
        assert_eq!(merge(&parts).unwrap().kernels, m.kernels);
    }

    #[test]
    fn csv_export() {
        let a = ClusterAssignment::<f64> {
            k: 2,
            labels: vec![1, 0],
            centroids: vec![[0.0; 3]; 2],
            wcss: 0.0,
            wcss_history: vec![0.0],
        };
        let mut out = Vec::new();
        a.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "kernel_index,label\n0,1\n1,0\n");
    }
}
