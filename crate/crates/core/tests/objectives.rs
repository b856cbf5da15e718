use gmea_core::image::ImageBuffer;
use gmea_core::objectives::{
    channel_std, extract_features, f1_visual_loss, f2_watermark_destruction, feature_dispersion, ssim,
    ConvExtractor, FeatureExtractor, FeatureExtractorSpec, C1, C2, SSIM_SIGMA, SSIM_WINDOW,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise(w: usize, h: usize, seed: u64) -> ImageBuffer<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImageBuffer::from_fn(w, h, |_, _, _| rng.random())
}

/// Direct 2-D windowed SSIM: for every pixel, weights an 11x11 Gaussian
/// neighborhood with out-of-range samples treated as zero.
fn naive_ssim(a: &ImageBuffer<f64>, b: &ImageBuffer<f64>) -> f64 {
    let r = (SSIM_WINDOW / 2) as isize;
    let g = |d: isize| (-(d * d) as f64 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    let norm: f64 = (-r..=r).map(g).sum::<f64>();
    let mut total = 0.0;
    for c in 0..3 {
        let mut sum = 0.0;
        for y in 0..a.height as isize {
            for x in 0..a.width as isize {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (sx, sy) = (x + dx, y + dy);
                        if sx < 0 || sy < 0 || sx >= a.width as isize || sy >= a.height as isize {
                            continue;
                        }
                        let wgt = g(dx) * g(dy) / (norm * norm);
                        let va = a.get(sx as usize, sy as usize, c);
                        let vb = b.get(sx as usize, sy as usize, c);
                        ma += wgt * va;
                        mb += wgt * vb;
                        saa += wgt * va * va;
                        sbb += wgt * vb * vb;
                        sab += wgt * va * vb;
                    }
                }
                let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
                sum += ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
            }
        }
        total += sum / (a.width * a.height) as f64;
    }
    total / 3.0
}

#[test]
fn ssim_matches_direct_window_evaluation() {
    let a = noise(20, 14, 1);
    let mut b = a.clone();
    for (i, v) in b.pixels.iter_mut().enumerate() {
        *v = (*v + 0.2 * ((i % 7) as f64 / 7.0 - 0.5)).clamp(0.0, 1.0);
    }
    let fast = ssim(&a, &b).unwrap();
    assert!((fast - naive_ssim(&a, &b)).abs() < 1e-9);
    assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    assert!(ssim(&a, &noise(20, 15, 1)).is_err());
}

/// Plain nested-loop convolution stack.
fn naive_features(img: &ImageBuffer<f64>, ex: &ConvExtractor<f64>) -> Vec<Vec<f64>> {
    let spec = ex.spec();
    let ks = spec.kernel_size;
    let mut maps: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|c| (0..img.height).map(|y| (0..img.width).map(|x| img.get(x, y, c)).collect()).collect())
        .collect();
    for layer in 0..ex.layer_count() {
        let (h, w) = (maps[0].len(), maps[0][0].len());
        let (oh, ow) = ((h - ks) / spec.stride + 1, (w - ks) / spec.stride + 1);
        let out_ch = spec.channels[layer + 1];
        let mut next = vec![vec![vec![0.0; ow]; oh]; out_ch];
        for (o, plane) in next.iter_mut().enumerate() {
            let k = ex.kernel(layer, o);
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = 0.0;
                    for (i, src) in maps.iter().enumerate() {
                        for ky in 0..ks {
                            for kx in 0..ks {
                                acc += k[i * ks * ks + ky * ks + kx] * src[oy * spec.stride + ky][ox * spec.stride + kx];
                            }
                        }
                    }
                    plane[oy][ox] = if spec.relu_after[layer] { acc.max(0.0) } else { acc };
                }
            }
        }
        maps = next;
    }
    maps.into_iter().map(|p| p.into_iter().flatten().collect()).collect()
}

#[test]
fn features_match_nested_loop_oracle() {
    let img = noise(23, 17, 4);
    let spec = FeatureExtractorSpec::default();
    let ex = ConvExtractor::<f64>::new(&spec).unwrap();
    let map = ex.extract(&img).unwrap();
    let want = naive_features(&img, &ex);
    assert_eq!(map.channels, want.len());
    for (c, plane) in want.iter().enumerate() {
        for (x, y) in map.channel(c).iter().zip(plane) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    assert_eq!(extract_features(&img, &spec).unwrap(), map);
}

#[test]
fn every_kernel_sums_to_exactly_zero() {
    let ex = ConvExtractor::<f32>::new(&FeatureExtractorSpec::with_seed(9)).unwrap();
    for layer in 0..ex.layer_count() {
        for o in 0..ex.spec().channels[layer + 1] {
            assert_eq!(ex.kernel(layer, o).iter().sum::<f32>(), 0.0);
        }
    }
}

#[test]
fn channel_std_matches_two_pass_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xs: Vec<f64> = (0..1000).map(|_| rng.random_range(-3.0..5.0)).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    assert!((channel_std(&xs) - var.sqrt()).abs() < 1e-12);
    assert_eq!(channel_std(&[0.1f64; 50]), 0.0);
}

#[test]
fn objective_identities() {
    let ex = ConvExtractor::<f64>::new(&FeatureExtractorSpec::default()).unwrap();
    let a = noise(32, 32, 6);
    assert!(f1_visual_loss(&[a.clone()], &[a.clone()], 0.85).unwrap().abs() < 1e-9);
    for level in [0.0, 0.37, 1.0] {
        assert_eq!(feature_dispersion(&ImageBuffer::filled(32, 32, level), &ex).unwrap(), 0.0);
    }
    let mut shifted = a.clone();
    shifted.pixels.iter_mut().for_each(|v| *v += 0.25);
    let d0 = feature_dispersion(&a, &ex).unwrap();
    let d1 = feature_dispersion(&shifted, &ex).unwrap();
    assert!((d0 - d1).abs() < 1e-9);
    assert!(f2_watermark_destruction(&[], &ex).is_err());
    assert!(f1_visual_loss(&[a.clone()], &[], 0.85).is_err());
}

proptest! {
    #[test]
    fn ssim_is_symmetric_and_bounded(seed in any::<u64>()) {
        let a = noise(16, 12, seed);
        let b = noise(16, 12, seed.wrapping_add(1));
        let s = ssim(&a, &b).unwrap();
        prop_assert!((s - ssim(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(s <= 1.0 + 1e-12 && s >= -1.0);
    }

    #[test]
    fn dispersion_is_offset_invariant(seed in any::<u64>(), offset in -0.5f64..0.5) {
        let ex = ConvExtractor::<f64>::new(&FeatureExtractorSpec::with_seed(seed)).unwrap();
        let a = noise(24, 20, seed);
        let mut b = a.clone();
        b.pixels.iter_mut().for_each(|v| *v += offset);
        let d = feature_dispersion(&a, &ex).unwrap() - feature_dispersion(&b, &ex).unwrap();
        prop_assert!(d.abs() < 1e-9);
    }
}
