use gmea_core::image::ImageBuffer;
use gmea_core::synthetic::sphere_scene;
use gmea_core::splat::SplatModel;
use gmea_core::watermark::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bits(s: &str) -> BitString {
    s.parse().unwrap()
}

#[test]
fn bar_examples() {
    let a = BitString::random(48, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(bar(&a, &a).unwrap(), 1.0);
    assert_eq!(bar(&a.complement(), &a).unwrap(), 0.0);
    let half: Vec<bool> = a.bits().iter().enumerate().map(|(i, &b)| if i < 24 { !b } else { b }).collect();
    assert_eq!(bar(&BitString::new(half).unwrap(), &a).unwrap(), 0.5);
    assert!(bar(&bits("01"), &bits("011")).is_err());
}

#[test]
fn wus_examples() {
    assert_eq!(wus(0.5).unwrap(), 1.0);
    assert_eq!(wus(1.0).unwrap(), 0.0);
    assert!((wus(0.6744).unwrap() - 0.6512).abs() < 1e-4);
}

#[test]
fn ids_examples() {
    let perfect = ConfusionCounts::from_bits(&bits("1100"), &bits("1100")).unwrap();
    assert_eq!(ids(&perfect), 0.0);
    let inverted = ConfusionCounts::from_bits(&bits("0011"), &bits("1100")).unwrap();
    assert_eq!(ids(&inverted), 0.0);
    let chance = ConfusionCounts { tp: 12, tn: 12, fp: 12, fn_: 12 };
    assert_eq!(mcc(&chance), 0.0);
    assert_eq!(ids(&chance), 1.0);
}

fn mcc_oracle(e: &[bool], o: &[bool]) -> f64 {
    let count = |x: bool, y: bool| e.iter().zip(o).filter(|(a, b)| **a == x && **b == y).count() as f64;
    let (tp, tn, fp, fn_) = (count(true, true), count(false, false), count(true, false), count(false, true));
    let d = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    if d == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / d
    }
}

fn psnr_oracle(a: &ImageBuffer<f64>, b: &ImageBuffer<f64>) -> (f64, f64) {
    let mut sum = 0.0;
    for y in 0..a.height {
        for x in 0..a.width {
            for c in 0..3 {
                let d = a.get(x, y, c) - b.get(x, y, c);
                sum += d * d;
            }
        }
    }
    let mse = sum / (a.width * a.height * 3) as f64;
    (10.0 * (1.0 / mse).log10(), mse)
}

#[test]
fn psnr_closed_form_and_oracle() {
    let a = ImageBuffer::<f64>::filled(8, 6, 0.3);
    let b = ImageBuffer::<f64>::filled(8, 6, 0.4);
    let (p, m) = psnr_mse(&a, &b).unwrap();
    assert!((m - 0.01).abs() < 1e-12 && (p - 20.0).abs() < 1e-9);
    let (p, m) = psnr_mse(&a, &a).unwrap();
    assert_eq!(m, 0.0);
    assert!(p.is_infinite());

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    use rand::Rng;
    let r1 = ImageBuffer::<f64>::from_fn(13, 7, |_, _, _| rng.random());
    let r2 = ImageBuffer::<f64>::from_fn(13, 7, |_, _, _| rng.random());
    let (p, m) = psnr_mse(&r1, &r2).unwrap();
    let (po, mo) = psnr_oracle(&r1, &r2);
    assert!((p - po).abs() < 1e-9 && (m - mo).abs() < 1e-9);
}

#[test]
fn watermark_report_fields() {
    let f = Fidelity { ssim: 0.95, psnr: 30.0, mse: 0.001 };
    let embedded = bits("1111000011110000");
    let mut extracted_bits = embedded.bits().to_vec();
    for b in extracted_bits.iter_mut().take(4) {
        *b = !*b;
    }
    let r = WatermarkReport::with_bits(f, BitString::new(extracted_bits).unwrap(), embedded).unwrap();
    assert_eq!(r.bar, Some(0.75));
    assert!((r.wus.unwrap() - 0.5).abs() < 1e-12);
    let json = serde_json::to_string(&r).unwrap();
    let back: WatermarkReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

fn marked_scene(seed: u64) -> (SplatModel<f64>, SplatModel<f64>, ToyWatermark<f64>) {
    let model = sphere_scene::<f64>(500, 1);
    let spec = ToyWatermarkSpec { seed, ..Default::default() };
    let mut wm = ToyWatermark::for_model(&model, &spec, 64, 64).unwrap();
    let marked = embed_toy_watermark(&model, &mut wm).unwrap();
    (model, marked, wm)
}

#[test]
fn embed_then_decode_recovers_every_embedded_bit() {
    let (_, marked, wm) = marked_scene(1);
    let embedded = wm.embedded_bits().unwrap();
    assert!(embedded.len() >= 12, "only {} bits embedded", embedded.len());
    assert_eq!(decode_toy_watermark(&marked, &wm).unwrap(), embedded);
}

#[test]
fn all_ones_message_raises_green_of_touched_kernels() {
    let model = sphere_scene::<f64>(300, 3);
    let cam = ToyWatermark::for_model(&model, &ToyWatermarkSpec::default(), 48, 48).unwrap().views;
    let ones = BitString::new(vec![true; 16]).unwrap();
    let mut wm = ToyWatermark::new(ones, 4, 4, 0.05, cam).unwrap();
    let marked = embed_toy_watermark(&model, &mut wm).unwrap();
    let mut touched = 0;
    for (a, b) in model.kernels.iter().zip(&marked.kernels) {
        let dg = b.dc_color[1] - a.dc_color[1];
        assert!(dg == 0.0 || (dg - 0.05).abs() < 1e-12);
        assert_eq!((a.dc_color[0], a.dc_color[2]), (b.dc_color[0], b.dc_color[2]));
        touched += (dg != 0.0) as usize;
    }
    assert!(touched > 0);
}

#[test]
fn unmarked_model_decodes_near_chance() {
    let model = sphere_scene::<f64>(500, 1);
    let mut total = 0.0;
    let mut count = 0;
    for seed in 0..20 {
        let spec = ToyWatermarkSpec { seed, ..Default::default() };
        let mut wm = ToyWatermark::for_model(&model, &spec, 48, 48).unwrap();
        embed_toy_watermark(&model, &mut wm).unwrap();
        let decoded = decode_toy_watermark(&model, &wm).unwrap();
        total += bar(&decoded, &wm.embedded_bits().unwrap()).unwrap();
        count += 1;
    }
    // decoding the unmarked model yields residuals of exactly zero, so every
    // bit reads 0 and the average agreement is the share of zeros in random messages
    let mean = total / count as f64;
    assert!((mean - 0.5).abs() < 0.1, "mean BAR {mean}");
}

#[test]
fn black_model_decodes_deterministically_to_zeros() {
    let (model, _, wm) = marked_scene(4);
    let mut black = model.clone();
    for k in &mut black.kernels {
        k.dc_color = [0.0; 3];
    }
    let a = decode_toy_watermark(&black, &wm).unwrap();
    assert!(a.bits().iter().all(|&b| !b));
    assert_eq!(a, decode_toy_watermark(&black, &wm).unwrap());
}

#[test]
fn decode_before_embed_is_state_error() {
    let model = sphere_scene::<f64>(50, 1);
    let wm = ToyWatermark::for_model(&model, &ToyWatermarkSpec::default(), 32, 32).unwrap();
    assert!(decode_toy_watermark(&model, &wm).is_err());
    assert!(wm.embedded_bits().is_err());
}

fn gaussian_entropy_by_quadrature(var: f64) -> f64 {
    let sd = var.sqrt();
    let n = 200_000;
    let (lo, hi) = (-12.0 * sd, 12.0 * sd);
    let h = (hi - lo) / n as f64;
    let g = |x: f64| (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    let mut acc = 0.0;
    for i in 0..=n {
        let x = lo + i as f64 * h;
        let v = g(x);
        let term = if v > 0.0 { -v * v.ln() } else { 0.0 };
        acc += if i == 0 || i == n { 0.5 * term } else { term };
    }
    acc * h
}

#[test]
fn bound_agrees_with_quadrature_and_closed_forms() {
    for var in [0.25, 1.0, 4.0] {
        assert!((gaussian_entropy_bound(var) - gaussian_entropy_by_quadrature(var)).abs() < 1e-9);
        let uniform = (12f64.sqrt() * var.sqrt()).ln();
        assert!((Family::Uniform.exact_entropy(var) - uniform).abs() < 1e-12);
        let laplace = 1.0 + (2.0 * (var / 2.0).sqrt()).ln();
        assert!((Family::Laplace.exact_entropy(var) - laplace).abs() < 1e-12);
        let d = bound_derivative(var);
        assert!((d - 1.0 / (2.0 * var)).abs() <= 1e-4 * (1.0 / (2.0 * var)));
    }
    assert_eq!(gaussian_entropy_bound(1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E)), 0.0);
    assert!((gaussian_entropy_bound(1.0) - 1.4189385332).abs() < 1e-9);
}

#[test]
fn gaussian_estimate_at_unit_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples = sample_family(Family::Gaussian, 1.0, 1_000_000, &mut rng);
    let h = kl_entropy(&samples, 3).unwrap();
    assert!((h - 1.4189385332).abs() < 5e-3, "estimate {h}");
    let u = sample_family(Family::Uniform, 1.0, 1_000_000, &mut rng);
    let gap = gaussian_entropy_bound(1.0) - kl_entropy(&u, 3).unwrap();
    assert!((gap - 0.1765).abs() < 5e-3, "uniform gap {gap}");
}

#[test]
fn lemma_csv_has_one_row_per_variance_and_family() {
    let report = validate_lemma(&[1.0], 100_000, 3).unwrap();
    let mut out = Vec::new();
    report.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("variance,family,entropy_estimate,bound,margin\n"));
    assert!(validate_lemma(&[-1.0], 100_000, 0).is_err());
}

proptest! {
    #[test]
    fn mcc_matches_oracle(pairs in prop::collection::vec(any::<(bool, bool)>(), 1..80)) {
        let e: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        let o: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let c = ConfusionCounts::from_bits(&BitString::new(e.clone()).unwrap(), &BitString::new(o.clone()).unwrap()).unwrap();
        prop_assert!((mcc(&c) - mcc_oracle(&e, &o)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ids(&c)));
        prop_assert_eq!(c.total(), pairs.len() as u64);
    }

    #[test]
    fn wus_is_symmetric_about_half(b in 0.0..=1.0f64) {
        prop_assert!((wus(b).unwrap() - wus(1.0 - b).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&wus(b).unwrap()));
    }

    #[test]
    fn bitstring_text_round_trip(v in prop::collection::vec(any::<bool>(), 1..64)) {
        let b = BitString::new(v).unwrap();
        prop_assert_eq!(b.to_string().parse::<BitString>().unwrap(), b);
    }
}
