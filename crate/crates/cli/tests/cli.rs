use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gmea_cli::commands::*;
use gmea_cli::config::RunConfig;
use gmea_cli::CliError;
use gmea_core::objectives::{ssim, ViewMode, ViewSampler};
use gmea_core::render::render_views;
use gmea_core::splat::{load_ply, save_ply};
use gmea_core::watermark::WatermarkReport;
use gmea_core::Model;

fn gmea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmea")).args(args).output().unwrap()
}

fn synth(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("scene.ply");
    cmd_synth(n, 3, &path, None).unwrap();
    path
}

fn quick_config(input: &Path, out: &Path) -> RunConfig {
    RunConfig {
        input: Some(input.to_path_buf()),
        out: out.to_path_buf(),
        n_pop: 6,
        generations: 2,
        n_views: 2,
        k: 2,
        width: 32,
        height: 32,
        ..RunConfig::default()
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_generations_reproduces_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), 120);
    let out = dir.path().join("run");
    let cfg = RunConfig {
        generations: 0,
        ..quick_config(&input, &out)
    };
    let outcome = cmd_attack(&cfg).unwrap();
    let original: Model = load_ply(&input).unwrap();
    let attacked: Model = load_ply(out.join(ATTACKED_PLY)).unwrap();
    assert_eq!(attacked.kernels, original.kernels);
    assert_eq!(outcome.evaluation.post_attack.mse, 0.0);
    let convergence = fs::read_to_string(out.join(CONVERGENCE_CSV)).unwrap();
    assert_eq!(convergence, "group,generation,best_f1,best_f2,mean_f1,mean_f2\n");
}

#[test]
fn attack_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), 120);
    let out = dir.path().join("run");
    let mut cfg = quick_config(&input, &out);
    cfg.watermark = Some(Default::default());
    let outcome = cmd_attack(&cfg).unwrap();
    for name in [ATTACKED_PLY, WATERMARKED_PLY, WATERMARK_JSON, MANIFEST_JSON, REPORT_JSON, PARETO_CSV, CONVERGENCE_CSV] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    for az in ["000", "090", "180", "270"] {
        assert!(out.join(format!("before_az{az}.png")).is_file());
        assert!(out.join(format!("after_az{az}.png")).is_file());
    }
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(out.join(MANIFEST_JSON)).unwrap()).unwrap();
    assert_eq!(manifest.attack.groups.len(), 2);
    assert_eq!(manifest.seeds.evolution, cfg.seed);
    assert_eq!(manifest.output_kernels, outcome.attacked.len());
    let convergence = fs::read_to_string(out.join(CONVERGENCE_CSV)).unwrap();
    // header plus generations 0..=2 for each of the two groups
    assert_eq!(convergence.lines().count(), 1 + 2 * 3);
    let pareto = fs::read_to_string(out.join(PARETO_CSV)).unwrap();
    assert_eq!(pareto.lines().filter(|l| l.ends_with(",1")).count(), 2);
    assert_eq!(outcome.evaluation.pre_attack.bar, Some(1.0));
}

#[test]
fn attack_is_deterministic_across_output_directories() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), 80);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cmd_attack(&quick_config(&input, &a)).unwrap();
    cmd_attack(&quick_config(&input, &b)).unwrap();
    for name in [ATTACKED_PLY, MANIFEST_JSON, CONVERGENCE_CSV, PARETO_CSV, REPORT_JSON] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn render_is_byte_identical_and_empty_model_is_black() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), 100);
    let (p1, p2) = (dir.path().join("1.png"), dir.path().join("2.png"));
    let cam = "45,20".parse().unwrap();
    cmd_render(&input, cam, 40, 30, &p1).unwrap();
    cmd_render(&input, cam, 40, 30, &p2).unwrap();
    assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());

    let empty = dir.path().join("empty.ply");
    save_ply(&Model::empty(), &empty).unwrap();
    let black = dir.path().join("black.png");
    cmd_render(&empty, cam, 16, 16, &black).unwrap();
    let img = image::open(&black).unwrap().to_rgb8();
    assert!(img.pixels().all(|p| p.0 == [0, 0, 0]));
}

#[test]
fn metrics_self_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let marked = dir.path().join("scene.ply");
    let marked = cmd_synth(150, 2, &marked, Some((&Default::default(), 48))).unwrap();
    let wm = dir.path().join("scene.watermark.json");
    let report = cmd_metrics(&MetricsRequest {
        original: &marked,
        attacked: &marked,
        watermark: Some(&wm),
        want_bits: true,
        width: 48,
        height: 48,
        out: None,
    })
    .unwrap();
    assert_eq!(report.ssim, 1.0);
    assert_eq!(report.mse, 0.0);
    assert_eq!(report.bar, Some(1.0));
    assert_eq!(report.wus, Some(0.0));
}

#[test]
fn metrics_ssim_agrees_with_objectives_module() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), 150);
    let original: Model = load_ply(&input).unwrap();
    let mut noisy = original.clone();
    for (i, k) in noisy.kernels.iter_mut().enumerate() {
        k.dc_color[i % 3] += if i % 2 == 0 { 0.2 } else { -0.2 };
    }
    let noisy_path = dir.path().join("noisy.ply");
    save_ply(&noisy, &noisy_path).unwrap();
    let out = dir.path().join("metrics.json");
    let report = cmd_metrics(&MetricsRequest {
        original: &input,
        attacked: &noisy_path,
        watermark: None,
        want_bits: false,
        width: 40,
        height: 40,
        out: Some(&out),
    })
    .unwrap();
    let views = ViewSampler::framing(&original, ViewMode::Sphere, 40, 40).report_views().unwrap();
    let a = render_views(&original, &views.cameras);
    let b = render_views(&noisy, &views.cameras);
    let expected = a.iter().zip(&b).map(|(x, y)| ssim(x, y).unwrap()).sum::<f64>() / 4.0;
    assert!(report.ssim < 1.0);
    assert!((report.ssim - expected).abs() < 1e-12);
    let written: WatermarkReport = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(written, report);
}

#[test]
fn bit_metrics_without_watermark_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), 20);
    let err = cmd_metrics(&MetricsRequest {
        original: &input,
        attacked: &input,
        watermark: None,
        want_bits: true,
        width: 32,
        height: 32,
        out: None,
    })
    .unwrap_err();
    assert!(matches!(err, CliError::Usage(_)));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn lemma_writes_csv_and_rejects_negative_variance() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lemma.csv");
    let var = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E);
    let report = cmd_lemma(&[var], 1_000_000, 1, Some(&csv)).unwrap();
    assert!(report.passed());
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(3) == Some("0")));

    let err = cmd_lemma(&[1.0, -0.5], 100_000, 1, None).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)));
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), 60);

    let ok = gmea(&["render", "--model", s(&input), "--camera", "10,20", "--resolution", "24", "--out", s(&dir.path().join("r.png"))]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let bad_camera = gmea(&["render", "--model", s(&input), "--camera", "nope", "--out", s(&dir.path().join("x.png"))]);
    assert_eq!(bad_camera.status.code(), Some(2));

    let negative = gmea(&["lemma", "--variances", "1,-2", "--samples", "100000"]);
    assert_eq!(negative.status.code(), Some(2));
    assert!(!negative.stderr.is_empty());

    let missing = gmea(&["attack", "--input", s(&dir.path().join("nope.ply")), "--out", s(&dir.path().join("o"))]);
    assert_eq!(missing.status.code(), Some(1));

    let no_input = gmea(&["attack", "--out", s(&dir.path().join("o"))]);
    assert_eq!(no_input.status.code(), Some(2));
}

#[test]
fn binary_attack_with_config_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), 60);
    let config = dir.path().join("run.json");
    fs::write(&config, format!(r#"{{"input": "{}", "n_pop": 4, "generations": 1, "n_views": 1, "k": 3}}"#, s(&input))).unwrap();
    let out = dir.path().join("o");
    let run = gmea(&[
        "attack", "--config", s(&config), "--k", "2", "--resolution", "24", "--policy", "quality", "--seed", "5", "--workers", "2",
        "--out", s(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(out.join(MANIFEST_JSON)).unwrap()).unwrap();
    assert_eq!(manifest.config.k, 2);
    assert_eq!(manifest.config.n_pop, 4);
    assert_eq!(manifest.config.width, 24);
    assert_eq!(manifest.config.seed, 5);
    assert_eq!(manifest.attack.groups.len(), 2);

    let unknown = dir.path().join("bad.json");
    fs::write(&unknown, r#"{"populaton": 4}"#).unwrap();
    let bad = gmea(&["attack", "--config", s(&unknown), "--input", s(&input)]);
    assert_eq!(bad.status.code(), Some(2));
}
