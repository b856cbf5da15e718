//! Subcommand implementations. Each returns its in-memory result so callers
//! (and tests) can inspect what was written.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gmea_core::camera::Camera;
use gmea_core::evo::{run_attack, AttackReport};
use gmea_core::objectives::{FeatureExtractorSpec, ViewMode, ViewSampler};
use gmea_core::render::{render, render_views};
use gmea_core::splat::{load_ply, save_ply_with, PlyEncoding};
use gmea_core::synthetic::sphere_scene;
use gmea_core::watermark::{
    decode_toy_watermark, embed_toy_watermark, fidelity, validate_lemma, LemmaReport, ToyWatermark,
    ToyWatermarkSpec, WatermarkReport,
};
use gmea_core::{Model, Watermark};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

pub const ATTACKED_PLY: &str = "attacked.ply";
pub const WATERMARKED_PLY: &str = "watermarked.ply";
pub const WATERMARK_JSON: &str = "watermark.json";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const REPORT_JSON: &str = "report.json";
pub const PARETO_CSV: &str = "pareto.csv";
pub const CONVERGENCE_CSV: &str = "convergence.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub evolution: u64,
    pub kmeans: u64,
    pub views: u64,
    pub extractor: u64,
    pub watermark: Option<u64>,
}

/// Everything needed to reproduce an attack run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub seeds: Seeds,
    pub extractor: FeatureExtractorSpec,
    pub input_kernels: usize,
    pub output_kernels: usize,
    pub attack: AttackReport,
}

/// Watermark and fidelity before and after the attack, both against the
/// attacked input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackEvaluation {
    pub pre_attack: WatermarkReport,
    pub post_attack: WatermarkReport,
}

#[derive(Clone, Debug)]
pub struct AttackOutcome {
    pub manifest: Manifest,
    pub evaluation: AttackEvaluation,
    pub attacked: Model,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(gmea_core::GmeaError::from)?))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(gmea_core::GmeaError::from)?;
    writeln!(w).map_err(gmea_core::GmeaError::from)?;
    w.flush().map_err(gmea_core::GmeaError::from)?;
    Ok(())
}

fn write_pareto(path: &Path, report: &AttackReport) -> Result<(), CliError> {
    let mut w = create(path)?;
    let mut body = String::from("group,member,f1,f2,selected\n");
    for g in &report.groups {
        for (m, [f1, f2]) in g.front.iter().enumerate() {
            let sel = u8::from(g.selected == Some(m));
            body.push_str(&format!("{},{m},{f1},{f2},{sel}\n", g.index));
        }
    }
    w.write_all(body.as_bytes()).map_err(gmea_core::GmeaError::from)?;
    Ok(())
}

fn write_convergence(path: &Path, report: &AttackReport) -> Result<(), CliError> {
    let mut w = create(path)?;
    let mut body = String::from("group,generation,best_f1,best_f2,mean_f1,mean_f2\n");
    for g in &report.groups {
        for h in &g.history {
            body.push_str(&format!(
                "{},{},{},{},{},{}\n",
                g.index, h.generation, h.best_f1, h.best_f2, h.mean_f1, h.mean_f2
            ));
        }
    }
    w.write_all(body.as_bytes()).map_err(gmea_core::GmeaError::from)?;
    Ok(())
}

fn report_for(original: &Model, candidate: &Model, width: usize, height: usize, wm: Option<&Watermark>) -> Result<WatermarkReport, CliError> {
    let views = ViewSampler::framing(original, ViewMode::Sphere, width, height).report_views()?;
    let f = fidelity(
        &render_views(original, &views.cameras),
        &render_views(candidate, &views.cameras),
    )?;
    Ok(match wm {
        Some(wm) => WatermarkReport::with_bits(f, decode_toy_watermark(candidate, wm)?, wm.embedded_bits()?)?,
        None => WatermarkReport::image_only(f),
    })
}

/// Runs the attack and writes every output file into `cfg.out`.
pub fn cmd_attack(cfg: &RunConfig) -> Result<AttackOutcome, CliError> {
    cfg.validate()?;
    let input = cfg.input.as_ref().expect("validated");
    let model: Model = load_ply(input)?;
    fs::create_dir_all(&cfg.out).map_err(gmea_core::GmeaError::from)?;
    let out = |name: &str| cfg.out.join(name);

    let (target, wm) = match &cfg.watermark {
        Some(spec) => {
            let mut wm = ToyWatermark::for_model(&model, spec, cfg.width, cfg.height)?;
            let marked = embed_toy_watermark(&model, &mut wm)?;
            save_ply_with(&marked, out(WATERMARKED_PLY), PlyEncoding::Binary)?;
            write_json(&out(WATERMARK_JSON), &wm)?;
            (marked, Some(wm))
        }
        None => (model, None),
    };

    let settings = cfg.attack_settings();
    log::info!(
        "attacking {} kernels: k={}, n_pop={}, T={}",
        target.len(),
        settings.k,
        settings.evolution.n_pop,
        settings.evolution.generations
    );
    let (attacked, report) = run_attack(&target, &settings)?;

    save_ply_with(&attacked, out(ATTACKED_PLY), PlyEncoding::BinaryF32)?;
    write_pareto(&out(PARETO_CSV), &report)?;
    write_convergence(&out(CONVERGENCE_CSV), &report)?;

    let sampler = ViewSampler::framing(&target, ViewMode::Sphere, cfg.width, cfg.height);
    for (cam, az) in sampler.report_views()?.cameras.iter().zip([0, 90, 180, 270]) {
        render(&target, cam).save_png(out(&format!("before_az{az:03}.png")))?;
        render(&attacked, cam).save_png(out(&format!("after_az{az:03}.png")))?;
    }

    let evaluation = AttackEvaluation {
        pre_attack: report_for(&target, &target, cfg.width, cfg.height, wm.as_ref())?,
        post_attack: report_for(&target, &attacked, cfg.width, cfg.height, wm.as_ref())?,
    };
    write_json(&out(REPORT_JSON), &evaluation)?;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        seeds: Seeds {
            evolution: cfg.seed,
            kmeans: cfg.seed,
            views: cfg.seed,
            extractor: cfg.extractor_seed,
            watermark: cfg.watermark.as_ref().map(|w| w.seed),
        },
        extractor: settings.extractor.clone(),
        input_kernels: target.len(),
        output_kernels: attacked.len(),
        attack: report,
    };
    write_json(&out(MANIFEST_JSON), &manifest)?;
    Ok(AttackOutcome {
        manifest,
        evaluation,
        attacked,
    })
}

/// Orbit camera given as `azimuth,elevation[,distance]` (degrees, scene units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraSpec {
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: Option<f64>,
}

impl std::str::FromStr for CameraSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("invalid camera spec `{s}`")))
            .collect::<Result<Vec<_>, _>>()?;
        let spec = match parts[..] {
            [azimuth, elevation] => Self {
                azimuth,
                elevation,
                distance: None,
            },
            [azimuth, elevation, d] => Self {
                azimuth,
                elevation,
                distance: Some(d),
            },
            _ => return Err(format!("camera spec `{s}` must be azimuth,elevation[,distance]")),
        };
        if !(spec.azimuth.is_finite() && spec.elevation.is_finite()) || spec.distance.is_some_and(|d| !(d > 0.0)) {
            return Err(format!("camera spec `{s}` out of range"));
        }
        Ok(spec)
    }
}

fn orbit_camera(model: &Model, spec: CameraSpec, width: usize, height: usize) -> Result<Camera<f64>, CliError> {
    let mut sampler = ViewSampler::framing(model, ViewMode::Sphere, width, height);
    if model.is_empty() {
        sampler.distance = gmea_core::objectives::DISTANCE_FACTOR;
    }
    if let Some(d) = spec.distance {
        sampler.distance = d;
    }
    Ok(sampler.camera(spec.azimuth, spec.elevation)?)
}

pub fn cmd_render(model_path: &Path, camera: CameraSpec, width: usize, height: usize, out: &Path) -> Result<(), CliError> {
    let model: Model = load_ply(model_path)?;
    let cam = orbit_camera(&model, camera, width, height)?;
    render(&model, &cam).save_png(out)?;
    Ok(())
}

pub struct MetricsRequest<'a> {
    pub original: &'a Path,
    pub attacked: &'a Path,
    pub watermark: Option<&'a Path>,
    pub want_bits: bool,
    pub width: usize,
    pub height: usize,
    pub out: Option<&'a Path>,
}

pub fn cmd_metrics(req: &MetricsRequest<'_>) -> Result<WatermarkReport, CliError> {
    if req.want_bits && req.watermark.is_none() {
        return Err(CliError::Usage("bit metrics requested without a watermark file".into()));
    }
    let original: Model = load_ply(req.original)?;
    let attacked: Model = load_ply(req.attacked)?;
    let wm: Option<Watermark> = match req.watermark {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(gmea_core::GmeaError::from)?;
            Some(serde_json::from_str(&text).map_err(gmea_core::GmeaError::from)?)
        }
        None => None,
    };
    let report = report_for(&original, &attacked, req.width, req.height, wm.as_ref())?;
    if let Some(out) = req.out {
        write_json(out, &report)?;
    }
    Ok(report)
}

pub fn cmd_lemma(variances: &[f64], samples: usize, seed: u64, out: Option<&Path>) -> Result<LemmaReport, CliError> {
    if let Some(v) = variances.iter().find(|v| !(**v > 0.0)) {
        return Err(CliError::Usage(format!("variance {v} is not positive")));
    }
    let report = validate_lemma(variances, samples, seed)?;
    if let Some(out) = out {
        report.write_csv(create(out)?)?;
    }
    if let Some(failed) = report.checks.iter().find(|c| !c.passed) {
        return Err(CliError::Check(format!("{}: {}", failed.name, failed.detail)));
    }
    Ok(report)
}

/// Writes a seeded synthetic scene, optionally marked with a toy watermark.
pub fn cmd_synth(kernels: usize, seed: u64, out: &Path, watermark: Option<(&ToyWatermarkSpec, usize)>) -> Result<PathBuf, CliError> {
    // stored at float32 precision, like attack outputs, so identity runs reproduce it exactly
    let model: Model = sphere_scene::<f32>(kernels, seed).cast();
    save_ply_with(&model, out, PlyEncoding::BinaryF32)?;
    if let Some((spec, size)) = watermark {
        let mut wm = ToyWatermark::for_model(&model, spec, size, size)?;
        let marked = embed_toy_watermark(&model, &mut wm)?;
        let stem = out.with_extension("");
        let marked_path = stem.with_extension("marked.ply");
        save_ply_with(&marked, &marked_path, PlyEncoding::Binary)?;
        write_json(&stem.with_extension("watermark.json"), &wm)?;
        return Ok(marked_path);
    }
    Ok(out.to_path_buf())
}
