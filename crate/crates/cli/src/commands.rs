use std::path::{Path, PathBuf};

use serde::Serialize;

use salmon_core::analysis::{self, AnalysisError, CharacterizationReport, CharacterizeConfig};
use salmon_core::data::{load_dataset, validate_dataset, Dataset};
use salmon_core::gtgen::{build_ground_truth, write_ground_truth, GtConfig, GtError, SubjectCounts};
use salmon_core::io::{write_csv_atomic, write_json_atomic, Provenance};
use salmon_core::metrics::{self, EvalConfig, MetricError, MetricReport, ThresholdMode};
use salmon_core::synth::{
    generate_batch, write_detector_maps, write_synthetic, DetectorKind, NoiseSpec, SceneParams, SynthError,
};
use salmon_core::Execution;

use crate::args::{CharacterizeArgs, EvaluateArgs, GtBuildArgs, ReportArgs, SynthArgs};
use crate::error::CliError;
use crate::plot;

pub struct Ctx {
    pub exec: Execution,
    pub verbose: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("note: {}", msg.as_ref());
        }
    }
}

/// `None` keeps rayon's default pool; `Some(1)` runs sequentially.
pub fn configure_workers(workers: Option<usize>) -> Result<Execution, CliError> {
    match workers {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(CliError::output)?;
            Ok(Execution::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Execution::Sequential),
        None => Ok(Execution::Parallel),
    }
}

fn load(manifest: &Path) -> Result<Dataset, CliError> {
    load_dataset(manifest).map_err(CliError::data)
}

fn load_valid(ctx: &Ctx, manifest: &Path) -> Result<Dataset, CliError> {
    let ds = load(manifest)?;
    for w in &ds.warnings {
        ctx.note(w.to_string());
    }
    let report = validate_dataset(&ds);
    if !report.is_valid() {
        let shown: Vec<String> = report.violations.iter().take(5).map(|v| v.to_string()).collect();
        return Err(CliError::Data(format!(
            "{}: {} invariant violation(s): {}",
            manifest.display(),
            report.violations.len(),
            shown.join("; ")
        )));
    }
    Ok(ds)
}

fn synth_error(e: SynthError) -> CliError {
    match e {
        SynthError::InvalidSpec(_) => CliError::Usage(e.to_string()),
        _ => CliError::data(e),
    }
}

fn gt_error(e: GtError) -> CliError {
    match e {
        GtError::InvalidSigma(_) | GtError::InvalidThreshold(_) => CliError::Usage(e.to_string()),
        _ => CliError::data(e),
    }
}

fn metric_error(e: MetricError) -> CliError {
    match e {
        MetricError::Gt(g) => gt_error(g),
        MetricError::NoModalities => CliError::Usage(e.to_string()),
        _ => CliError::data(e),
    }
}

fn analysis_error(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::InvalidBins(_) => CliError::Usage(e.to_string()),
        _ => CliError::data(e),
    }
}

pub fn synth(ctx: &Ctx, a: &SynthArgs) -> Result<(), CliError> {
    let kinds = a
        .detectors
        .iter()
        .map(|d| d.parse::<DetectorKind>().map_err(CliError::Usage))
        .collect::<Result<Vec<_>, _>>()?;
    let params = SceneParams {
        width: a.width,
        height: a.height,
        objects_min: a.objects_per_scene.0,
        objects_max: a.objects_per_scene.1,
        size_min_frac: a.size_min,
        size_max_frac: a.size_max,
        min_saliency_gap: a.min_saliency_gap,
        subjects: SubjectCounts {
            et: a.subjects.et,
            pc: a.subjects.pc,
            rd: a.subjects.rd,
        },
        noise: NoiseSpec {
            click_scatter_px: a.click_scatter,
            rect_jitter: a.rect_jitter,
            fixation_scatter_px: a.fixation_scatter,
            fixation_count: a.fixation_count,
        },
        ..SceneParams::default()
    };
    let prov = Provenance::for_config(a);
    let scenes = generate_batch(a.seed, a.scenes, &params, ctx.exec).map_err(synth_error)?;
    let manifest =
        write_synthetic(&scenes, &a.out, Default::default(), &prov, ctx.exec).map_err(CliError::output)?;
    for kind in kinds {
        let dir = a.out.join("maps").join(kind.name());
        write_detector_maps(&scenes, kind, &dir, &prov, ctx.exec).map_err(CliError::output)?;
    }
    println!("{} scenes, manifest {}", scenes.len(), manifest.display());
    Ok(())
}

pub fn gt_build(ctx: &Ctx, a: &GtBuildArgs) -> Result<(), CliError> {
    let ds = load_valid(ctx, &a.manifest)?;
    let config = GtConfig {
        modalities: a.modality.0.clone(),
        sigma: a.sigma,
        normalization: a.normalization.into(),
        iou_threshold: a.iou_threshold,
    };
    let set = build_ground_truth(&ds, &config, ctx.exec).map_err(gt_error)?;
    let prov = Provenance::for_config(&config);
    write_ground_truth(&set, &ds, &a.out, &prov, ctx.exec).map_err(CliError::output)?;
    let objects: usize = set.images.iter().map(|g| g.objects.len()).sum();
    println!(
        "{} images, {} objects, sigma {:.3} px, written to {}",
        set.images.len(),
        objects,
        set.sigma_px,
        a.out.display()
    );
    Ok(())
}

fn detector_label(a: &EvaluateArgs) -> String {
    a.detector.clone().unwrap_or_else(|| {
        a.maps_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "detector".into())
    })
}

pub fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<(), CliError> {
    if !(a.tie_eps >= 0.0 && a.tie_eps.is_finite()) {
        return Err(CliError::Usage(format!("--tie-eps must be a non-negative number, got {}", a.tie_eps)));
    }
    let ds = load_valid(ctx, &a.manifest)?;
    let gts = metrics::load_ground_truths(&a.gt_dir, &ds, ctx.exec).map_err(metric_error)?;
    let maps = metrics::load_saliency_maps(&a.maps_dir, &ds, ctx.exec).map_err(metric_error)?;
    let config = EvalConfig {
        detector: detector_label(a),
        modalities: a.modality.0.clone(),
        scope: a.scope,
        thresholds: if a.exact_thresholds { ThresholdMode::Exact } else { a.thresholds },
        tie_eps: a.tie_eps,
        allow_partial_modalities: a.allow_partial,
    };
    let report = metrics::evaluate(&ds, &gts, &maps, &config, ctx.exec).map_err(metric_error)?;
    for n in &report.coverage.notes {
        ctx.note(n);
    }
    write_json_atomic(&a.out, &report).map_err(CliError::output)?;
    if let Some(csv) = &a.csv {
        write_csv_atomic(csv, &report.provenance, &OBJECT_HEADER, &report.objects).map_err(CliError::output)?;
    }
    print_summary(&report);
    Ok(())
}

const OBJECT_HEADER: [&str; 10] = [
    "image_id",
    "object_id",
    "estimate",
    "s_et",
    "s_pc",
    "s_rd",
    "mae_et",
    "mae_pc",
    "mae_rd",
    "mae_combined",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}

fn print_summary(r: &MetricReport) {
    let a = &r.aggregates;
    println!(
        "{}: {} images, {} objects ({} evaluated)",
        r.config.detector, r.coverage.images_total, a.objects, r.coverage.images_evaluated
    );
    for (name, m, c) in [
        ("mae", &a.mae, a.mae_combined),
        ("auprc", &a.auprc, a.auprc_combined),
        ("tau", &a.tau, a.tau_combined),
    ] {
        println!(
            "  {name:<6} et {}  pc {}  rd {}  combined {}",
            fmt_opt(m.et),
            fmt_opt(m.pc),
            fmt_opt(m.rd),
            fmt_opt(c)
        );
    }
}

#[derive(Serialize)]
struct CharacterizeEcho<'a> {
    manifest: &'a Path,
    config: &'a CharacterizeConfig,
    gt_dir: Option<&'a PathBuf>,
}

pub fn characterize(ctx: &Ctx, a: &CharacterizeArgs) -> Result<(), CliError> {
    let ds = load_valid(ctx, &a.manifest)?;
    let gts = match &a.gt_dir {
        Some(dir) => metrics::load_ground_truths(dir, &ds, ctx.exec).map_err(metric_error)?,
        None => Vec::new(),
    };
    let config = CharacterizeConfig {
        bins: a.bins,
        ring: a.ring,
        exclude_others_global: !a.include_others_global,
        histogram_bins: a.hist_bins,
    };
    if config.histogram_bins == 0 {
        return Err(CliError::Usage("--hist-bins must be at least 1".into()));
    }
    let mut report = analysis::characterize(&ds, &gts, &config, ctx.exec).map_err(analysis_error)?;
    report.provenance = Provenance::for_config(&CharacterizeEcho {
        manifest: &a.manifest,
        config: &config,
        gt_dir: a.gt_dir.as_ref(),
    });
    for n in &report.notes {
        ctx.note(n);
    }
    write_json_atomic(&a.out, &report).map_err(CliError::output)?;
    if let Some(dir) = &a.csv {
        write_characterization_csv(&report, dir)?;
    }
    println!("{} objects characterized, report {}", report.objects.len(), a.out.display());
    Ok(())
}

const CHARACTERIZE_HEADER: [&str; 14] = [
    "image_id",
    "object_id",
    "entropy",
    "mean_l",
    "mean_a",
    "mean_b",
    "norm_center_dist",
    "width_norm",
    "height_norm",
    "area_norm",
    "aspect_ratio",
    "ring_radius",
    "local_contrast",
    "global_contrast",
];

fn write_characterization_csv(report: &CharacterizationReport, dir: &Path) -> Result<(), CliError> {
    let prov = &report.provenance;
    write_csv_atomic(&dir.join("objects.csv"), prov, &CHARACTERIZE_HEADER, &report.objects)
        .map_err(CliError::output)?;
    plot::emit_plot_data(&[], Some(report), dir, false, prov)
        .map(|_| ())
        .map_err(CliError::output)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn report(ctx: &Ctx, a: &ReportArgs) -> Result<(), CliError> {
    let metrics = a
        .metrics
        .iter()
        .map(|p| read_json::<MetricReport>(p))
        .collect::<Result<Vec<_>, _>>()?;
    let characterization = a
        .characterization
        .as_deref()
        .map(read_json::<CharacterizationReport>)
        .transpose()?;
    let prov = Provenance::for_config(a);
    let files = plot::emit_plot_data(&metrics, characterization.as_ref(), &a.out, a.svg, &prov)
        .map_err(CliError::output)?;
    for f in &files {
        ctx.note(format!("wrote {}", f.display()));
    }
    println!("{} files written to {}", files.len(), a.out.display());
    Ok(())
}
