use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kendall::{kendall_tau_b_with, kendall_tau_combined_with, KendallTau, DEFAULT_TIE_EPS};
use super::mae::{mae_combined_per_object, mean, object_mean_saliency, SaliencyMap};
use super::prc::{auprc, gt_level_binarize, rank_aligned_rows, PrCurveBuilder, ThresholdMode};
use super::MetricError;
use crate::data::{Dataset, ImageView, Modality};
use crate::exec::Execution;
use crate::gtgen::{binarize_equal_salience, read_image_ground_truth, ImageGroundTruth};
use crate::io::{IoError, Provenance};

/// Whether aggregates pool all objects of the dataset or average per-image
/// values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    #[default]
    Dataset,
    Image,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Dataset => "dataset",
            Scope::Image => "image",
        })
    }
}

impl std::str::FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dataset" => Ok(Scope::Dataset),
            "image" | "per-image" => Ok(Scope::Image),
            _ => Err(format!("unknown scope `{s}` (dataset|image)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Label carried into the report, used to tell detectors apart.
    pub detector: String,
    pub modalities: Vec<Modality>,
    pub scope: Scope,
    pub thresholds: ThresholdMode,
    pub tie_eps: f64,
    /// Take combined minima/maxima over the modalities present instead of
    /// rejecting objects that lack one.
    pub allow_partial_modalities: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            detector: "detector".to_string(),
            modalities: Modality::ALL.to_vec(),
            scope: Scope::Dataset,
            thresholds: ThresholdMode::Uniform256,
            tie_eps: DEFAULT_TIE_EPS,
            allow_partial_modalities: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerModality<T> {
    pub et: T,
    pub pc: T,
    pub rd: T,
}

impl<T> PerModality<T> {
    pub fn get(&self, m: Modality) -> &T {
        match m {
            Modality::EyeTracking => &self.et,
            Modality::PointClick => &self.pc,
            Modality::RectDraw => &self.rd,
        }
    }

    pub fn get_mut(&mut self, m: Modality) -> &mut T {
        match m {
            Modality::EyeTracking => &mut self.et,
            Modality::PointClick => &mut self.pc,
            Modality::RectDraw => &mut self.rd,
        }
    }
}

/// One object of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRow {
    pub image_id: String,
    pub object_id: String,
    /// Mean detector saliency over the mask.
    pub estimate: f64,
    pub s_et: Option<f64>,
    pub s_pc: Option<f64>,
    pub s_rd: Option<f64>,
    pub mae_et: Option<f64>,
    pub mae_pc: Option<f64>,
    pub mae_rd: Option<f64>,
    pub mae_combined: Option<f64>,
}

/// AuPRC against one binarized level; `rank` 0 is the image's top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub image_id: String,
    pub modality: Modality,
    pub rank: usize,
    pub level: f64,
    pub auprc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub image_id: String,
    pub objects: usize,
    pub mae: PerModality<Option<f64>>,
    pub mae_combined: Option<f64>,
    pub auprc: PerModality<Option<f64>>,
    pub auprc_combined: Option<f64>,
    /// Against the union of all masks as a single salient class.
    pub auprc_binary: Option<f64>,
    pub tau: PerModality<Option<KendallTau>>,
    pub tau_combined: Option<KendallTau>,
    /// Level lists differed in length across modalities and were cut to
    /// the shortest for the combined AuPRC.
    pub levels_truncated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub images: usize,
    pub objects: usize,
    pub mae: PerModality<Option<f64>>,
    pub mae_combined: Option<f64>,
    pub auprc: PerModality<Option<f64>>,
    pub auprc_combined: Option<f64>,
    pub auprc_binary: Option<f64>,
    /// Number of `(image, level)` pairs behind each AuPRC mean.
    pub level_pairs: PerModality<usize>,
    pub tau: PerModality<Option<f64>>,
    pub tau_combined: Option<f64>,
    /// Pair counts of the pooled coefficients (dataset scope only).
    pub tau_pairs: PerModality<Option<KendallTau>>,
    pub tau_combined_pairs: Option<KendallTau>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub images_total: usize,
    pub images_evaluated: usize,
    pub missing_maps: Vec<String>,
    pub missing_ground_truth: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub provenance: Provenance,
    pub config: EvalConfig,
    pub aggregates: Aggregates,
    pub images: Vec<ImageResult>,
    pub objects: Vec<ObjectRow>,
    pub levels: Vec<LevelRow>,
    pub coverage: Coverage,
}

/// Everything one image contributes, kept for pooling.
struct ImageEval {
    result: ImageResult,
    rows: Vec<ObjectRow>,
    levels: Vec<LevelRow>,
    estimates: Vec<f64>,
    gt: PerModality<Option<Vec<f64>>>,
    level_values: PerModality<Vec<f64>>,
    combined_rows: Vec<Vec<f64>>,
    notes: Vec<String>,
}

enum Outcome {
    Evaluated(Box<ImageEval>),
    MissingMap,
    MissingGt,
    Skipped(String),
}

/// Scores `maps` against ground truth `gts` over the images of `ds`.
///
/// Images lacking a map or ground truth are listed in the coverage section
/// and left out; the rest are scored independently under `exec` and pooled
/// in dataset order.
pub fn evaluate(
    ds: &Dataset,
    gts: &[ImageGroundTruth],
    maps: &[SaliencyMap],
    config: &EvalConfig,
    exec: Execution,
) -> Result<MetricReport, MetricError> {
    if config.modalities.is_empty() {
        return Err(MetricError::NoModalities);
    }
    let gt_by_id: BTreeMap<&str, &ImageGroundTruth> =
        gts.iter().map(|g| (g.image_id.as_str(), g)).collect();
    let map_by_id: BTreeMap<&str, &SaliencyMap> =
        maps.iter().map(|m| (m.image_id.as_str(), m)).collect();
    let views = ds.views();

    let outcomes = exec.map(&views, |v| {
        let id = v.image.image_id.as_str();
        let Some(map) = map_by_id.get(id) else {
            return Outcome::MissingMap;
        };
        let Some(gt) = gt_by_id.get(id) else {
            return Outcome::MissingGt;
        };
        match evaluate_image(v, gt, map, config) {
            Ok(e) => Outcome::Evaluated(Box::new(e)),
            Err(e) => Outcome::Skipped(format!("image `{id}` skipped: {e}")),
        }
    });

    let mut coverage = Coverage {
        images_total: views.len(),
        ..Coverage::default()
    };
    let mut evals = Vec::new();
    for (v, o) in views.iter().zip(outcomes) {
        let id = v.image.image_id.clone();
        match o {
            Outcome::Evaluated(e) => evals.push(*e),
            Outcome::MissingMap => coverage.missing_maps.push(id),
            Outcome::MissingGt => coverage.missing_ground_truth.push(id),
            Outcome::Skipped(note) => coverage.notes.push(note),
        }
    }
    coverage.images_evaluated = evals.len();
    for e in &evals {
        coverage.notes.extend(e.notes.iter().cloned());
    }

    let aggregates = match config.scope {
        Scope::Dataset => pool_dataset(&evals, config, exec, &mut coverage.notes),
        Scope::Image => average_images(&evals, config),
    };

    let mut report = MetricReport {
        provenance: Provenance::for_config(config),
        config: config.clone(),
        aggregates,
        images: Vec::with_capacity(evals.len()),
        objects: Vec::new(),
        levels: Vec::new(),
        coverage,
    };
    for e in evals {
        report.images.push(e.result);
        report.objects.extend(e.rows);
        report.levels.extend(e.levels);
    }
    Ok(report)
}

fn evaluate_image(
    view: &ImageView<'_>,
    gt: &ImageGroundTruth,
    map: &SaliencyMap,
    config: &EvalConfig,
) -> Result<ImageEval, MetricError> {
    let id = view.image.image_id.as_str();
    if view.masks.is_empty() {
        return Err(MetricError::EmptyScope);
    }
    let mut notes = Vec::new();
    let estimates = view
        .masks
        .iter()
        .map(|m| object_mean_saliency(map, m))
        .collect::<Result<Vec<_>, _>>()?;

    // ground-truth value per (modality, object), in mask order
    let mut gt_values: PerModality<Option<Vec<f64>>> = PerModality::default();
    for &m in &config.modalities {
        let vals: Option<Vec<f64>> = view
            .masks
            .iter()
            .map(|mask| {
                gt.objects
                    .iter()
                    .find(|o| o.object_id == mask.object_id)
                    .and_then(|o| o.get(m))
            })
            .collect();
        if vals.is_none() {
            notes.push(format!("image `{id}` has no complete {m} ground truth"));
        }
        *gt_values.get_mut(m) = vals;
    }

    let mut rows = Vec::with_capacity(view.masks.len());
    let mut combined_errors = Vec::new();
    for (i, mask) in view.masks.iter().enumerate() {
        let s = |m: Modality| gt_values.get(m).as_ref().map(|v| v[i]);
        let err = |m: Modality| s(m).map(|v| (estimates[i] - v).abs());
        let requested: Vec<Option<f64>> = config.modalities.iter().map(|&m| err(m)).collect();
        let combined = mae_combined_per_object(&requested, config.allow_partial_modalities).ok();
        combined_errors.push(combined);
        rows.push(ObjectRow {
            image_id: id.to_string(),
            object_id: mask.object_id.clone(),
            estimate: estimates[i],
            s_et: s(Modality::EyeTracking),
            s_pc: s(Modality::PointClick),
            s_rd: s(Modality::RectDraw),
            mae_et: err(Modality::EyeTracking),
            mae_pc: err(Modality::PointClick),
            mae_rd: err(Modality::RectDraw),
            mae_combined: combined,
        });
    }

    let builder = PrCurveBuilder::new(&map.values, config.thresholds);
    let mut level_rows = Vec::new();
    let mut level_values: PerModality<Vec<f64>> = PerModality::default();
    let mut result = ImageResult {
        image_id: id.to_string(),
        objects: view.masks.len(),
        mae: PerModality::default(),
        mae_combined: mean_opt(&combined_errors.iter().flatten().copied().collect::<Vec<_>>()),
        auprc: PerModality::default(),
        auprc_combined: None,
        auprc_binary: None,
        tau: PerModality::default(),
        tau_combined: None,
        levels_truncated: false,
    };

    for &m in &config.modalities {
        let Some(values) = gt_values.get(m) else {
            continue;
        };
        let errors: Vec<f64> = estimates.iter().zip(values).map(|(e, v)| (e - v).abs()).collect();
        *result.mae.get_mut(m) = mean_opt(&errors);
        if estimates.len() >= 2 {
            *result.tau.get_mut(m) = Some(kendall_tau_b_with(
                &estimates,
                values,
                config.tie_eps,
                Execution::Sequential,
            )?);
        }
        let ml = gt.assemble(&view.masks, m)?;
        let binary = gt_level_binarize(&ml);
        if binary.is_empty() {
            notes.push(format!("image `{id}`: every {m} saliency is 0, no AuPRC levels"));
        }
        let n = binary.len();
        let mut vals = Vec::with_capacity(n);
        for (k, (level, mask)) in binary.iter().enumerate() {
            let a = auprc(&builder.curve(mask)?);
            vals.push(a);
            level_rows.push(LevelRow {
                image_id: id.to_string(),
                modality: m,
                rank: n - 1 - k,
                level: *level,
                auprc: a,
            });
        }
        // summed top level first, the order the combined rows use
        let top_first: Vec<f64> = vals.iter().rev().copied().collect();
        *result.auprc.get_mut(m) = mean_opt(&top_first);
        *level_values.get_mut(m) = vals;
    }
    // list top levels first within each modality
    level_rows.sort_by_key(|r| (r.modality, r.rank));

    let complete: Vec<Modality> = config
        .modalities
        .iter()
        .copied()
        .filter(|&m| gt_values.get(m).is_some())
        .collect();
    let all_present = complete.len() == config.modalities.len();

    let mut combined_rows = Vec::new();
    if !complete.is_empty() && (all_present || config.allow_partial_modalities) {
        let lists: Vec<&[f64]> = complete.iter().map(|&m| level_values.get(m).as_slice()).collect();
        let (rows_aligned, truncated) = rank_aligned_rows(&lists);
        if truncated {
            notes.push(format!(
                "image `{id}`: level counts differ across modalities, combined AuPRC uses the top {}",
                rows_aligned.len()
            ));
        }
        result.levels_truncated = truncated;
        result.auprc_combined = mean_opt(
            &rows_aligned
                .iter()
                .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect::<Vec<_>>(),
        );
        combined_rows = rows_aligned;
    }

    if all_present && estimates.len() >= 2 {
        let refs: Vec<&[f64]> = complete
            .iter()
            .map(|&m| gt_values.get(m).as_deref().unwrap_or(&[]))
            .collect();
        result.tau_combined = Some(kendall_tau_combined_with(
            &estimates,
            &refs,
            config.tie_eps,
            Execution::Sequential,
        )?);
    }

    let union = binarize_equal_salience(&view.masks)?;
    result.auprc_binary = Some(auprc(&builder.curve(&union)?));

    Ok(ImageEval {
        result,
        rows,
        levels: level_rows,
        estimates,
        gt: gt_values,
        level_values,
        combined_rows,
        notes,
    })
}

fn mean_opt(values: &[f64]) -> Option<f64> {
    mean(values).ok()
}

fn pool_dataset(
    evals: &[ImageEval],
    config: &EvalConfig,
    exec: Execution,
    notes: &mut Vec<String>,
) -> Aggregates {
    let mut agg = Aggregates {
        images: evals.len(),
        objects: evals.iter().map(|e| e.estimates.len()).sum(),
        ..Aggregates::default()
    };
    let pick = |f: &dyn Fn(&ObjectRow) -> Option<f64>| -> Vec<f64> {
        evals.iter().flat_map(|e| e.rows.iter().filter_map(f)).collect()
    };
    agg.mae_combined = mean_opt(&pick(&|r| r.mae_combined));

    for &m in &config.modalities {
        *agg.mae.get_mut(m) = mean_opt(&pick(&|r| match m {
            Modality::EyeTracking => r.mae_et,
            Modality::PointClick => r.mae_pc,
            Modality::RectDraw => r.mae_rd,
        }));
        let levels: Vec<f64> = evals
            .iter()
            .flat_map(|e| e.level_values.get(m).iter().rev().copied())
            .collect();
        *agg.level_pairs.get_mut(m) = levels.len();
        *agg.auprc.get_mut(m) = mean_opt(&levels);

        let (mut est, mut reference) = (Vec::new(), Vec::new());
        for e in evals {
            if let Some(v) = e.gt.get(m) {
                est.extend_from_slice(&e.estimates);
                reference.extend_from_slice(v);
            }
        }
        if let Ok(t) = kendall_tau_b_with(&est, &reference, config.tie_eps, exec) {
            *agg.tau.get_mut(m) = t.value;
            *agg.tau_pairs.get_mut(m) = Some(t);
        }
    }

    let best: Vec<f64> = evals
        .iter()
        .flat_map(|e| e.combined_rows.iter())
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    agg.auprc_combined = mean_opt(&best);
    agg.auprc_binary = mean_opt(&evals.iter().filter_map(|e| e.result.auprc_binary).collect::<Vec<_>>());

    let mut est = Vec::new();
    let mut refs: Vec<Vec<f64>> = vec![Vec::new(); config.modalities.len()];
    let mut excluded = 0usize;
    for e in evals {
        let lists: Option<Vec<&Vec<f64>>> =
            config.modalities.iter().map(|&m| e.gt.get(m).as_ref()).collect();
        match lists {
            Some(lists) => {
                est.extend_from_slice(&e.estimates);
                for (r, l) in refs.iter_mut().zip(lists) {
                    r.extend_from_slice(l);
                }
            }
            None => excluded += 1,
        }
    }
    if excluded > 0 {
        notes.push(format!(
            "{excluded} image(s) lack a requested modality and are left out of the combined tau"
        ));
    }
    let ref_slices: Vec<&[f64]> = refs.iter().map(Vec::as_slice).collect();
    if let Ok(t) = kendall_tau_combined_with(&est, &ref_slices, config.tie_eps, exec) {
        agg.tau_combined = t.value;
        agg.tau_combined_pairs = Some(t);
    }
    agg
}

fn average_images(evals: &[ImageEval], config: &EvalConfig) -> Aggregates {
    let mut agg = Aggregates {
        images: evals.len(),
        objects: evals.iter().map(|e| e.estimates.len()).sum(),
        ..Aggregates::default()
    };
    let avg = |f: &dyn Fn(&ImageResult) -> Option<f64>| -> Option<f64> {
        mean_opt(&evals.iter().filter_map(|e| f(&e.result)).collect::<Vec<_>>())
    };
    for &m in &config.modalities {
        *agg.mae.get_mut(m) = avg(&|r| *r.mae.get(m));
        *agg.auprc.get_mut(m) = avg(&|r| *r.auprc.get(m));
        *agg.level_pairs.get_mut(m) = evals.iter().map(|e| e.level_values.get(m).len()).sum();
        *agg.tau.get_mut(m) = avg(&|r| r.tau.get(m).and_then(|t| t.value));
    }
    agg.mae_combined = avg(&|r| r.mae_combined);
    agg.auprc_combined = avg(&|r| r.auprc_combined);
    agg.auprc_binary = avg(&|r| r.auprc_binary);
    agg.tau_combined = avg(&|r| r.tau_combined.and_then(|t| t.value));
    agg
}

/// Reads `<dir>/<image_id>.png` for every image of `ds`; images without a
/// file are simply absent from the result.
pub fn load_saliency_maps(
    dir: &Path,
    ds: &Dataset,
    exec: Execution,
) -> Result<Vec<SaliencyMap>, MetricError> {
    if !dir.is_dir() {
        return Err(not_found(dir));
    }
    let loaded = exec.map(&ds.images, |img| {
        let path = dir.join(format!("{}.png", img.image_id));
        if !path.is_file() {
            return Ok(None);
        }
        SaliencyMap::load(&path, img.image_id.clone()).map(Some)
    });
    let mut maps = Vec::new();
    for m in loaded {
        maps.extend(m?);
    }
    Ok(maps)
}

/// Reads the per-image ground-truth sidecars written by the ground-truth
/// builder.
pub fn load_ground_truths(
    dir: &Path,
    ds: &Dataset,
    exec: Execution,
) -> Result<Vec<ImageGroundTruth>, MetricError> {
    if !dir.is_dir() {
        return Err(not_found(dir));
    }
    let loaded = exec.map(&ds.images, |img| read_image_ground_truth(dir, &img.image_id));
    let mut gts = Vec::new();
    for g in loaded {
        gts.extend(g?);
    }
    Ok(gts)
}

fn not_found(dir: &Path) -> MetricError {
    MetricError::Io(IoError::Io {
        path: dir.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "directory not found"),
    })
}
