use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::saliency::max_within_mask;
use super::{
    assemble_gt_map, fixation_density_map, foveal_sigma, point_click_saliency,
    rect_draw_saliency, DensityNormalization, GtError, MultiLevelGroundTruth, ObjectSaliency,
    DEFAULT_IOU_THRESHOLD,
};
use crate::data::{Dataset, ImageView, Modality, ObjectMask};
use crate::exec::Execution;
use crate::io::{write_json_atomic, write_png, IoError, PngPixels, Provenance};

/// Smoothing radius: derived from the viewing geometry or given in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SigmaChoice {
    #[default]
    Auto,
    Pixels(f64),
}

impl fmt::Display for SigmaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaChoice::Auto => f.write_str("auto"),
            SigmaChoice::Pixels(p) => write!(f, "{p}"),
        }
    }
}

impl std::str::FromStr for SigmaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(SigmaChoice::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(SigmaChoice::Pixels(v)),
            _ => Err(format!("sigma must be `auto` or a positive number, got `{s}`")),
        }
    }
}

impl Serialize for SigmaChoice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SigmaChoice::Auto => s.serialize_str("auto"),
            SigmaChoice::Pixels(p) => s.serialize_f64(*p),
        }
    }
}

impl<'de> Deserialize<'de> for SigmaChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(SigmaChoice::Pixels(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtConfig {
    pub modalities: Vec<Modality>,
    pub sigma: SigmaChoice,
    pub normalization: DensityNormalization,
    pub iou_threshold: f64,
}

impl Default for GtConfig {
    fn default() -> Self {
        Self {
            modalities: Modality::ALL.to_vec(),
            sigma: SigmaChoice::Auto,
            normalization: DensityNormalization::Max,
            iou_threshold: DEFAULT_IOU_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectCounts {
    pub et: usize,
    pub pc: usize,
    pub rd: usize,
}

impl SubjectCounts {
    pub fn get(&self, m: Modality) -> usize {
        match m {
            Modality::EyeTracking => self.et,
            Modality::PointClick => self.pc,
            Modality::RectDraw => self.rd,
        }
    }
}

/// Per-object saliencies of one image; the multi-level maps derive from
/// these together with the masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageGroundTruth {
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    pub subject_counts: SubjectCounts,
    pub objects: Vec<ObjectSaliency>,
}

impl ImageGroundTruth {
    /// Whether every object carries a value for `modality`.
    pub fn has(&self, modality: Modality) -> bool {
        !self.objects.is_empty() && self.objects.iter().all(|o| o.get(modality).is_some())
    }

    pub fn assemble(
        &self,
        masks: &[&ObjectMask],
        modality: Modality,
    ) -> Result<MultiLevelGroundTruth, GtError> {
        assemble_gt_map(&self.objects, masks, modality)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSet {
    pub config: GtConfig,
    pub sigma_px: f64,
    pub images: Vec<ImageGroundTruth>,
    pub notes: Vec<String>,
}

impl GroundTruthSet {
    pub fn image(&self, image_id: &str) -> Option<&ImageGroundTruth> {
        self.images.iter().find(|g| g.image_id == image_id)
    }
}

/// Resolves the smoothing radius for `config` against the dataset geometry.
pub fn resolve_sigma(ds: &Dataset, config: &GtConfig) -> Result<f64, GtError> {
    let sigma = match config.sigma {
        SigmaChoice::Auto => foveal_sigma(&ds.viewing_geometry)?,
        SigmaChoice::Pixels(p) => p,
    };
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(GtError::InvalidSigma(sigma));
    }
    Ok(sigma)
}

/// Computes per-object saliencies for every image and requested modality.
///
/// Images are processed independently under `exec`; subjects within an
/// image are folded in subject-id order, so results do not depend on the
/// execution strategy.
pub fn build_ground_truth(
    ds: &Dataset,
    config: &GtConfig,
    exec: Execution,
) -> Result<GroundTruthSet, GtError> {
    let sigma = resolve_sigma(ds, config)?;
    let views = ds.views();
    let results = exec.map(&views, |v| image_ground_truth(v, config, sigma));
    let mut images = Vec::with_capacity(results.len());
    let mut notes = Vec::new();
    for r in results {
        let (gt, n) = r?;
        images.push(gt);
        notes.extend(n);
    }
    Ok(GroundTruthSet {
        config: config.clone(),
        sigma_px: sigma,
        images,
        notes,
    })
}

/// Ground truth for a single image.
pub fn image_ground_truth(
    view: &ImageView<'_>,
    config: &GtConfig,
    sigma: f64,
) -> Result<(ImageGroundTruth, Vec<String>), GtError> {
    let img = view.image;
    let mut notes = Vec::new();
    let mut objects: Vec<ObjectSaliency> = view
        .masks
        .iter()
        .map(|m| ObjectSaliency::new(m.object_id.clone()))
        .collect();
    if view.masks.is_empty() {
        notes.push(format!("image `{}` has no object masks", img.image_id));
    }
    for &modality in &config.modalities {
        let records = view.records(modality);
        if records.is_empty() {
            if !view.masks.is_empty() {
                notes.push(format!(
                    "image `{}` has no {modality} subjects; s_{modality} absent",
                    img.image_id
                ));
            }
            continue;
        }
        match modality {
            Modality::EyeTracking => {
                let mut totals = vec![0.0_f64; view.masks.len()];
                for rec in records {
                    let map = fixation_density_map(rec, img.width, img.height, sigma, config.normalization)?;
                    for (t, m) in totals.iter_mut().zip(&view.masks) {
                        *t += max_within_mask(&map.values, m);
                    }
                }
                let n = records.len() as f64;
                for (o, t) in objects.iter_mut().zip(totals) {
                    o.s_et = Some(t / n);
                }
            }
            Modality::PointClick => {
                for (o, m) in objects.iter_mut().zip(&view.masks) {
                    o.s_pc = Some(point_click_saliency(records, m)?);
                }
            }
            Modality::RectDraw => {
                for (o, m) in objects.iter_mut().zip(&view.masks) {
                    o.s_rd = Some(rect_draw_saliency(records, &m.tight_rect, config.iou_threshold)?);
                }
            }
        }
    }
    let counts = SubjectCounts {
        et: view.subject_count(Modality::EyeTracking),
        pc: view.subject_count(Modality::PointClick),
        rd: view.subject_count(Modality::RectDraw),
    };
    Ok((
        ImageGroundTruth {
            image_id: img.image_id.clone(),
            width: img.width,
            height: img.height,
            subject_counts: counts,
            objects,
        },
        notes,
    ))
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    provenance: Provenance,
    sigma_px: f64,
    iou_threshold: f64,
    #[serde(flatten)]
    ground_truth: ImageGroundTruth,
}

#[derive(Debug, Serialize, Deserialize)]
struct GtIndex {
    provenance: Provenance,
    config: GtConfig,
    sigma_px: f64,
    images: Vec<String>,
    notes: Vec<String>,
}

pub const GT_INDEX_FILE: &str = "ground_truth.json";

pub fn sidecar_path(dir: &Path, image_id: &str) -> PathBuf {
    dir.join(format!("{image_id}.json"))
}

pub fn raster_path(dir: &Path, image_id: &str, modality: Modality) -> PathBuf {
    dir.join(format!("{image_id}_{}.png", modality.tag()))
}

/// Writes 16-bit rasters (`round(65535·F)`) and a JSON sidecar per image,
/// plus an index of the run.
pub fn write_ground_truth(
    set: &GroundTruthSet,
    ds: &Dataset,
    dir: &Path,
    provenance: &Provenance,
    exec: Execution,
) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let views = ds.views();
    let results = exec.map(&set.images, |gt| -> Result<(), IoError> {
        let sidecar = Sidecar {
            provenance: provenance.clone(),
            sigma_px: set.sigma_px,
            iou_threshold: set.config.iou_threshold,
            ground_truth: gt.clone(),
        };
        write_json_atomic(&sidecar_path(dir, &gt.image_id), &sidecar)?;
        let Some(view) = views.iter().find(|v| v.image.image_id == gt.image_id) else {
            return Ok(());
        };
        for &m in &set.config.modalities {
            if !gt.has(m) {
                continue;
            }
            let Ok(ml) = gt.assemble(&view.masks, m) else {
                continue;
            };
            let px: Vec<u16> = ml
                .map
                .as_slice()
                .iter()
                .map(|v| (v * 65535.0).round().clamp(0.0, 65535.0) as u16)
                .collect();
            write_png(
                &raster_path(dir, &gt.image_id, m),
                gt.width,
                gt.height,
                PngPixels::Gray16(&px),
                provenance,
            )?;
        }
        Ok(())
    });
    results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let index = GtIndex {
        provenance: provenance.clone(),
        config: set.config.clone(),
        sigma_px: set.sigma_px,
        images: set.images.iter().map(|g| g.image_id.clone()).collect(),
        notes: set.notes.clone(),
    };
    write_json_atomic(&dir.join(GT_INDEX_FILE), &index)
}

/// Reads one image's sidecar; `Ok(None)` when the file does not exist.
pub fn read_image_ground_truth(dir: &Path, image_id: &str) -> Result<Option<ImageGroundTruth>, IoError> {
    let path = sidecar_path(dir, image_id);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(IoError::io(&path, e)),
    };
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| IoError::Encode {
        path: path.clone(),
        message: e.to_string(),
    })?;
    Ok(Some(sidecar.ground_truth))
}
