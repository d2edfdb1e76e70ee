use std::path::Path;

use serde::{Deserialize, Serialize};

use super::color::{histogram_entropy, mean_lab, srgb_to_lab, LabHistogram, RgbImage, DEFAULT_BINS};
use super::geometry::{geometry_stats, DatasetMaxima};
use super::neighborhood::{neighborhood_masks, RingRadius};
use super::{chi2_contrast, gamma_fit, AnalysisError};
use crate::data::{Dataset, ImageView, Modality};
use crate::exec::Execution;
use crate::gtgen::ImageGroundTruth;
use crate::io::Provenance;
use crate::raster::Mask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizeConfig {
    /// Lab histogram bins per axis.
    pub bins: usize,
    pub ring: RingRadius,
    /// Leave other objects out of the global background.
    pub exclude_others_global: bool,
    /// Bins of the summary distributions.
    pub histogram_bins: usize,
}

impl Default for CharacterizeConfig {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            ring: RingRadius::Auto,
            exclude_others_global: true,
            histogram_bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub image_id: String,
    pub object_id: String,
    pub entropy: f64,
    pub mean_l: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub norm_center_dist: f64,
    pub width_norm: f64,
    pub height_norm: f64,
    pub area_norm: f64,
    pub aspect_ratio: f64,
    pub ring_radius: usize,
    pub local_contrast: Option<f64>,
    pub global_contrast: Option<f64>,
}

/// Gamma fit mapping one modality's saliencies onto another's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityFit {
    pub x: Modality,
    pub y: Modality,
    pub points: usize,
    pub g: Option<f64>,
    pub r_squared: Option<f64>,
    pub note: Option<String>,
}

/// Fixed-range histogram of one per-object quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub name: String,
    /// `counts.len() + 1` ascending bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Distribution {
    /// Values outside `[lo, hi]` are clamped into the end bins.
    pub fn new(name: &str, lo: f64, hi: f64, bins: usize, values: impl Iterator<Item = f64>) -> Self {
        let bins = bins.max(1);
        let edges = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
        let mut counts = vec![0; bins];
        for v in values {
            let t = ((v - lo) / (hi - lo) * bins as f64).floor();
            let i = if t <= 0.0 { 0 } else { (t as usize).min(bins - 1) };
            counts[i] += 1;
        }
        Self {
            name: name.to_string(),
            edges,
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub provenance: Provenance,
    pub config: CharacterizeConfig,
    pub maxima: Option<DatasetMaxima>,
    pub objects: Vec<ObjectRecord>,
    pub gamma_fits: Vec<ModalityFit>,
    pub distributions: Vec<Distribution>,
    pub notes: Vec<String>,
}

/// Modality pairs `(x, y)` fitted as `y = x^g`.
pub const FIT_PAIRS: [(Modality, Modality); 3] = [
    (Modality::PointClick, Modality::RectDraw),
    (Modality::EyeTracking, Modality::RectDraw),
    (Modality::EyeTracking, Modality::PointClick),
];

/// Decodes an image file to 8-bit RGB.
pub fn load_rgb(path: &Path) -> Result<RgbImage, AnalysisError> {
    let img = image::open(path).map_err(|e| AnalysisError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.pixels().map(|p| p.0).collect();
    Ok(RgbImage::from_vec(w, h, data).expect("decoded buffer matches its dimensions"))
}

/// Per-object color, geometry and contrast statistics, plus gamma fits
/// between modality saliencies when ground truth is supplied.
pub fn characterize(
    ds: &Dataset,
    gts: &[ImageGroundTruth],
    config: &CharacterizeConfig,
    exec: Execution,
) -> Result<CharacterizationReport, AnalysisError> {
    LabHistogram::new(config.bins)?;
    let maxima = DatasetMaxima::of(&ds.masks);
    let views = ds.views();
    let per_image = exec.map(&views, |v| -> Result<Vec<ObjectRecord>, String> {
        let Some(maxima) = maxima else {
            return Ok(Vec::new());
        };
        if v.masks.is_empty() {
            return Ok(Vec::new());
        }
        let path = ds.root.join(&v.image.path);
        let image = load_rgb(&path).map_err(|e| format!("image `{}` skipped: {e}", v.image.image_id))?;
        if image.dims() != (v.image.width, v.image.height) {
            return Err(format!(
                "image `{}` skipped: file is {:?}, manifest says {:?}",
                v.image.image_id,
                image.dims(),
                (v.image.width, v.image.height)
            ));
        }
        image_records(v, &image, &maxima, config).map_err(|e| format!("image `{}` skipped: {e}", v.image.image_id))
    });

    let mut objects = Vec::new();
    let mut notes = Vec::new();
    for r in per_image {
        match r {
            Ok(recs) => objects.extend(recs),
            Err(note) => notes.push(note),
        }
    }
    for o in &objects {
        if o.local_contrast.is_none() {
            notes.push(format!("object `{}`: empty local ring, no local contrast", o.object_id));
        }
    }

    let gamma_fits = if gts.is_empty() {
        Vec::new()
    } else {
        FIT_PAIRS.iter().map(|&(x, y)| fit_pair(gts, x, y)).collect()
    };

    let n = config.histogram_bins;
    let entropy_max = (config.bins.pow(3) as f64).log2();
    let aspect_max = objects.iter().map(|o| o.aspect_ratio).fold(1.0_f64, f64::max).ceil();
    let col = |f: fn(&ObjectRecord) -> Option<f64>| objects.iter().filter_map(f).collect::<Vec<_>>();
    let spec: [(&str, f64, f64, fn(&ObjectRecord) -> Option<f64>); 11] = [
        ("entropy", 0.0, entropy_max, |o| Some(o.entropy)),
        ("mean_l", 0.0, 100.0, |o| Some(o.mean_l)),
        ("mean_a", -128.0, 128.0, |o| Some(o.mean_a)),
        ("mean_b", -128.0, 128.0, |o| Some(o.mean_b)),
        ("norm_center_dist", 0.0, 0.5 * 2f64.sqrt(), |o| Some(o.norm_center_dist)),
        ("width_norm", 0.0, 1.0, |o| Some(o.width_norm)),
        ("height_norm", 0.0, 1.0, |o| Some(o.height_norm)),
        ("area_norm", 0.0, 1.0, |o| Some(o.area_norm)),
        ("aspect_ratio", 0.0, aspect_max, |o| Some(o.aspect_ratio)),
        ("local_contrast", 0.0, 1.0, |o| o.local_contrast),
        ("global_contrast", 0.0, 1.0, |o| o.global_contrast),
    ];
    let distributions = spec
        .iter()
        .map(|&(name, lo, hi, f)| Distribution::new(name, lo, hi, n, col(f).into_iter()))
        .collect();

    Ok(CharacterizationReport {
        provenance: Provenance::for_config(config),
        config: config.clone(),
        maxima,
        objects,
        gamma_fits,
        distributions,
        notes,
    })
}

fn fit_pair(gts: &[ImageGroundTruth], x: Modality, y: Modality) -> ModalityFit {
    let (xs, ys): (Vec<f64>, Vec<f64>) = gts
        .iter()
        .flat_map(|g| g.objects.iter())
        .filter_map(|o| Some((o.get(x)?, o.get(y)?)))
        .unzip();
    let mut fit = ModalityFit {
        x,
        y,
        points: xs.len(),
        g: None,
        r_squared: None,
        note: None,
    };
    match gamma_fit(&xs, &ys) {
        Ok(f) => {
            fit.g = Some(f.g);
            fit.r_squared = f.r_squared;
            if f.r_squared.is_none() {
                fit.note = Some(format!("{y} saliencies have zero variance, R² undefined"));
            }
        }
        Err(e) => fit.note = Some(e.to_string()),
    }
    fit
}

fn image_records(
    view: &ImageView<'_>,
    image: &RgbImage,
    maxima: &DatasetMaxima,
    config: &CharacterizeConfig,
) -> Result<Vec<ObjectRecord>, AnalysisError> {
    let proto = LabHistogram::new(config.bins)?;
    let lab: Vec<[f64; 3]> = image.as_slice().iter().map(|&p| srgb_to_lab(p)).collect();
    let bins: Vec<usize> = lab.iter().map(|&l| proto.bin_index(l)).collect();
    let masked_hist = |m: &Mask| {
        let mut h = proto.clone();
        for (&b, &on) in bins.iter().zip(m.as_slice()) {
            if on {
                h.add_bin(b, 1);
            }
        }
        h
    };

    let mut out = Vec::with_capacity(view.masks.len());
    for (i, m) in view.masks.iter().enumerate() {
        if m.mask.dims() != image.dims() {
            return Err(AnalysisError::DimensionMismatch {
                expected: image.dims(),
                found: m.mask.dims(),
            });
        }
        let mut object = proto.clone();
        let r = m.tight_rect;
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                if *m.mask.get(x, y) {
                    object.add_bin(bins[image.index(x, y)], 1);
                }
            }
        }
        let mean = mean_lab(m.mask.foreground().map(|(x, y)| lab[image.index(x, y)]))?;
        let geometry = geometry_stats(m, maxima)?;
        let others: Vec<_> = view
            .masks
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, o)| *o)
            .collect();
        let radius = config.ring.resolve(m.area());
        let nb = neighborhood_masks(m, &others, radius, config.exclude_others_global)?;
        let local = masked_hist(&nb.local);
        let global = masked_hist(&nb.global);
        out.push(ObjectRecord {
            image_id: view.image.image_id.clone(),
            object_id: m.object_id.clone(),
            entropy: histogram_entropy(&object)?,
            mean_l: mean[0],
            mean_a: mean[1],
            mean_b: mean[2],
            norm_center_dist: geometry.norm_center_dist,
            width_norm: geometry.width_norm,
            height_norm: geometry.height_norm,
            area_norm: geometry.area_norm,
            aspect_ratio: geometry.aspect_ratio,
            ring_radius: radius,
            local_contrast: chi2_contrast(&object, &local).ok(),
            global_contrast: chi2_contrast(&object, &global).ok(),
        });
    }
    Ok(out)
}
