use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    tight_bounding_rect, ClickPoint, Dataset, Events, FixationPoint, ImageRecord, IngestWarning,
    Modality, ObjectMask, Rect, SubjectRecord,
};
use crate::gtgen::ViewingGeometry;
use crate::io::Provenance;
use crate::raster::Mask;

/// Structural load failure. Each variant names the offending file and,
/// where one exists, the 1-based line.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid manifest: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}:{line}: unknown image_id `{image_id}`")]
    UnknownImage {
        path: PathBuf,
        line: u64,
        image_id: String,
    },
    #[error("{path}:{line}: duplicate record for subject `{subject_id}` on image `{image_id}` ({modality})")]
    DuplicateRecord {
        path: PathBuf,
        line: u64,
        subject_id: String,
        image_id: String,
        modality: Modality,
    },
    #[error("{path}: cannot decode raster: {message}")]
    Raster { path: PathBuf, message: String },
    #[error("{path}: mask `{object_id}` is {found:?} but image `{image_id}` is {expected:?}")]
    DimensionMismatch {
        path: PathBuf,
        object_id: String,
        image_id: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{path}: mask `{object_id}` has no foreground pixels")]
    EmptyMask { path: PathBuf, object_id: String },
    #[error("{path}: stored tight_rect {stored:?} for `{object_id}` differs from mask extent {actual:?}")]
    TightRectMismatch {
        path: PathBuf,
        object_id: String,
        stored: Rect,
        actual: Rect,
    },
}

impl DataError {
    fn manifest(path: &Path, message: impl Into<String>) -> Self {
        DataError::Manifest {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct Manifest {
    pub images: Vec<ManifestImage>,
    #[serde(default)]
    pub masks: Vec<ManifestMask>,
    #[serde(default)]
    pub events: ManifestEvents,
    #[serde(default)]
    pub viewing_geometry: ViewingGeometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct ManifestImage {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct ManifestMask {
    pub object_id: String,
    pub image_id: String,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tight_rect: Option<[usize; 4]>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub(crate) struct ManifestEvents {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixations: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clicks: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rectangles: Option<PathBuf>,
}

/// Loads and cross-links a dataset from its JSON manifest.
///
/// Structural problems abort with a [`DataError`]; clampable ones
/// (out-of-bounds coordinates, inverted rectangles, duplicate events) are
/// repaired and reported in `Dataset::warnings`.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset, DataError> {
    let text = fs::read_to_string(manifest_path).map_err(|source| DataError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| DataError::manifest(manifest_path, e.to_string()))?;
    let root = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    manifest
        .viewing_geometry
        .validate()
        .map_err(|e| DataError::manifest(manifest_path, e.to_string()))?;

    let mut warnings = Vec::new();
    let mut images = Vec::with_capacity(manifest.images.len());
    let mut dims: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for img in &manifest.images {
        if img.width == 0 || img.height == 0 {
            return Err(DataError::manifest(
                manifest_path,
                format!("image `{}` has zero dimension", img.id),
            ));
        }
        if img.id.is_empty() || img.id.contains(['/', '\\']) {
            return Err(DataError::manifest(
                manifest_path,
                format!("image id `{}` is empty or contains a path separator", img.id),
            ));
        }
        if dims.insert(img.id.clone(), (img.width, img.height)).is_some() {
            return Err(DataError::manifest(
                manifest_path,
                format!("duplicate image id `{}`", img.id),
            ));
        }
        images.push(ImageRecord {
            image_id: img.id.clone(),
            width: img.width,
            height: img.height,
            path: img.path.clone(),
        });
    }

    let mut masks = Vec::with_capacity(manifest.masks.len());
    let mut object_ids = BTreeSet::new();
    for m in &manifest.masks {
        let Some(&(w, h)) = dims.get(&m.image_id) else {
            return Err(DataError::manifest(
                manifest_path,
                format!("mask `{}` references unknown image `{}`", m.object_id, m.image_id),
            ));
        };
        if m.object_id.is_empty() || m.object_id.contains(['/', '\\']) {
            return Err(DataError::manifest(
                manifest_path,
                format!("object id `{}` is empty or contains a path separator", m.object_id),
            ));
        }
        if !object_ids.insert(m.object_id.clone()) {
            return Err(DataError::manifest(
                manifest_path,
                format!("duplicate object id `{}`", m.object_id),
            ));
        }
        let path = root.join(&m.path);
        let mask = read_mask(&path)?;
        if mask.dims() != (w, h) {
            return Err(DataError::DimensionMismatch {
                path,
                object_id: m.object_id.clone(),
                image_id: m.image_id.clone(),
                expected: (w, h),
                found: mask.dims(),
            });
        }
        let actual = tight_bounding_rect(&mask).map_err(|_| DataError::EmptyMask {
            path: path.clone(),
            object_id: m.object_id.clone(),
        })?;
        if let Some([x0, y0, x1, y1]) = m.tight_rect {
            let stored = Rect::new(x0, y0, x1, y1);
            if stored != actual {
                return Err(DataError::TightRectMismatch {
                    path,
                    object_id: m.object_id.clone(),
                    stored,
                    actual,
                });
            }
        }
        masks.push(ObjectMask {
            object_id: m.object_id.clone(),
            image_id: m.image_id.clone(),
            mask,
            tight_rect: actual,
        });
    }

    let mut subject_records = Vec::new();
    let sources = [
        (Modality::EyeTracking, &manifest.events.fixations),
        (Modality::PointClick, &manifest.events.clicks),
        (Modality::RectDraw, &manifest.events.rectangles),
    ];
    for (modality, rel) in sources {
        if let Some(rel) = rel {
            let path = root.join(rel);
            let recs = read_events(&path, modality, &dims, &mut warnings)?;
            subject_records.extend(recs);
        }
    }
    if subject_records.is_empty() {
        warnings.push(IngestWarning {
            file: Some(manifest_path.to_path_buf()),
            line: None,
            message: "no modality has any subject records".into(),
        });
    }

    let mut ds = Dataset {
        root,
        images,
        masks,
        subject_records,
        viewing_geometry: manifest.viewing_geometry,
        warnings,
    };
    ds.canonicalize();
    Ok(ds)
}

/// Reads a lossless raster; any nonzero channel value is foreground.
pub(crate) fn read_mask(path: &Path) -> Result<Mask, DataError> {
    let img = image::open(path).map_err(|e| DataError::Raster {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb16();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.pixels().map(|p| p.0.iter().any(|&c| c != 0)).collect();
    Ok(Mask::from_vec(w, h, data).expect("decoded buffer matches its dimensions"))
}

const FIXATION_COLUMNS: &[&str] = &["subject_id", "image_id", "x", "y", "count"];
const CLICK_COLUMNS: &[&str] = &["subject_id", "image_id", "x", "y"];
const RECT_COLUMNS: &[&str] = &["subject_id", "image_id", "x0", "y0", "x1", "y1"];

pub(crate) fn columns_for(modality: Modality) -> &'static [&'static str] {
    match modality {
        Modality::EyeTracking => FIXATION_COLUMNS,
        Modality::PointClick => CLICK_COLUMNS,
        Modality::RectDraw => RECT_COLUMNS,
    }
}

struct RowCtx<'a> {
    path: &'a Path,
    line: u64,
}

impl RowCtx<'_> {
    fn malformed(&self, message: impl Into<String>) -> DataError {
        DataError::MalformedRow {
            path: self.path.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    fn warn(&self, warnings: &mut Vec<IngestWarning>, message: impl Into<String>) {
        warnings.push(IngestWarning {
            file: Some(self.path.to_path_buf()),
            line: Some(self.line),
            message: message.into(),
        });
    }

    fn coord(&self, raw: &str, name: &str) -> Result<f64, DataError> {
        let v: f64 = raw
            .trim()
            .parse()
            .map_err(|_| self.malformed(format!("column `{name}`: `{raw}` is not a number")))?;
        if !v.is_finite() {
            return Err(self.malformed(format!("column `{name}` is not finite")));
        }
        Ok(v)
    }
}

/// Clamps a point coordinate into `[0, limit)`, returning whether it moved.
fn clamp_point(v: f64, limit: usize) -> (usize, bool) {
    let px = v.floor();
    if px < 0.0 {
        (0, true)
    } else if px >= limit as f64 {
        (limit - 1, true)
    } else {
        (px as usize, false)
    }
}

/// Clamps a half-open edge into `[0, limit]`.
fn clamp_edge(v: f64, limit: usize) -> (usize, bool) {
    if v < 0.0 {
        (0, true)
    } else if v > limit as f64 {
        (limit, true)
    } else {
        (v as usize, false)
    }
}

fn read_events(
    path: &Path,
    modality: Modality,
    dims: &BTreeMap<String, (usize, usize)>,
    warnings: &mut Vec<IngestWarning>,
) -> Result<Vec<SubjectRecord>, DataError> {
    let file = fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| DataError::MalformedRow {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let cols = columns_for(modality);
    let mut pos = Vec::with_capacity(cols.len());
    for c in cols {
        let i = header.iter().position(|h| h == *c).ok_or_else(|| DataError::MalformedRow {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing required column `{c}` (expected header {})", cols.join(",")),
        })?;
        pos.push(i);
    }

    let mut records: Vec<SubjectRecord> = Vec::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    let mut seen_events: BTreeSet<Vec<String>> = BTreeSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| DataError::MalformedRow {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let ctx = RowCtx {
            path,
            line: row.position().map(|p| p.line()).unwrap_or(0),
        };
        let field = |k: usize| row.get(pos[k]).unwrap_or("");
        let subject_id = field(0).to_string();
        let image_id = field(1).to_string();
        if subject_id.is_empty() {
            return Err(ctx.malformed("empty subject_id"));
        }
        let Some(&(w, h)) = dims.get(&image_id) else {
            return Err(DataError::UnknownImage {
                path: path.to_path_buf(),
                line: ctx.line,
                image_id,
            });
        };

        let continues = records
            .last()
            .is_some_and(|r| r.subject_id == subject_id && r.image_id == image_id);
        if !continues {
            if !seen.insert((subject_id.clone(), image_id.clone())) {
                return Err(DataError::DuplicateRecord {
                    path: path.to_path_buf(),
                    line: ctx.line,
                    subject_id,
                    image_id,
                    modality,
                });
            }
            seen_events.clear();
            let events = match modality {
                Modality::EyeTracking => Events::Fixations(Vec::new()),
                Modality::PointClick => Events::Clicks(Vec::new()),
                Modality::RectDraw => Events::Rects(Vec::new()),
            };
            records.push(SubjectRecord {
                subject_id: subject_id.clone(),
                image_id: image_id.clone(),
                events,
            });
        }

        let coords: Vec<&str> = (2..cols.len()).map(field).collect();
        if coords.iter().all(|c| c.is_empty()) {
            // viewer without responses
            continue;
        }
        if !seen_events.insert(coords.iter().map(|s| s.to_string()).collect()) {
            ctx.warn(warnings, format!("duplicate event for subject `{subject_id}`"));
        }
        let record = records.last_mut().expect("record pushed above");
        match &mut record.events {
            Events::Fixations(list) => {
                let (x, cx) = clamp_point(ctx.coord(coords[0], "x")?, w);
                let (y, cy) = clamp_point(ctx.coord(coords[1], "y")?, h);
                let count: u32 = coords[2]
                    .parse()
                    .map_err(|_| ctx.malformed(format!("count `{}` is not a positive integer", coords[2])))?;
                if count == 0 {
                    return Err(ctx.malformed("fixation count must be >= 1"));
                }
                if cx || cy {
                    ctx.warn(warnings, "fixation clamped into image bounds");
                }
                list.push(FixationPoint { x, y, count });
            }
            Events::Clicks(list) => {
                let (x, cx) = clamp_point(ctx.coord(coords[0], "x")?, w);
                let (y, cy) = clamp_point(ctx.coord(coords[1], "y")?, h);
                if cx || cy {
                    ctx.warn(warnings, "click clamped into image bounds");
                }
                list.push(ClickPoint { x, y });
            }
            Events::Rects(list) => {
                let mut v = [0.0; 4];
                for (k, name) in ["x0", "y0", "x1", "y1"].iter().enumerate() {
                    v[k] = ctx.coord(coords[k], name)?;
                }
                if v[0] > v[2] || v[1] > v[3] {
                    ctx.warn(warnings, "inverted rectangle corners swapped");
                    if v[0] > v[2] {
                        v.swap(0, 2);
                    }
                    if v[1] > v[3] {
                        v.swap(1, 3);
                    }
                }
                let (x0, a) = clamp_edge(v[0].floor(), w);
                let (y0, b) = clamp_edge(v[1].floor(), h);
                let (mut x1, c) = clamp_edge(v[2].ceil(), w);
                let (mut y1, d) = clamp_edge(v[3].ceil(), h);
                if a || b || c || d {
                    ctx.warn(warnings, "rectangle clamped into image bounds");
                }
                let x0 = x0.min(w - 1);
                let y0 = y0.min(h - 1);
                if x1 <= x0 || y1 <= y0 {
                    ctx.warn(warnings, "degenerate rectangle widened to one pixel");
                    x1 = x1.max(x0 + 1);
                    y1 = y1.max(y0 + 1);
                }
                list.push(Rect::new(x0, y0, x1, y1));
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamping_rules() {
        assert_eq!(clamp_point(-0.5, 10), (0, true));
        assert_eq!(clamp_point(10.0, 10), (9, true));
        assert_eq!(clamp_point(3.7, 10), (3, false));
        assert_eq!(clamp_edge(11.0, 10), (10, true));
        assert_eq!(clamp_edge(-2.0, 10), (0, true));
    }
}
