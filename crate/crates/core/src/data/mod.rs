//! Dataset schema: images, per-object masks and subjective-experiment
//! event records, plus loading, writing and validation.

mod geometry;
mod load;
mod validate;
mod write;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::gtgen::ViewingGeometry;
use crate::raster::Mask;

pub use geometry::{tight_bounding_rect, EmptyMaskError, Rect};
pub use load::{load_dataset, DataError};
pub use validate::{validate_dataset, ValidationReport, Violation};
pub use write::write_dataset;

/// The three subjective experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "et")]
    EyeTracking,
    #[serde(rename = "pc")]
    PointClick,
    #[serde(rename = "rd")]
    RectDraw,
}

impl Modality {
    pub const ALL: [Modality; 3] = [
        Modality::EyeTracking,
        Modality::PointClick,
        Modality::RectDraw,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Modality::EyeTracking => "et",
            Modality::PointClick => "pc",
            Modality::RectDraw => "rd",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "et" | "eye_tracking" => Some(Modality::EyeTracking),
            "pc" | "point_click" => Some(Modality::PointClick),
            "rd" | "rect_draw" => Some(Modality::RectDraw),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    /// Relative to the dataset root.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMask {
    pub object_id: String,
    pub image_id: String,
    pub mask: Mask,
    pub tight_rect: Rect,
}

impl ObjectMask {
    /// Builds a mask record, deriving its tight rectangle.
    pub fn new(
        object_id: impl Into<String>,
        image_id: impl Into<String>,
        mask: Mask,
    ) -> Result<Self, EmptyMaskError> {
        let tight_rect = tight_bounding_rect(&mask)?;
        Ok(Self {
            object_id: object_id.into(),
            image_id: image_id.into(),
            mask,
            tight_rect,
        })
    }

    pub fn area(&self) -> usize {
        self.mask.count()
    }

    /// Whether pixel `(x, y)` is foreground. Only the tight rectangle is probed.
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.tight_rect.contains(x, y) && *self.mask.get(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixationPoint {
    pub x: usize,
    pub y: usize,
    pub count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickPoint {
    pub x: usize,
    pub y: usize,
}

/// The events of one record; the variant fixes the modality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Events {
    Fixations(Vec<FixationPoint>),
    Clicks(Vec<ClickPoint>),
    Rects(Vec<Rect>),
}

impl Events {
    pub fn modality(&self) -> Modality {
        match self {
            Events::Fixations(_) => Modality::EyeTracking,
            Events::Clicks(_) => Modality::PointClick,
            Events::Rects(_) => Modality::RectDraw,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Events::Fixations(v) => v.len(),
            Events::Clicks(v) => v.len(),
            Events::Rects(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One subject's events on one image for one modality. An empty event
/// list records a subject who viewed the image without responding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub image_id: String,
    pub events: Events,
}

impl SubjectRecord {
    pub fn modality(&self) -> Modality {
        self.events.modality()
    }
}

/// Non-fatal ingestion finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestWarning {
    pub file: Option<PathBuf>,
    pub line: Option<u64>,
    pub message: String,
}

impl fmt::Display for IngestWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.file, self.line) {
            (Some(p), Some(l)) => write!(f, "{}:{}: {}", p.display(), l, self.message),
            (Some(p), None) => write!(f, "{}: {}", p.display(), self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Directory that relative paths resolve against.
    pub root: PathBuf,
    pub images: Vec<ImageRecord>,
    pub masks: Vec<ObjectMask>,
    pub subject_records: Vec<SubjectRecord>,
    pub viewing_geometry: ViewingGeometry,
    pub warnings: Vec<IngestWarning>,
}

/// Borrowed per-image view of a dataset.
#[derive(Debug, Clone)]
pub struct ImageView<'a> {
    pub image: &'a ImageRecord,
    pub masks: Vec<&'a ObjectMask>,
    /// Indexed by [`Modality::index`]; each list sorted by subject id.
    pub records: [Vec<&'a SubjectRecord>; 3],
}

impl ImageView<'_> {
    pub fn records(&self, modality: Modality) -> &[&SubjectRecord] {
        &self.records[modality.index()]
    }

    /// Number of distinct subjects who viewed the image in `modality`.
    pub fn subject_count(&self, modality: Modality) -> usize {
        self.records(modality).len()
    }
}

impl Dataset {
    pub fn image(&self, image_id: &str) -> Option<&ImageRecord> {
        self.images.iter().find(|i| i.image_id == image_id)
    }

    /// Sorts subject records into canonical `(modality, image, subject)` order.
    pub fn canonicalize(&mut self) {
        self.subject_records.sort_by(|a, b| {
            (a.modality(), &a.image_id, &a.subject_id).cmp(&(
                b.modality(),
                &b.image_id,
                &b.subject_id,
            ))
        });
    }

    /// Per-image views in manifest image order.
    pub fn views(&self) -> Vec<ImageView<'_>> {
        let mut slot: BTreeMap<&str, usize> = BTreeMap::new();
        let mut views: Vec<ImageView<'_>> = Vec::with_capacity(self.images.len());
        for image in &self.images {
            slot.insert(image.image_id.as_str(), views.len());
            views.push(ImageView {
                image,
                masks: Vec::new(),
                records: [Vec::new(), Vec::new(), Vec::new()],
            });
        }
        for m in &self.masks {
            if let Some(&i) = slot.get(m.image_id.as_str()) {
                views[i].masks.push(m);
            }
        }
        for r in &self.subject_records {
            if let Some(&i) = slot.get(r.image_id.as_str()) {
                views[i].records[r.modality().index()].push(r);
            }
        }
        for v in &mut views {
            for list in &mut v.records {
                list.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
            }
        }
        views
    }

    /// Distinct subject count per `(image, modality)`.
    pub fn subject_counts(&self) -> BTreeMap<(String, Modality), usize> {
        let mut seen: BTreeMap<(String, Modality), std::collections::BTreeSet<&str>> =
            BTreeMap::new();
        for r in &self.subject_records {
            seen.entry((r.image_id.clone(), r.modality()))
                .or_default()
                .insert(r.subject_id.as_str());
        }
        seen.into_iter().map(|(k, v)| (k, v.len())).collect()
    }

    /// Field-wise equality ignoring `root` and ingestion warnings.
    pub fn same_content(&self, other: &Dataset) -> bool {
        self.images == other.images
            && self.masks == other.masks
            && self.subject_records == other.subject_records
            && self.viewing_geometry == other.viewing_geometry
    }
}
