use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{tight_bounding_rect, Dataset, Events, Modality, Rect};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    InvalidImageDims { image_id: String },
    DuplicateImageId { image_id: String },
    DuplicateObjectId { object_id: String },
    UnknownImage { what: String, image_id: String },
    MaskDimensionMismatch {
        object_id: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    EmptyMask { object_id: String },
    TightRectMismatch {
        object_id: String,
        stored: Rect,
        actual: Rect,
    },
    DuplicateRecord {
        subject_id: String,
        image_id: String,
        modality: Modality,
    },
    EventOutOfBounds {
        subject_id: String,
        image_id: String,
        modality: Modality,
    },
    ZeroFixationCount { subject_id: String, image_id: String },
    InvalidGeometry { message: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidImageDims { image_id } => write!(f, "image `{image_id}` has a zero dimension"),
            Violation::DuplicateImageId { image_id } => write!(f, "duplicate image id `{image_id}`"),
            Violation::DuplicateObjectId { object_id } => write!(f, "duplicate object id `{object_id}`"),
            Violation::UnknownImage { what, image_id } => write!(f, "{what} references unknown image `{image_id}`"),
            Violation::MaskDimensionMismatch { object_id, expected, found } => {
                write!(f, "mask `{object_id}` is {found:?}, image is {expected:?}")
            }
            Violation::EmptyMask { object_id } => write!(f, "mask `{object_id}` has no foreground pixels"),
            Violation::TightRectMismatch { object_id, stored, actual } => {
                write!(f, "mask `{object_id}` stores {stored:?} but covers {actual:?}")
            }
            Violation::DuplicateRecord { subject_id, image_id, modality } => {
                write!(f, "more than one {modality} record for subject `{subject_id}` on `{image_id}`")
            }
            Violation::EventOutOfBounds { subject_id, image_id, modality } => {
                write!(f, "{modality} event of subject `{subject_id}` lies outside `{image_id}`")
            }
            Violation::ZeroFixationCount { subject_id, image_id } => {
                write!(f, "zero fixation count for subject `{subject_id}` on `{image_id}`")
            }
            Violation::InvalidGeometry { message } => write!(f, "viewing geometry: {message}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every data-model invariant. Never fails; an empty report means valid.
pub fn validate_dataset(ds: &Dataset) -> ValidationReport {
    let mut out = Vec::new();
    if let Err(e) = ds.viewing_geometry.validate() {
        out.push(Violation::InvalidGeometry {
            message: e.to_string(),
        });
    }

    let mut dims: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for img in &ds.images {
        if img.width == 0 || img.height == 0 {
            out.push(Violation::InvalidImageDims {
                image_id: img.image_id.clone(),
            });
        }
        if dims
            .insert(img.image_id.as_str(), (img.width, img.height))
            .is_some()
        {
            out.push(Violation::DuplicateImageId {
                image_id: img.image_id.clone(),
            });
        }
    }

    let mut objects = BTreeSet::new();
    for m in &ds.masks {
        if !objects.insert(m.object_id.as_str()) {
            out.push(Violation::DuplicateObjectId {
                object_id: m.object_id.clone(),
            });
        }
        let Some(&expected) = dims.get(m.image_id.as_str()) else {
            out.push(Violation::UnknownImage {
                what: format!("mask `{}`", m.object_id),
                image_id: m.image_id.clone(),
            });
            continue;
        };
        if m.mask.dims() != expected {
            out.push(Violation::MaskDimensionMismatch {
                object_id: m.object_id.clone(),
                expected,
                found: m.mask.dims(),
            });
        }
        match tight_bounding_rect(&m.mask) {
            Err(_) => out.push(Violation::EmptyMask {
                object_id: m.object_id.clone(),
            }),
            Ok(actual) if actual != m.tight_rect => out.push(Violation::TightRectMismatch {
                object_id: m.object_id.clone(),
                stored: m.tight_rect,
                actual,
            }),
            Ok(_) => {}
        }
    }

    let mut records = BTreeSet::new();
    for r in &ds.subject_records {
        let key = (r.subject_id.as_str(), r.image_id.as_str(), r.modality());
        if !records.insert(key) {
            out.push(Violation::DuplicateRecord {
                subject_id: r.subject_id.clone(),
                image_id: r.image_id.clone(),
                modality: r.modality(),
            });
        }
        let Some(&(w, h)) = dims.get(r.image_id.as_str()) else {
            out.push(Violation::UnknownImage {
                what: format!("{} record of `{}`", r.modality(), r.subject_id),
                image_id: r.image_id.clone(),
            });
            continue;
        };
        let in_bounds = match &r.events {
            Events::Fixations(v) => {
                if v.iter().any(|f| f.count == 0) {
                    out.push(Violation::ZeroFixationCount {
                        subject_id: r.subject_id.clone(),
                        image_id: r.image_id.clone(),
                    });
                }
                v.iter().all(|f| f.x < w && f.y < h)
            }
            Events::Clicks(v) => v.iter().all(|c| c.x < w && c.y < h),
            Events::Rects(v) => v.iter().all(|r| r.fits_within(w, h)),
        };
        if !in_bounds {
            out.push(Violation::EventOutOfBounds {
                subject_id: r.subject_id.clone(),
                image_id: r.image_id.clone(),
                modality: r.modality(),
            });
        }
    }
    ValidationReport { violations: out }
}
