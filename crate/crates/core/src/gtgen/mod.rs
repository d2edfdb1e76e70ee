//! Ground-truth generation: per-object saliency from eye fixations, point
//! clicks and drawn rectangles, and assembly of multi-level maps.

mod assemble;
mod build;
mod density;
mod saliency;
mod sigma;

pub use assemble::{assemble_gt_map, binarize_equal_salience, MultiLevelGroundTruth};
pub use build::{
    build_ground_truth, image_ground_truth, raster_path, read_image_ground_truth, resolve_sigma,
    sidecar_path, write_ground_truth, GroundTruthSet, GtConfig, ImageGroundTruth, SigmaChoice,
    SubjectCounts, GT_INDEX_FILE,
};
pub use density::{fixation_density_map, gaussian_taps, DensityMap, DensityNormalization};
pub use saliency::{
    eye_tracking_saliency, point_click_saliency, rect_draw_saliency, rect_iou, ObjectSaliency,
    DEFAULT_IOU_THRESHOLD,
};
pub use sigma::{foveal_sigma, ViewingGeometry};

use crate::data::Modality;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GtError {
    #[error("invalid viewing geometry: {0}")]
    InvalidGeometry(String),
    #[error("foveal sigma is not finite")]
    NonFiniteSigma,
    #[error("smoothing sigma must be a positive number, got {0}")]
    InvalidSigma(f64),
    #[error("IoU threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("no {0} subjects supplied")]
    EmptySubjectList(Modality),
    #[error("record of subject `{subject_id}` is not a {expected} record")]
    WrongModality { subject_id: String, expected: Modality },
    #[error("object `{object_id}` has no {modality} saliency value")]
    MissingSaliency { object_id: String, modality: Modality },
    #[error("no object masks supplied")]
    NoMasks,
    #[error("mask `{object_id}` does not belong to the same image raster")]
    MaskMismatch { object_id: String },
}
