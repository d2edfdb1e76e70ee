//! Scores detector saliency maps against multi-level ground truth.

mod evaluate;
mod kendall;
mod mae;
mod prc;

use std::path::PathBuf;

pub use evaluate::{
    evaluate, load_ground_truths, load_saliency_maps, Aggregates, Coverage, EvalConfig,
    ImageResult, LevelRow, MetricReport, ObjectRow, PerModality, Scope,
};
pub use kendall::{
    compare_eps, kendall_tau_b, kendall_tau_b_with, kendall_tau_combined,
    kendall_tau_combined_with, KendallTau, DEFAULT_TIE_EPS,
};
pub use mae::{
    mae_aggregate, mae_combined_per_object, mae_per_object, object_mean_saliency, SaliencyMap,
};
pub use prc::{
    auprc, auprc_aggregate_gamma, auprc_combined, gt_level_binarize, precision_recall_curve,
    rank_aligned_rows, trapezoid, PRCurve, PrCurveBuilder, ThresholdMode,
};

use crate::gtgen::GtError;
use crate::io::IoError;

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("object `{0}` has an empty mask")]
    EmptyMask(String),
    #[error("raster is {found:?}, expected {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("nothing to aggregate in scope")]
    EmptyScope,
    #[error("list has {found} entries, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("need at least 2 items to rank, got {0}")]
    TooFewItems(usize),
    #[error("no reference rankings supplied")]
    NoReferences,
    #[error("ground truth has no positive pixels")]
    NoPositives,
    #[error("saliency value {0} outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("a modality value is missing")]
    MissingModality,
    #[error("no modalities requested")]
    NoModalities,
    #[error("{path}: {message}")]
    Raster { path: PathBuf, message: String },
    #[error(transparent)]
    Gt(#[from] GtError),
    #[error(transparent)]
    Io(#[from] IoError),
}
