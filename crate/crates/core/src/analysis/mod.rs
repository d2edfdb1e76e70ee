//! Dataset characterization: object color statistics, geometry, local and
//! global color contrast, and gamma fits between modality saliencies.

mod characterize;
mod color;
mod gamma;
mod geometry;
mod neighborhood;

use std::path::PathBuf;

pub use characterize::{
    characterize, load_rgb, CharacterizationReport, CharacterizeConfig, Distribution, ModalityFit,
    ObjectRecord, FIT_PAIRS,
};
pub use color::{
    chi2_contrast, color_entropy, histogram_entropy, mean_color, srgb_to_lab, LabHistogram,
    RgbImage, DEFAULT_BINS,
};
pub use gamma::{gamma_fit, GammaFit, GAMMA_MAX};
pub use geometry::{geometry_stats, DatasetMaxima, ObjectGeometry};
pub use neighborhood::{dilate, neighborhood_masks, NeighborhoodMasks, RingRadius};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("raster is {found:?}, expected {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("histogram bins per axis must be in 1..=64, got {0}")]
    InvalidBins(usize),
    #[error("dataset maxima smaller than the object")]
    MaximaTooSmall,
    #[error("list has {found} entries, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("value {0} outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("all x values are equal")]
    DegenerateInput,
    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },
}
