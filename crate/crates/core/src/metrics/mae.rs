use std::path::Path;

use super::MetricError;
use crate::data::ObjectMask;
use crate::raster::FloatMap;

/// Detector output for one image, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub image_id: String,
    pub values: FloatMap,
}

impl SaliencyMap {
    pub fn new(image_id: impl Into<String>, values: FloatMap) -> Result<Self, MetricError> {
        if let Some(v) = values
            .as_slice()
            .iter()
            .find(|v| !(0.0..=1.0).contains(*v))
        {
            return Err(MetricError::ValueOutOfRange(*v));
        }
        Ok(Self {
            image_id: image_id.into(),
            values,
        })
    }

    /// Decodes a grayscale raster, scaling by the bit depth maximum.
    pub fn load(path: &Path, image_id: impl Into<String>) -> Result<Self, MetricError> {
        let img = image::open(path).map_err(|e| MetricError::Raster {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let gray = img.to_luma16();
        let (w, h) = (gray.width() as usize, gray.height() as usize);
        let data = gray.pixels().map(|p| f64::from(p.0[0]) / 65535.0).collect();
        let values = FloatMap::from_vec(w, h, data).expect("decoded buffer matches its dimensions");
        Self::new(image_id, values)
    }
}

/// Mean estimated saliency over an object's mask.
pub fn object_mean_saliency(map: &SaliencyMap, mask: &ObjectMask) -> Result<f64, MetricError> {
    if map.values.dims() != mask.mask.dims() {
        return Err(MetricError::DimensionMismatch {
            expected: mask.mask.dims(),
            found: map.values.dims(),
        });
    }
    let r = mask.tight_rect;
    let (mut sum, mut n) = (0.0, 0usize);
    for y in r.y0..r.y1 {
        let vals = &map.values.row(y)[r.x0..r.x1];
        let inside = &mask.mask.row(y)[r.x0..r.x1];
        for (v, &m) in vals.iter().zip(inside) {
            if m {
                sum += v;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(MetricError::EmptyMask(mask.object_id.clone()));
    }
    Ok(sum / n as f64)
}

pub fn mae_per_object(estimate: f64, ground_truth: f64) -> f64 {
    (estimate - ground_truth).abs()
}

/// Arithmetic mean over the objects in scope.
pub fn mae_aggregate(errors: &[f64]) -> Result<f64, MetricError> {
    mean(errors)
}

/// Smallest per-modality error of one object.
///
/// `errors` holds one entry per requested modality. A missing entry is an
/// error unless `allow_partial`, in which case the minimum runs over the
/// present ones (at least one is still required).
pub fn mae_combined_per_object(errors: &[Option<f64>], allow_partial: bool) -> Result<f64, MetricError> {
    if errors.iter().any(Option::is_none) && !allow_partial {
        return Err(MetricError::MissingModality);
    }
    errors
        .iter()
        .flatten()
        .copied()
        .reduce(f64::min)
        .ok_or(MetricError::MissingModality)
}

pub(crate) fn mean(values: &[f64]) -> Result<f64, MetricError> {
    if values.is_empty() {
        return Err(MetricError::EmptyScope);
    }
    Ok(values.iter().fold(0.0, |a, v| a + v) / values.len() as f64)
}
