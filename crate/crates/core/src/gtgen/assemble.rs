use serde::Serialize;

use super::{GtError, ObjectSaliency};
use crate::data::{Modality, ObjectMask};
use crate::raster::{FloatMap, Mask};

/// Multi-level ground-truth map of one image for one modality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiLevelGroundTruth {
    pub image_id: String,
    pub modality: Modality,
    #[serde(skip)]
    pub map: FloatMap,
    /// Strictly increasing distinct object values, zero included if present.
    pub levels: Vec<f64>,
    /// `(object_id, value)` in mask order.
    pub objects: Vec<(String, f64)>,
}

/// Paints each object's saliency over its mask; background stays 0.
///
/// Overlapping masks take the largest covering value so the map stays in
/// `[0, 1]`; for disjoint masks this equals the masked sum.
pub fn assemble_gt_map(
    saliencies: &[ObjectSaliency],
    masks: &[&ObjectMask],
    modality: Modality,
) -> Result<MultiLevelGroundTruth, GtError> {
    let first = masks.first().ok_or(GtError::NoMasks)?;
    let (w, h) = first.mask.dims();
    let mut map = FloatMap::filled(w, h, 0.0);
    let mut objects = Vec::with_capacity(masks.len());
    for m in masks {
        if m.mask.dims() != (w, h) || m.image_id != first.image_id {
            return Err(GtError::MaskMismatch {
                object_id: m.object_id.clone(),
            });
        }
        let s = saliencies
            .iter()
            .find(|s| s.object_id == m.object_id)
            .and_then(|s| s.get(modality))
            .ok_or_else(|| GtError::MissingSaliency {
                object_id: m.object_id.clone(),
                modality,
            })?;
        let r = m.tight_rect;
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                if *m.mask.get(x, y) {
                    let v = map.get_mut(x, y);
                    if s > *v {
                        *v = s;
                    }
                }
            }
        }
        objects.push((m.object_id.clone(), s));
    }
    let mut levels: Vec<f64> = objects.iter().map(|(_, s)| *s).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    Ok(MultiLevelGroundTruth {
        image_id: first.image_id.clone(),
        modality,
        map,
        levels,
        objects,
    })
}

/// Union of all object masks: every object in a single salient class.
pub fn binarize_equal_salience(masks: &[&ObjectMask]) -> Result<Mask, GtError> {
    let first = masks.first().ok_or(GtError::NoMasks)?;
    let (w, h) = first.mask.dims();
    let mut out = Mask::filled(w, h, false);
    for m in masks {
        if m.mask.dims() != (w, h) {
            return Err(GtError::MaskMismatch {
                object_id: m.object_id.clone(),
            });
        }
        for (o, &b) in out.as_mut_slice().iter_mut().zip(m.mask.as_slice()) {
            *o |= b;
        }
    }
    Ok(out)
}
