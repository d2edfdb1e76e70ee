use serde::{Deserialize, Serialize};

use super::GtError;
use crate::data::{Events, SubjectRecord};
use crate::raster::FloatMap;

/// How a smoothed fixation map is scaled into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityNormalization {
    /// Divide by the map maximum.
    #[default]
    Max,
    /// Subtract the minimum, then divide by the range.
    MinMax,
}

/// Per-subject fixation density on one image.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub image_id: String,
    pub subject_id: String,
    pub values: FloatMap,
}

/// 1-D Gaussian taps for offsets `0..=radius`, radius `⌈3σ⌉`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let denom = 2.0 * sigma * sigma;
    let raw: Vec<f64> = (0..=radius)
        .map(|d| (-((d * d) as f64) / denom).exp())
        .collect();
    let total = raw[0] + 2.0 * raw[1..].iter().sum::<f64>();
    raw.into_iter().map(|v| v / total).collect()
}

/// Smooths a subject's fixations with an isotropic Gaussian and normalizes.
///
/// The kernel is separable and truncated at `⌈3σ⌉` on each axis; pixels
/// beyond the border contribute nothing. Fixations are sparse, so each one
/// is splatted directly instead of convolving the whole count raster.
pub fn fixation_density_map(
    record: &SubjectRecord,
    width: usize,
    height: usize,
    sigma: f64,
    normalization: DensityNormalization,
) -> Result<DensityMap, GtError> {
    let Events::Fixations(fixations) = &record.events else {
        return Err(GtError::WrongModality {
            subject_id: record.subject_id.clone(),
            expected: crate::data::Modality::EyeTracking,
        });
    };
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(GtError::InvalidSigma(sigma));
    }
    let taps = gaussian_taps(sigma);
    let r = taps.len() - 1;
    let mut values = FloatMap::filled(width, height, 0.0);
    for f in fixations {
        let c = f64::from(f.count);
        let (x_lo, x_hi) = (f.x.saturating_sub(r), (f.x + r).min(width - 1));
        let (y_lo, y_hi) = (f.y.saturating_sub(r), (f.y + r).min(height - 1));
        let row_taps: Vec<f64> = (x_lo..=x_hi).map(|x| taps[x.abs_diff(f.x)]).collect();
        for y in y_lo..=y_hi {
            let wy = c * taps[y.abs_diff(f.y)];
            let start = y * width + x_lo;
            let row = &mut values.as_mut_slice()[start..start + row_taps.len()];
            for (v, t) in row.iter_mut().zip(&row_taps) {
                *v += wy * t;
            }
        }
    }
    normalize(&mut values, normalization);
    Ok(DensityMap {
        image_id: record.image_id.clone(),
        subject_id: record.subject_id.clone(),
        values,
    })
}

fn normalize(values: &mut FloatMap, mode: DensityNormalization) {
    let data = values.as_mut_slice();
    let max = data.iter().copied().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return;
    }
    match mode {
        DensityNormalization::Max => data.iter_mut().for_each(|v| *v /= max),
        DensityNormalization::MinMax => {
            let min = data.iter().copied().fold(f64::INFINITY, f64::min);
            let range = max - min;
            if range > 0.0 {
                data.iter_mut().for_each(|v| *v = (*v - min) / range);
            } else {
                data.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FixationPoint;
    use proptest::prelude::*;

    fn record(fix: Vec<FixationPoint>) -> SubjectRecord {
        SubjectRecord {
            subject_id: "s".into(),
            image_id: "i".into(),
            events: Events::Fixations(fix),
        }
    }

    /// Dense zero-padded 2-D convolution of the count raster with the
    /// product kernel, evaluated pixel by pixel.
    fn naive_density(fix: &[FixationPoint], w: usize, h: usize, sigma: f64) -> FloatMap {
        let r = (3.0 * sigma).ceil() as i64;
        let mut counts = FloatMap::filled(w, h, 0.0);
        for f in fix {
            *counts.get_mut(f.x, f.y) += f64::from(f.count);
        }
        let k = |d: i64| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp();
        let mut out = FloatMap::filled(w, h, 0.0);
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let mut acc = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (sx, sy) = (x - dx, y - dy);
                        if sx >= 0 && sy >= 0 && sx < w as i64 && sy < h as i64 {
                            acc += counts.get(sx as usize, sy as usize) * k(dx) * k(dy);
                        }
                    }
                }
                out.set(x as usize, y as usize, acc);
            }
        }
        let max = out.max_value();
        if max > 0.0 {
            out = out.map(|v| v / max);
        }
        out
    }

    #[test]
    fn single_center_fixation_is_symmetric_with_unit_peak() {
        let rec = record(vec![FixationPoint { x: 10, y: 10, count: 1 }]);
        let m = fixation_density_map(&rec, 21, 21, 3.0, DensityNormalization::Max).unwrap();
        assert_eq!(*m.values.get(10, 10), 1.0);
        for d in 1..=10 {
            let v = *m.values.get(10 + d, 10);
            assert_eq!(v, *m.values.get(10 - d, 10));
            assert_eq!(v, *m.values.get(10, 10 + d));
            assert_eq!(v, *m.values.get(10, 10 - d));
            assert!(v < *m.values.get(10 + d - 1, 10));
        }
    }

    #[test]
    fn equal_far_peaks_both_reach_one() {
        let rec = record(vec![
            FixationPoint { x: 5, y: 5, count: 2 },
            FixationPoint { x: 60, y: 5, count: 2 },
        ]);
        let m = fixation_density_map(&rec, 70, 12, 2.0, DensityNormalization::Max).unwrap();
        assert!((m.values.get(5, 5) - 1.0).abs() < 1e-12);
        assert!((m.values.get(60, 5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unequal_counts_give_one_global_max() {
        let rec = record(vec![
            FixationPoint { x: 5, y: 5, count: 1 },
            FixationPoint { x: 60, y: 5, count: 3 },
        ]);
        let m = fixation_density_map(&rec, 70, 12, 2.0, DensityNormalization::Max).unwrap();
        assert_eq!(*m.values.get(60, 5), 1.0);
        assert!((m.values.get(5, 5) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn no_fixations_gives_zero_map() {
        let m = fixation_density_map(&record(vec![]), 8, 8, 1.5, DensityNormalization::Max).unwrap();
        assert!(m.values.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_sigma_and_modality() {
        assert!(fixation_density_map(&record(vec![]), 4, 4, 0.0, DensityNormalization::Max).is_err());
        let clicks = SubjectRecord {
            subject_id: "s".into(),
            image_id: "i".into(),
            events: Events::Clicks(vec![]),
        };
        assert!(fixation_density_map(&clicks, 4, 4, 1.0, DensityNormalization::Max).is_err());
    }

    #[test]
    fn min_max_normalization_spans_unit_interval() {
        let rec = record(vec![FixationPoint { x: 1, y: 1, count: 1 }]);
        let m = fixation_density_map(&rec, 30, 30, 1.0, DensityNormalization::MinMax).unwrap();
        let s = m.values.as_slice();
        assert_eq!(s.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(m.values.max_value(), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn splat_matches_dense_convolution(
            pts in proptest::collection::vec((0usize..24, 0usize..18, 1u32..4), 0..6),
            sigma in 0.6f64..3.5,
        ) {
            let fix: Vec<_> = pts.iter().map(|&(x, y, count)| FixationPoint { x, y, count }).collect();
            let got = fixation_density_map(&record(fix.clone()), 24, 18, sigma, DensityNormalization::Max).unwrap();
            let want = naive_density(&fix, 24, 18, sigma);
            for (a, b) in got.values.as_slice().iter().zip(want.as_slice()) {
                prop_assert!((a - b).abs() < 1e-6);
            }
            let max = got.values.max_value();
            prop_assert!(max == 0.0 || (max - 1.0).abs() < 1e-15);
        }
    }
}
