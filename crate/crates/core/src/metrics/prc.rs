//! Precision-recall curves against binary maps and the multi-level AuPRC
//! built from them.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::mae::mean;
use super::MetricError;
use crate::gtgen::MultiLevelGroundTruth;
use crate::raster::{FloatMap, Mask};

/// Binarization thresholds applied to a saliency map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// `0, 1/255, …, 1`.
    #[default]
    Uniform256,
    /// Every distinct value of the map.
    Exact,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::Uniform256 => "uniform256",
            ThresholdMode::Exact => "exact",
        })
    }
}

impl std::str::FromStr for ThresholdMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform256" => Ok(ThresholdMode::Uniform256),
            "exact" => Ok(ThresholdMode::Exact),
            _ => Err(format!("unknown threshold mode `{s}` (uniform256|exact)")),
        }
    }
}

/// `(recall, precision)` points in order of decreasing threshold, so recall
/// never decreases. The first point is the recall-0 anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PRCurve {
    pub points: Vec<(f64, f64)>,
    pub thresholds: Vec<f64>,
}

/// Area of one trapezoid between consecutive curve points.
#[inline]
pub fn trapezoid(r0: f64, p0: f64, r1: f64, p1: f64) -> f64 {
    (r1 - r0) * (p0 + p1) * 0.5
}

/// Trapezoidal area under the curve; 0 for fewer than two points.
pub fn auprc(curve: &PRCurve) -> f64 {
    curve
        .points
        .windows(2)
        .fold(0.0, |acc, w| acc + trapezoid(w[0].0, w[0].1, w[1].0, w[1].1))
}

/// Saliency map quantized against its threshold ladder once, so curves for
/// many binary maps of the same image share the work.
#[derive(Debug, Clone)]
pub struct PrCurveBuilder {
    /// Ascending thresholds.
    thresholds: Vec<f64>,
    /// Per pixel, index of the largest threshold it reaches, or `None`
    /// when it is below the lowest one.
    bucket: Vec<Option<u32>>,
    above_max: f64,
    dims: (usize, usize),
}

impl PrCurveBuilder {
    pub fn new(scores: &FloatMap, mode: ThresholdMode) -> Self {
        let values = scores.as_slice();
        let thresholds: Vec<f64> = match mode {
            ThresholdMode::Uniform256 => (0..=255).map(|i| f64::from(i) / 255.0).collect(),
            ThresholdMode::Exact => {
                let mut v = values.to_vec();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
        };
        let bucket = values
            .iter()
            .map(|s| {
                // thresholds[..k] are all <= s
                let k = thresholds.partition_point(|t| t <= s);
                (k > 0).then(|| (k - 1) as u32)
            })
            .collect();
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            thresholds,
            bucket,
            above_max: max.next_up(),
            dims: scores.dims(),
        }
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Curve of the map against `gt`.
    pub fn curve(&self, gt: &Mask) -> Result<PRCurve, MetricError> {
        if gt.dims() != self.dims {
            return Err(MetricError::DimensionMismatch {
                expected: self.dims,
                found: gt.dims(),
            });
        }
        let n = self.thresholds.len();
        let mut pos = vec![0u64; n];
        let mut neg = vec![0u64; n];
        let mut positives = 0u64;
        for (b, &g) in self.bucket.iter().zip(gt.as_slice()) {
            positives += g as u64;
            if let Some(b) = b {
                if g {
                    pos[*b as usize] += 1;
                } else {
                    neg[*b as usize] += 1;
                }
            }
        }
        if positives == 0 {
            return Err(MetricError::NoPositives);
        }
        let p = positives as f64;
        let mut points = Vec::with_capacity(n + 1);
        let mut thresholds = Vec::with_capacity(n + 1);
        let (mut tp, mut fp) = (0u64, 0u64);
        for i in (0..n).rev() {
            tp += pos[i];
            fp += neg[i];
            if tp + fp == 0 {
                continue;
            }
            let precision = tp as f64 / (tp + fp) as f64;
            if points.is_empty() {
                points.push((0.0, precision));
                thresholds.push(self.above_max);
            }
            points.push((tp as f64 / p, precision));
            thresholds.push(self.thresholds[i]);
        }
        if points.is_empty() {
            // every pixel below the lowest threshold: nothing is ever predicted
            points.push((0.0, 1.0));
            thresholds.push(self.above_max);
        }
        Ok(PRCurve { points, thresholds })
    }
}

/// Precision-recall curve of `scores` thresholded at `scores >= t`.
///
/// Precision of an empty prediction is 1. The curve starts at a recall-0
/// anchor carrying the precision of the sparsest non-empty prediction.
pub fn precision_recall_curve(
    scores: &FloatMap,
    gt: &Mask,
    mode: ThresholdMode,
) -> Result<PRCurve, MetricError> {
    PrCurveBuilder::new(scores, mode).curve(gt)
}

/// One binary map per distinct nonzero level, ascending: foreground where
/// the multi-level map reaches the level. Maps are nested.
pub fn gt_level_binarize(gt: &MultiLevelGroundTruth) -> Vec<(f64, Mask)> {
    gt.levels
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| (l, gt.map.map(|&v| v >= l)))
        .collect()
}

/// Mean AuPRC over `(image, level)` pairs.
pub fn auprc_aggregate_gamma(values: &[f64]) -> Result<f64, MetricError> {
    mean(values)
}

/// Pairs up per-modality level AuPRCs of one image by descending level rank.
///
/// `per_modality[g]` lists modality `g`'s values in ascending level order.
/// Rows come back highest level first; lists longer than the shortest are
/// truncated, reported by the returned flag.
pub fn rank_aligned_rows(per_modality: &[&[f64]]) -> (Vec<Vec<f64>>, bool) {
    let Some(len) = per_modality.iter().map(|v| v.len()).min() else {
        return (Vec::new(), false);
    };
    let truncated = per_modality.iter().any(|v| v.len() != len);
    let rows = (0..len)
        .map(|rank| per_modality.iter().map(|v| v[v.len() - 1 - rank]).collect())
        .collect();
    (rows, truncated)
}

/// Mean over pairs of the best AuPRC across modalities.
pub fn auprc_combined(rows: &[Vec<f64>]) -> Result<f64, MetricError> {
    let best: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().copied().reduce(f64::max).ok_or(MetricError::MissingModality))
        .collect::<Result<_, _>>()?;
    mean(&best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Modality;
    use proptest::prelude::*;

    fn mask_from(bits: &[bool], w: usize, h: usize) -> Mask {
        Mask::from_vec(w, h, bits.to_vec()).unwrap()
    }

    #[test]
    fn perfect_detector_has_unit_area() {
        let gt = Mask::from_fn(8, 8, |x, y| x < 3 && y < 5);
        let s = gt.map(|&b| b as u8 as f64);
        for mode in [ThresholdMode::Uniform256, ThresholdMode::Exact] {
            let c = precision_recall_curve(&s, &gt, mode).unwrap();
            assert!(c.points.contains(&(1.0, 1.0)));
            assert_eq!(auprc(&c), 1.0);
            assert_eq!(c.points[0], (0.0, 1.0));
            assert_eq!(c.points.last().unwrap().0, 1.0);
        }
    }

    #[test]
    fn constant_map_area_is_positive_fraction() {
        let gt = Mask::from_fn(10, 10, |x, _| x < 3);
        let s = FloatMap::filled(10, 10, 0.5);
        for mode in [ThresholdMode::Uniform256, ThresholdMode::Exact] {
            let c = precision_recall_curve(&s, &gt, mode).unwrap();
            for (&(r, p), &t) in c.points.iter().zip(&c.thresholds).skip(1) {
                assert!(t <= 0.5);
                assert_eq!((r, p), (1.0, 0.3));
            }
            assert!((auprc(&c) - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn no_positives_is_error() {
        let gt = Mask::filled(3, 3, false);
        assert!(precision_recall_curve(&FloatMap::filled(3, 3, 0.2), &gt, ThresholdMode::Exact).is_err());
    }

    #[test]
    fn simple_curves() {
        let flat = PRCurve { points: vec![(0.0, 1.0), (1.0, 1.0)], thresholds: vec![1.0, 0.0] };
        assert_eq!(auprc(&flat), 1.0);
        let line = PRCurve { points: vec![(0.0, 1.0), (1.0, 0.0)], thresholds: vec![1.0, 0.0] };
        assert_eq!(auprc(&line), 0.5);
    }

    fn ml(map: FloatMap, levels: Vec<f64>) -> MultiLevelGroundTruth {
        MultiLevelGroundTruth {
            image_id: "img".into(),
            modality: Modality::EyeTracking,
            map,
            levels,
            objects: Vec::new(),
        }
    }

    #[test]
    fn three_levels_are_nested() {
        let map = FloatMap::from_fn(9, 1, |x, _| [0.3, 0.3, 0.0, 0.6, 0.6, 0.0, 0.9, 0.9, 0.0][x]);
        let maps = gt_level_binarize(&ml(map, vec![0.0, 0.3, 0.6, 0.9]));
        assert_eq!(maps.len(), 3);
        assert_eq!(maps[0].1.count(), 6);
        assert_eq!(maps[1].1.count(), 4);
        assert_eq!(maps[2].1.count(), 2);
        for w in maps.windows(2) {
            for (hi, lo) in w[1].1.as_slice().iter().zip(w[0].1.as_slice()) {
                assert!(!hi | lo);
            }
        }
    }

    #[test]
    fn duplicate_values_give_one_level() {
        let map = FloatMap::from_fn(4, 1, |x, _| if x < 3 { 0.5 } else { 0.0 });
        let maps = gt_level_binarize(&ml(map, vec![0.5]));
        assert_eq!(maps.len(), 1);
        assert_eq!(maps[0].1.count(), 3);
    }

    #[test]
    fn all_zero_levels_give_nothing() {
        let maps = gt_level_binarize(&ml(FloatMap::filled(2, 2, 0.0), vec![0.0]));
        assert!(maps.is_empty());
    }

    #[test]
    fn aggregates() {
        assert_eq!(auprc_aggregate_gamma(&[0.8]).unwrap(), 0.8);
        assert_eq!(auprc_aggregate_gamma(&[1.0, 0.5]).unwrap(), 0.75);
        assert!(auprc_aggregate_gamma(&[]).is_err());
        assert_eq!(auprc_combined(&[vec![0.2, 0.9, 0.5]]).unwrap(), 0.9);
        let same = [vec![0.4, 0.4, 0.4], vec![0.6, 0.6, 0.6]];
        assert_eq!(auprc_combined(&same).unwrap(), auprc_aggregate_gamma(&[0.4, 0.6]).unwrap());
    }

    #[test]
    fn rank_alignment_pairs_top_levels() {
        let et = [0.1, 0.2, 0.3];
        let pc = [0.7, 0.8];
        let (rows, truncated) = rank_aligned_rows(&[&et, &pc]);
        assert!(truncated);
        assert_eq!(rows, vec![vec![0.3, 0.8], vec![0.2, 0.7]]);
        let (rows, truncated) = rank_aligned_rows(&[&et, &et]);
        assert!(!truncated);
        assert_eq!(rows.len(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn curve_points_match_confusion_counts(
            vals in proptest::collection::vec(0u8..=8, 64),
            bits in proptest::collection::vec(any::<bool>(), 64),
        ) {
            prop_assume!(bits.iter().any(|&b| b));
            let s = FloatMap::from_vec(8, 8, vals.iter().map(|&v| f64::from(v) / 8.0).collect()).unwrap();
            let gt = mask_from(&bits, 8, 8);
            for mode in [ThresholdMode::Uniform256, ThresholdMode::Exact] {
                let c = precision_recall_curve(&s, &gt, mode).unwrap();
                prop_assert_eq!(c.points.len(), c.thresholds.len());
                for (&(r, p), &t) in c.points.iter().zip(&c.thresholds).skip(1) {
                    let (mut tp, mut fp, mut pos) = (0u32, 0u32, 0u32);
                    for i in 0..64 {
                        let pred = s.as_slice()[i] >= t;
                        tp += (pred && bits[i]) as u32;
                        fp += (pred && !bits[i]) as u32;
                        pos += bits[i] as u32;
                    }
                    prop_assert_eq!(r, f64::from(tp) / f64::from(pos));
                    prop_assert_eq!(p, f64::from(tp) / f64::from(tp + fp));
                }
                prop_assert!(c.points.windows(2).all(|w| w[0].0 <= w[1].0));
                prop_assert!(c.points.iter().all(|&(r, p)| (0.0..=1.0).contains(&r) && (0.0..=1.0).contains(&p)));
                prop_assert_eq!(c.points.last().unwrap().0, 1.0);
                let a = auprc(&c);
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }

        #[test]
        fn auprc_equals_resummation(raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..12)) {
            let mut rs: Vec<f64> = raw.iter().map(|p| p.0).collect();
            rs.sort_by(f64::total_cmp);
            let points: Vec<_> = rs.iter().zip(&raw).map(|(&r, &(_, p))| (r, p)).collect();
            let c = PRCurve { thresholds: vec![0.0; points.len()], points: points.clone() };
            let mut want = 0.0;
            for i in 1..points.len() {
                want += (points[i].0 - points[i - 1].0) * (points[i].1 + points[i - 1].1) / 2.0;
            }
            prop_assert!((auprc(&c) - want).abs() < 1e-12);
        }
    }
}
