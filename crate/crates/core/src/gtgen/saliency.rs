use serde::{Deserialize, Serialize};

use super::{DensityMap, GtError};
use crate::data::{Events, Modality, ObjectMask, Rect, SubjectRecord};
use crate::raster::FloatMap;

/// Default minimum IoU for a drawn rectangle to credit an object.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.3;

/// Per-object saliency from each modality; `None` when the modality has
/// no subjects for the object's image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSaliency {
    pub object_id: String,
    pub s_et: Option<f64>,
    pub s_pc: Option<f64>,
    pub s_rd: Option<f64>,
}

impl ObjectSaliency {
    pub fn new(object_id: impl Into<String>) -> Self {
        Self {
            object_id: object_id.into(),
            s_et: None,
            s_pc: None,
            s_rd: None,
        }
    }

    pub fn get(&self, modality: Modality) -> Option<f64> {
        match modality {
            Modality::EyeTracking => self.s_et,
            Modality::PointClick => self.s_pc,
            Modality::RectDraw => self.s_rd,
        }
    }

    pub fn set(&mut self, modality: Modality, value: Option<f64>) {
        match modality {
            Modality::EyeTracking => self.s_et = value,
            Modality::PointClick => self.s_pc = value,
            Modality::RectDraw => self.s_rd = value,
        }
    }
}

/// Largest value of `values` over the foreground of `mask`.
pub(crate) fn max_within_mask(values: &FloatMap, mask: &ObjectMask) -> f64 {
    let r = mask.tight_rect;
    let mut best = 0.0_f64;
    for y in r.y0..r.y1 {
        let vals = &values.row(y)[r.x0..r.x1];
        let inside = &mask.mask.row(y)[r.x0..r.x1];
        for (v, &m) in vals.iter().zip(inside) {
            if m && *v > best {
                best = *v;
            }
        }
    }
    best
}

/// Mean over subjects of each subject's peak density inside the mask.
///
/// `maps` holds one map per viewer of the image, zero maps included; the
/// sum runs in the given order.
pub fn eye_tracking_saliency(maps: &[DensityMap], mask: &ObjectMask) -> Result<f64, GtError> {
    if maps.is_empty() {
        return Err(GtError::EmptySubjectList(Modality::EyeTracking));
    }
    let total = maps
        .iter()
        .fold(0.0, |acc, m| acc + max_within_mask(&m.values, mask));
    Ok(total / maps.len() as f64)
}

fn ensure_modality(records: &[&SubjectRecord], modality: Modality) -> Result<(), GtError> {
    match records.iter().find(|r| r.modality() != modality) {
        Some(r) => Err(GtError::WrongModality {
            subject_id: r.subject_id.clone(),
            expected: modality,
        }),
        None => Ok(()),
    }
}

/// Fraction of subjects with at least one click inside the mask.
pub fn point_click_saliency(records: &[&SubjectRecord], mask: &ObjectMask) -> Result<f64, GtError> {
    if records.is_empty() {
        return Err(GtError::EmptySubjectList(Modality::PointClick));
    }
    ensure_modality(records, Modality::PointClick)?;
    let hits = records
        .iter()
        .filter(|r| match &r.events {
            Events::Clicks(clicks) => clicks.iter().any(|c| mask.contains(c.x, c.y)),
            _ => false,
        })
        .count();
    Ok(hits as f64 / records.len() as f64)
}

/// Intersection-over-union of two pixel rectangles.
pub fn rect_iou(a: &Rect, b: &Rect) -> f64 {
    let inter = a.intersection(b).map_or(0, |r| r.area());
    let union = a.area() + b.area() - inter;
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

/// Fraction of subjects who drew at least one rectangle with
/// `IoU(r, tight_rect) >= iou_threshold`.
pub fn rect_draw_saliency(
    records: &[&SubjectRecord],
    tight_rect: &Rect,
    iou_threshold: f64,
) -> Result<f64, GtError> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(GtError::InvalidThreshold(iou_threshold));
    }
    if records.is_empty() {
        return Err(GtError::EmptySubjectList(Modality::RectDraw));
    }
    ensure_modality(records, Modality::RectDraw)?;
    let hits = records
        .iter()
        .filter(|r| match &r.events {
            Events::Rects(rects) => rects
                .iter()
                .any(|r| rect_iou(r, tight_rect) >= iou_threshold),
            _ => false,
        })
        .count();
    Ok(hits as f64 / records.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ClickPoint;
    use crate::raster::Mask;
    use proptest::prelude::*;

    fn square_mask(w: usize, h: usize, r: Rect) -> ObjectMask {
        let m = Mask::from_fn(w, h, |x, y| r.contains(x, y));
        ObjectMask::new("o", "img", m).unwrap()
    }

    fn clicks(id: &str, pts: &[(usize, usize)]) -> SubjectRecord {
        SubjectRecord {
            subject_id: id.into(),
            image_id: "img".into(),
            events: Events::Clicks(pts.iter().map(|&(x, y)| ClickPoint { x, y }).collect()),
        }
    }

    fn rects(id: &str, rs: &[Rect]) -> SubjectRecord {
        SubjectRecord {
            subject_id: id.into(),
            image_id: "img".into(),
            events: Events::Rects(rs.to_vec()),
        }
    }

    fn dmap(values: FloatMap) -> DensityMap {
        DensityMap {
            image_id: "img".into(),
            subject_id: "s".into(),
            values,
        }
    }

    #[test]
    fn single_subject_peak_inside_mask() {
        let mask = square_mask(10, 10, Rect::new(2, 2, 5, 5));
        let mut v = FloatMap::filled(10, 10, 0.1);
        v.set(3, 4, 0.62);
        v.set(8, 8, 1.0);
        assert_eq!(eye_tracking_saliency(&[dmap(v)], &mask).unwrap(), 0.62);
    }

    #[test]
    fn zero_maps_contribute_zero() {
        let mask = square_mask(6, 6, Rect::new(0, 0, 3, 3));
        let zeros = vec![dmap(FloatMap::filled(6, 6, 0.0)); 3];
        assert_eq!(eye_tracking_saliency(&zeros, &mask).unwrap(), 0.0);
        assert!(eye_tracking_saliency(&[], &mask).is_err());
    }

    #[test]
    fn enlarging_mask_never_lowers_eye_tracking_saliency() {
        let small = square_mask(12, 12, Rect::new(4, 4, 6, 6));
        let big = square_mask(12, 12, Rect::new(2, 2, 9, 9));
        let maps: Vec<_> = (0..4)
            .map(|k| dmap(FloatMap::from_fn(12, 12, |x, y| ((x * 7 + y * 3 + k) % 11) as f64 / 10.0)))
            .collect();
        let a = eye_tracking_saliency(&maps, &small).unwrap();
        let b = eye_tracking_saliency(&maps, &big).unwrap();
        assert!(b >= a);
    }

    #[test]
    fn twenty_three_of_thirty_clicks() {
        let mask = square_mask(20, 20, Rect::new(5, 5, 10, 10));
        let recs: Vec<_> = (0..30)
            .map(|i| {
                let id = format!("s{i:02}");
                if i < 23 {
                    // repeated clicks inside still count once
                    clicks(&id, &[(6, 6), (7, 7), (15, 15)])
                } else {
                    clicks(&id, &[(15, 15)])
                }
            })
            .collect();
        let refs: Vec<_> = recs.iter().collect();
        assert_eq!(point_click_saliency(&refs, &mask).unwrap(), 23.0 / 30.0);
    }

    #[test]
    fn click_extremes() {
        let mask = square_mask(8, 8, Rect::new(0, 0, 2, 2));
        let none = [clicks("a", &[(5, 5)]), clicks("b", &[])];
        let all = [clicks("a", &[(1, 1)]), clicks("b", &[(0, 0)])];
        assert_eq!(point_click_saliency(&none.iter().collect::<Vec<_>>(), &mask).unwrap(), 0.0);
        assert_eq!(point_click_saliency(&all.iter().collect::<Vec<_>>(), &mask).unwrap(), 1.0);
        assert!(point_click_saliency(&[], &mask).is_err());
        let wrong = [rects("a", &[])];
        assert!(point_click_saliency(&wrong.iter().collect::<Vec<_>>(), &mask).is_err());
    }

    #[test]
    fn iou_cases() {
        let a = Rect::new(0, 0, 10, 10);
        assert_eq!(rect_iou(&a, &a), 1.0);
        assert_eq!(rect_iou(&a, &Rect::new(10, 0, 20, 10)), 0.0);
        assert_eq!(rect_iou(&a, &Rect::new(5, 0, 15, 10)), 50.0 / 150.0);
    }

    #[test]
    fn twenty_seven_of_thirty_five_rectangles() {
        let tight = Rect::new(10, 10, 30, 30);
        let recs: Vec<_> = (0..35)
            .map(|i| {
                let id = format!("s{i:02}");
                if i < 27 {
                    // IoU 200/400 = 0.5 and a second matching rect
                    rects(&id, &[Rect::new(10, 10, 30, 20), tight])
                } else {
                    // IoU 100/700 < 0.3
                    rects(&id, &[Rect::new(20, 20, 50, 30)])
                }
            })
            .collect();
        let refs: Vec<_> = recs.iter().collect();
        assert_eq!(rect_draw_saliency(&refs, &tight, 0.3).unwrap(), 27.0 / 35.0);
    }

    #[test]
    fn threshold_is_inclusive() {
        // IoU exactly 0.3: 30 / 100
        let tight = Rect::new(0, 0, 10, 10);
        let r = Rect::new(0, 0, 3, 10);
        assert_eq!(rect_iou(&r, &tight), 0.3);
        let recs = [rects("a", &[r])];
        assert_eq!(rect_draw_saliency(&recs.iter().collect::<Vec<_>>(), &tight, 0.3).unwrap(), 1.0);
        assert!(rect_draw_saliency(&recs.iter().collect::<Vec<_>>(), &tight, 0.0).is_err());
    }

    fn arb_rect(w: usize, h: usize) -> impl Strategy<Value = Rect> {
        (0..w, 0..h, 1..w, 1..h).prop_map(move |(x, y, dw, dh)| {
            Rect::new(x, y, (x + dw).min(w).max(x + 1), (y + dh).min(h).max(y + 1))
        })
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_rect(30, 30), b in arb_rect(30, 30)) {
            let v = rect_iou(&a, &b);
            prop_assert_eq!(v, rect_iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v == 1.0, a == b);
            prop_assert_eq!(v == 0.0, a.intersection(&b).is_none());
        }

        #[test]
        fn rect_saliency_matches_brute_force(
            tight in arb_rect(25, 25),
            subjects in proptest::collection::vec(proptest::collection::vec(arb_rect(25, 25), 0..4), 1..8),
        ) {
            let recs: Vec<_> = subjects.iter().enumerate()
                .map(|(i, rs)| rects(&i.to_string(), rs)).collect();
            let refs: Vec<_> = recs.iter().collect();
            // pixel-counting IoU
            let area_iou = |a: &Rect, b: &Rect| {
                let (mut i, mut u) = (0usize, 0usize);
                for y in 0..25 { for x in 0..25 {
                    let (pa, pb) = (a.contains(x, y), b.contains(x, y));
                    i += (pa && pb) as usize;
                    u += (pa || pb) as usize;
                }}
                i as f64 / u as f64
            };
            let hits = subjects.iter().filter(|rs| rs.iter().any(|r| area_iou(r, &tight) >= 0.3)).count();
            prop_assert_eq!(rect_draw_saliency(&refs, &tight, 0.3).unwrap(), hits as f64 / subjects.len() as f64);
        }

        #[test]
        fn click_saliency_matches_brute_force(
            bits in proptest::collection::vec(any::<bool>(), 16 * 16),
            subjects in proptest::collection::vec(proptest::collection::vec((0usize..16, 0usize..16), 0..5), 1..10),
        ) {
            let raw = Mask::from_fn(16, 16, |x, y| bits[y * 16 + x]);
            prop_assume!(raw.count() > 0);
            let mask = ObjectMask::new("o", "img", raw.clone()).unwrap();
            let recs: Vec<_> = subjects.iter().enumerate().map(|(i, p)| clicks(&i.to_string(), p)).collect();
            let refs: Vec<_> = recs.iter().collect();
            let hits = subjects.iter().filter(|p| p.iter().any(|&(x, y)| *raw.get(x, y))).count();
            prop_assert_eq!(point_click_saliency(&refs, &mask).unwrap(), hits as f64 / subjects.len() as f64);
        }

        #[test]
        fn eye_tracking_matches_exhaustive_scan(
            bits in proptest::collection::vec(any::<bool>(), 12 * 12),
            vals in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 12 * 12), 5),
        ) {
            let raw = Mask::from_fn(12, 12, |x, y| bits[y * 12 + x]);
            prop_assume!(raw.count() > 0);
            let mask = ObjectMask::new("o", "img", raw.clone()).unwrap();
            let maps: Vec<_> = vals.iter().map(|v| dmap(FloatMap::from_vec(12, 12, v.clone()).unwrap())).collect();
            let mut total = 0.0;
            for v in &vals {
                let mut best = 0.0f64;
                for i in 0..144 { if bits[i] { best = best.max(v[i]); } }
                total += best;
            }
            let want = total / 5.0;
            prop_assert!((eye_tracking_saliency(&maps, &mask).unwrap() - want).abs() < 1e-15);
        }
    }
}
