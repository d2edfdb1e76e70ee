use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::data::ObjectMask;

/// Size and position of one object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectGeometry {
    /// Centroid distance to the image center over the image diagonal.
    pub norm_center_dist: f64,
    pub width_norm: f64,
    pub height_norm: f64,
    pub area_norm: f64,
    pub aspect_ratio: f64,
}

/// Largest tight-rect width and height and largest area over a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMaxima {
    pub width: usize,
    pub height: usize,
    pub area: usize,
}

impl DatasetMaxima {
    pub fn of<'a>(masks: impl IntoIterator<Item = &'a ObjectMask>) -> Option<Self> {
        masks.into_iter().fold(None, |acc, m| {
            let r = m.tight_rect;
            let here = DatasetMaxima {
                width: r.width(),
                height: r.height(),
                area: m.area(),
            };
            Some(match acc {
                None => here,
                Some(a) => DatasetMaxima {
                    width: a.width.max(here.width),
                    height: a.height.max(here.height),
                    area: a.area.max(here.area),
                },
            })
        })
    }
}

pub fn geometry_stats(mask: &ObjectMask, maxima: &DatasetMaxima) -> Result<ObjectGeometry, AnalysisError> {
    let (w, h) = mask.mask.dims();
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    let r = mask.tight_rect;
    for y in r.y0..r.y1 {
        for (i, &m) in mask.mask.row(y)[r.x0..r.x1].iter().enumerate() {
            if m {
                sx += (r.x0 + i) as f64 + 0.5;
                sy += y as f64 + 0.5;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(AnalysisError::EmptyMask);
    }
    if maxima.width < r.width() || maxima.height < r.height() || maxima.area < n {
        return Err(AnalysisError::MaximaTooSmall);
    }
    let (cx, cy) = (sx / n as f64, sy / n as f64);
    let (w, h) = (w as f64, h as f64);
    let dist = (cx - w / 2.0).hypot(cy - h / 2.0);
    Ok(ObjectGeometry {
        norm_center_dist: dist / w.hypot(h),
        width_norm: r.width() as f64 / maxima.width as f64,
        height_norm: r.height() as f64 / maxima.height as f64,
        area_norm: n as f64 / maxima.area as f64,
        aspect_ratio: r.width() as f64 / r.height() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Rect;
    use crate::raster::Mask;
    use proptest::prelude::*;

    fn rect_mask(w: usize, h: usize, r: Rect) -> ObjectMask {
        ObjectMask::new("o", "img", Mask::from_fn(w, h, |x, y| r.contains(x, y))).unwrap()
    }

    #[test]
    fn centered_square() {
        let m = rect_mask(10, 10, Rect::new(3, 3, 7, 7));
        let max = DatasetMaxima::of([&m]).unwrap();
        let g = geometry_stats(&m, &max).unwrap();
        assert_eq!(g.norm_center_dist, 0.0);
        assert_eq!((g.width_norm, g.height_norm, g.area_norm, g.aspect_ratio), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn largest_area_normalizes_to_one() {
        let big = rect_mask(20, 10, Rect::new(0, 0, 12, 5));
        let small = rect_mask(20, 10, Rect::new(0, 6, 3, 10));
        let max = DatasetMaxima::of([&big, &small]).unwrap();
        assert_eq!(geometry_stats(&big, &max).unwrap().area_norm, 1.0);
        let s = geometry_stats(&small, &max).unwrap();
        assert_eq!(s.area_norm, 12.0 / 60.0);
        assert_eq!(s.aspect_ratio, 0.75);
    }

    #[test]
    fn distance_grows_along_diagonal() {
        let mut last = -1.0;
        for k in 0..5 {
            let m = rect_mask(20, 20, Rect::new(8 + k, 8 + k, 12 + k, 12 + k));
            let d = geometry_stats(&m, &DatasetMaxima::of([&m]).unwrap()).unwrap().norm_center_dist;
            assert!(d > last);
            last = d;
        }
    }

    proptest! {
        #[test]
        fn matches_direct_scan(bits in proptest::collection::vec(any::<bool>(), 12 * 9)) {
            let raw = Mask::from_fn(12, 9, |x, y| bits[y * 12 + x]);
            prop_assume!(raw.count() > 0);
            let m = ObjectMask::new("o", "img", raw).unwrap();
            let max = DatasetMaxima { width: 12, height: 9, area: 108 };
            let g = geometry_stats(&m, &max).unwrap();
            let pts: Vec<(usize, usize)> = (0..108).filter(|&i| bits[i]).map(|i| (i % 12, i / 12)).collect();
            let n = pts.len() as f64;
            let cx = pts.iter().map(|p| p.0 as f64 + 0.5).sum::<f64>() / n;
            let cy = pts.iter().map(|p| p.1 as f64 + 0.5).sum::<f64>() / n;
            let d = ((cx - 6.0).powi(2) + (cy - 4.5).powi(2)).sqrt() / (144.0f64 + 81.0).sqrt();
            let bw = pts.iter().map(|p| p.0).max().unwrap() - pts.iter().map(|p| p.0).min().unwrap() + 1;
            let bh = pts.iter().map(|p| p.1).max().unwrap() - pts.iter().map(|p| p.1).min().unwrap() + 1;
            prop_assert!((g.norm_center_dist - d).abs() < 1e-12);
            prop_assert!(g.norm_center_dist <= 0.5 * 2f64.sqrt());
            prop_assert_eq!(g.width_norm, bw as f64 / 12.0);
            prop_assert_eq!(g.height_norm, bh as f64 / 9.0);
            prop_assert_eq!(g.area_norm, n / 108.0);
            prop_assert_eq!(g.aspect_ratio, bw as f64 / bh as f64);
        }
    }
}
