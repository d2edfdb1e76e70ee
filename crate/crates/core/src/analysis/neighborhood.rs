use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::data::ObjectMask;
use crate::raster::Mask;

/// Local ring and global background of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodMasks {
    pub local: Mask,
    pub global: Mask,
}

/// Local ring width: a fixed number of pixels, or scaled with the object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RingRadius {
    /// `max(5, round(0.1·√area))`.
    #[default]
    Auto,
    Pixels(usize),
}

impl RingRadius {
    pub fn resolve(self, area: usize) -> usize {
        match self {
            RingRadius::Auto => ((0.1 * (area as f64).sqrt()).round() as usize).max(5),
            RingRadius::Pixels(p) => p,
        }
    }
}

impl std::fmt::Display for RingRadius {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RingRadius::Auto => f.write_str("auto"),
            RingRadius::Pixels(p) => write!(f, "{p}"),
        }
    }
}

impl std::str::FromStr for RingRadius {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(RingRadius::Auto);
        }
        s.parse()
            .map(RingRadius::Pixels)
            .map_err(|_| format!("ring must be `auto` or a pixel count, got `{s}`"))
    }
}

impl Serialize for RingRadius {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RingRadius {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Squared Euclidean distance transform of a sampled function (lower
/// envelope of parabolas), in place.
fn edt_1d(f: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>, out: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    out.clear();
    let finite: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if finite.is_empty() {
        return;
    }
    for &q in &finite {
        let qf = q as f64;
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let pf = p as f64;
            let s = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf));
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    let mut k = 0;
    for q in 0..n {
        let qf = q as f64;
        while k + 1 < v.len() && z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        out.push(d * d + f[v[k]]);
    }
    f.copy_from_slice(out);
}

/// Pixels within Euclidean distance `radius` of the mask foreground.
pub fn dilate(mask: &ObjectMask, radius: usize) -> Mask {
    let (w, h) = mask.mask.dims();
    let r = mask.tight_rect;
    let x0 = r.x0.saturating_sub(radius);
    let y0 = r.y0.saturating_sub(radius);
    let x1 = (r.x1 + radius).min(w);
    let y1 = (r.y1 + radius).min(h);
    let (bw, bh) = (x1 - x0, y1 - y0);
    let mut d: Vec<f64> = (0..bw * bh)
        .map(|i| {
            if *mask.mask.get(x0 + i % bw, y0 + i / bw) {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let (mut v, mut z, mut out) = (Vec::new(), Vec::new(), Vec::new());
    let mut col = vec![0.0; bh];
    for x in 0..bw {
        for y in 0..bh {
            col[y] = d[y * bw + x];
        }
        edt_1d(&mut col, &mut v, &mut z, &mut out);
        for y in 0..bh {
            d[y * bw + x] = col[y];
        }
    }
    for row in d.chunks_mut(bw) {
        edt_1d(row, &mut v, &mut z, &mut out);
    }
    let r2 = (radius * radius) as f64;
    let mut dil = Mask::filled(w, h, false);
    for y in 0..bh {
        for x in 0..bw {
            if d[y * bw + x] <= r2 {
                dil.set(x0 + x, y0 + y, true);
            }
        }
    }
    dil
}

/// Local ring (dilation minus every object) and global background (image
/// minus the object, and minus the other objects when `exclude_others`).
pub fn neighborhood_masks(
    mask: &ObjectMask,
    others: &[&ObjectMask],
    ring_radius: usize,
    exclude_others: bool,
) -> Result<NeighborhoodMasks, AnalysisError> {
    let dims = mask.mask.dims();
    let mut occupied = mask.mask.clone();
    for o in others {
        if o.mask.dims() != dims {
            return Err(AnalysisError::DimensionMismatch {
                expected: dims,
                found: o.mask.dims(),
            });
        }
        for (a, &b) in occupied.as_mut_slice().iter_mut().zip(o.mask.as_slice()) {
            *a |= b;
        }
    }
    let mut local = dilate(mask, ring_radius);
    for (l, &o) in local.as_mut_slice().iter_mut().zip(occupied.as_slice()) {
        *l &= !o;
    }
    let excluded = if exclude_others { &occupied } else { &mask.mask };
    let global = excluded.map(|&b| !b);
    Ok(NeighborhoodMasks { local, global })
}
