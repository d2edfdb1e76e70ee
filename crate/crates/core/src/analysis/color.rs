//! CIE L*a*b* conversion, fixed-range Lab histograms and the statistics
//! built on them.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::raster::{Mask, Raster};

pub type RgbImage = Raster<[u8; 3]>;

pub const DEFAULT_BINS: usize = 8;

const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

fn srgb_linear(c: u8) -> f64 {
    static TABLE: OnceLock<[f64; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        std::array::from_fn(|i| {
            let c = i as f64 / 255.0;
            if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            }
        })
    })[c as usize]
}

fn lab_f(t: f64) -> f64 {
    const D: f64 = 6.0 / 29.0;
    if t > D * D * D {
        t.cbrt()
    } else {
        t / (3.0 * D * D) + 4.0 / 29.0
    }
}

/// sRGB (D65) to L*a*b*.
pub fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(srgb_linear);
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let (fx, fy, fz) = (lab_f(x / WHITE[0]), lab_f(y / WHITE[1]), lab_f(z / WHITE[2]));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Counts over a `bins³` grid covering L ∈ [0, 100], a, b ∈ [−128, 128).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabHistogram {
    pub bins: usize,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl LabHistogram {
    pub fn new(bins: usize) -> Result<Self, AnalysisError> {
        if bins == 0 || bins > 64 {
            return Err(AnalysisError::InvalidBins(bins));
        }
        Ok(Self {
            bins,
            counts: vec![0; bins * bins * bins],
            total: 0,
        })
    }

    pub fn bin_index(&self, lab: [f64; 3]) -> usize {
        let n = self.bins;
        let q = |v: f64, lo: f64, span: f64| -> usize {
            let i = ((v - lo) / span * n as f64).floor();
            if i <= 0.0 {
                0
            } else {
                (i as usize).min(n - 1)
            }
        };
        let l = q(lab[0], 0.0, 100.0);
        let a = q(lab[1], -128.0, 256.0);
        let b = q(lab[2], -128.0, 256.0);
        (l * n + a) * n + b
    }

    /// Center of bin `index` in Lab.
    pub fn bin_center(&self, index: usize) -> [f64; 3] {
        let n = self.bins;
        let (l, a, b) = (index / (n * n), (index / n) % n, index % n);
        let c = |i: usize, lo: f64, span: f64| lo + (i as f64 + 0.5) * span / n as f64;
        [c(l, 0.0, 100.0), c(a, -128.0, 256.0), c(b, -128.0, 256.0)]
    }

    pub fn add_lab(&mut self, lab: [f64; 3]) {
        let i = self.bin_index(lab);
        self.add_bin(i, 1);
    }

    pub fn add_bin(&mut self, index: usize, n: u64) {
        self.counts[index] += n;
        self.total += n;
    }

    /// Histogram of the pixels of `image` under `mask`.
    pub fn from_masked(image: &RgbImage, mask: &Mask, bins: usize) -> Result<Self, AnalysisError> {
        check_dims(image, mask)?;
        let mut h = Self::new(bins)?;
        for (px, &m) in image.as_slice().iter().zip(mask.as_slice()) {
            if m {
                h.add_lab(srgb_to_lab(*px));
            }
        }
        Ok(h)
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        let t = self.total as f64;
        self.counts.iter().map(move |&c| c as f64 / t)
    }
}

pub(crate) fn check_dims(image: &RgbImage, mask: &Mask) -> Result<(), AnalysisError> {
    if image.dims() != mask.dims() {
        return Err(AnalysisError::DimensionMismatch {
            expected: image.dims(),
            found: mask.dims(),
        });
    }
    Ok(())
}

/// Shannon entropy in bits of a histogram's normalized counts.
pub fn histogram_entropy(h: &LabHistogram) -> Result<f64, AnalysisError> {
    if h.total == 0 {
        return Err(AnalysisError::EmptyHistogram);
    }
    Ok(h.probabilities()
        .filter(|&p| p > 0.0)
        .fold(0.0, |acc, p| acc - p * p.log2()))
}

pub fn color_entropy(image: &RgbImage, mask: &Mask, bins: usize) -> Result<f64, AnalysisError> {
    let h = LabHistogram::from_masked(image, mask, bins)?;
    if h.total == 0 {
        return Err(AnalysisError::EmptyMask);
    }
    histogram_entropy(&h)
}

/// Componentwise Lab mean over the mask.
pub fn mean_color(image: &RgbImage, mask: &Mask) -> Result<[f64; 3], AnalysisError> {
    check_dims(image, mask)?;
    mean_lab(
        image
            .as_slice()
            .iter()
            .zip(mask.as_slice())
            .filter(|(_, &m)| m)
            .map(|(px, _)| srgb_to_lab(*px)),
    )
}

pub(crate) fn mean_lab(values: impl Iterator<Item = [f64; 3]>) -> Result<[f64; 3], AnalysisError> {
    let mut sum = [0.0; 3];
    let mut n = 0usize;
    for v in values {
        for k in 0..3 {
            sum[k] += v[k];
        }
        n += 1;
    }
    if n == 0 {
        return Err(AnalysisError::EmptyMask);
    }
    Ok(sum.map(|s| s / n as f64))
}

/// χ² distance between normalized histograms, in `[0, 1]`.
pub fn chi2_contrast(h1: &LabHistogram, h2: &LabHistogram) -> Result<f64, AnalysisError> {
    const EPS: f64 = 1e-12;
    if h1.total == 0 || h2.total == 0 {
        return Err(AnalysisError::EmptyHistogram);
    }
    if h1.bins != h2.bins {
        return Err(AnalysisError::InvalidBins(h2.bins));
    }
    let sum = h1
        .probabilities()
        .zip(h2.probabilities())
        .fold(0.0, |acc, (p, q)| {
            let d = p - q;
            acc + d * d / (p + q + EPS)
        });
    Ok(0.5 * sum)
}
