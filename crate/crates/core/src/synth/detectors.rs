use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scene::{rng_for, Scene};
use crate::raster::FloatMap;

const STREAM_DETECTOR: u64 = 3;

/// Stand-in detectors producing saliency maps for synthetic scenes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// True object saliencies painted over their masks.
    Truth,
    /// `0.7·truth + 0.3·uniform noise`.
    Noisy,
    /// Gaussian bump at the image center, ignoring content.
    Center,
    /// 0.5 everywhere.
    Constant,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [
        DetectorKind::Truth,
        DetectorKind::Noisy,
        DetectorKind::Center,
        DetectorKind::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Truth => "truth",
            DetectorKind::Noisy => "noisy",
            DetectorKind::Center => "center",
            DetectorKind::Constant => "constant",
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DetectorKind::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown detector `{s}` (truth|noisy|center|constant)"))
    }
}

pub fn detector_map(scene: &Scene, kind: DetectorKind) -> FloatMap {
    let (w, h) = (scene.spec.width, scene.spec.height);
    let truth = || {
        let mut map = FloatMap::filled(w, h, 0.0);
        for (m, &s) in scene.masks.iter().zip(&scene.saliencies) {
            for (v, &on) in map.as_mut_slice().iter_mut().zip(m.mask.as_slice()) {
                if on && s > *v {
                    *v = s;
                }
            }
        }
        map
    };
    match kind {
        DetectorKind::Truth => truth(),
        DetectorKind::Noisy => {
            let mut rng = rng_for(scene.spec.seed, STREAM_DETECTOR);
            truth().map(|&v| 0.7 * v + 0.3 * rng.random::<f64>())
        }
        DetectorKind::Center => {
            let sigma = 0.3 * w.min(h) as f64;
            let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
            FloatMap::from_fn(w, h, |x, y| {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
            })
        }
        DetectorKind::Constant => FloatMap::filled(w, h, 0.5),
    }
}

/// 16-bit quantization used when maps are written to disk.
pub fn quantize16(map: &FloatMap) -> Vec<u16> {
    map.as_slice()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect()
}
