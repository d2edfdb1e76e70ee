//! Synthetic scenes with known object saliencies, simulated subjects, and
//! brute-force oracles for the metrics.

mod detectors;
mod oracle;
mod scene;

use std::fs;
use std::path::{Path, PathBuf};

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use detectors::{detector_map, quantize16, DetectorKind};
pub use oracle::{oracle_auprc_exact, oracle_tau_bruteforce, OracleResult, TauMode};
pub use scene::{
    generate_scene, random_scene_spec, simulate_subjects, NoiseSpec, ObjectSpec, Scene, SceneParams,
    SceneSpec, Shape,
};

use crate::data::{write_dataset, Dataset, ImageRecord, SubjectRecord};
use crate::exec::Execution;
use crate::gtgen::ViewingGeometry;
use crate::io::{write_json_atomic, write_png, IoError, PngPixels, Provenance};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("could not place object {object} in `{image_id}`")]
    Unplaceable { image_id: String, object: usize },
    #[error("could not draw a saliency for object {object} in `{image_id}` respecting the minimum gap")]
    SaliencyGap { image_id: String, object: usize },
}

/// A scene together with its simulated subject records.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub scene: Scene,
    pub records: Vec<SubjectRecord>,
}

/// Per-scene seeds drawn from one batch seed.
pub fn scene_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = scene::rng_for(seed, 0);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Draws, renders and simulates `count` scenes named `img0000`, `img0001`, ….
pub fn generate_batch(
    seed: u64,
    count: usize,
    params: &SceneParams,
    exec: Execution,
) -> Result<Vec<SyntheticScene>, SynthError> {
    let seeds = scene_seeds(seed, count);
    let ids: Vec<(String, u64)> = seeds
        .into_iter()
        .enumerate()
        .map(|(i, s)| (format!("img{i:04}"), s))
        .collect();
    exec.map(&ids, |(id, s)| {
        let spec = random_scene_spec(id, *s, params)?;
        let scene = generate_scene(&spec)?;
        let records = simulate_subjects(&scene.saliencies, &scene.masks, &spec);
        Ok(SyntheticScene { scene, records })
    })
    .into_iter()
    .collect()
}

/// In-memory dataset of the scenes; image paths are `images/<id>.png`.
pub fn to_dataset(scenes: &[SyntheticScene], root: &Path, geometry: ViewingGeometry) -> Dataset {
    let mut ds = Dataset {
        root: root.to_path_buf(),
        images: scenes
            .iter()
            .map(|s| ImageRecord {
                image_id: s.scene.spec.image_id.clone(),
                width: s.scene.spec.width,
                height: s.scene.spec.height,
                path: image_rel_path(&s.scene.spec.image_id),
            })
            .collect(),
        masks: scenes.iter().flat_map(|s| s.scene.masks.iter().cloned()).collect(),
        subject_records: scenes.iter().flat_map(|s| s.records.iter().cloned()).collect(),
        viewing_geometry: geometry,
        warnings: Vec::new(),
    };
    ds.canonicalize();
    ds
}

fn image_rel_path(image_id: &str) -> PathBuf {
    PathBuf::from("images").join(format!("{image_id}.png"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthObject {
    pub image_id: String,
    pub object_id: String,
    pub saliency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub provenance: Provenance,
    pub specs: Vec<SceneSpec>,
    pub objects: Vec<TruthObject>,
}

pub const TRUTH_FILE: &str = "truth.json";

/// Writes images, masks, events, `manifest.json` and `truth.json` under
/// `dir`. Returns the manifest path.
pub fn write_synthetic(
    scenes: &[SyntheticScene],
    dir: &Path,
    geometry: ViewingGeometry,
    provenance: &Provenance,
    exec: Execution,
) -> Result<PathBuf, IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    exec.map(scenes, |s| {
        let img = &s.scene.image;
        let bytes: Vec<u8> = img.as_slice().iter().flatten().copied().collect();
        write_png(
            &dir.join(image_rel_path(&s.scene.spec.image_id)),
            img.width(),
            img.height(),
            PngPixels::Rgb8(&bytes),
            provenance,
        )
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let ds = to_dataset(scenes, dir, geometry);
    let manifest = write_dataset(&ds, dir, provenance)?;
    let truth = Truth {
        provenance: provenance.clone(),
        specs: scenes.iter().map(|s| s.scene.spec.clone()).collect(),
        objects: scenes
            .iter()
            .flat_map(|s| {
                s.scene.masks.iter().zip(&s.scene.saliencies).map(|(m, &v)| TruthObject {
                    image_id: m.image_id.clone(),
                    object_id: m.object_id.clone(),
                    saliency: v,
                })
            })
            .collect(),
    };
    write_json_atomic(&dir.join(TRUTH_FILE), &truth)?;
    Ok(manifest)
}

/// Writes `<dir>/<image_id>.png` 16-bit maps of one stand-in detector.
pub fn write_detector_maps(
    scenes: &[SyntheticScene],
    kind: DetectorKind,
    dir: &Path,
    provenance: &Provenance,
    exec: Execution,
) -> Result<(), IoError> {
    exec.map(scenes, |s| {
        let map = detector_map(&s.scene, kind);
        write_png(
            &dir.join(format!("{}.png", s.scene.spec.image_id)),
            map.width(),
            map.height(),
            PngPixels::Gray16(&quantize16(&map)),
            provenance,
        )
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtgen::SubjectCounts;

    #[test]
    fn batch_object_counts_cover_range() {
        let params = SceneParams {
            width: 96,
            height: 64,
            objects_min: 1,
            objects_max: 4,
            subjects: SubjectCounts::default(),
            ..SceneParams::default()
        };
        let batch = generate_batch(11, 100, &params, Execution::Parallel).unwrap();
        let mut hist = [0usize; 5];
        for s in &batch {
            hist[s.scene.masks.len()] += 1;
        }
        assert_eq!(hist[0], 0);
        // uniform over 1..=4: 25 expected each, 3σ ≈ 13
        for &h in &hist[1..] {
            assert!((12..=38).contains(&h), "{hist:?}");
        }
        assert_eq!(batch, generate_batch(11, 100, &params, Execution::Sequential).unwrap());
    }
}
