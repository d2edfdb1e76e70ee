use std::path::{Path, PathBuf};

use super::load::{columns_for, Manifest, ManifestEvents, ManifestImage, ManifestMask};
use super::{Dataset, Events, Modality};
use crate::io::{write_atomic, write_json_atomic, write_png, IoError, PngPixels, Provenance};

/// Writes `ds` as a manifest plus mask PNGs and event CSVs under `dir`.
///
/// Image files are referenced by their existing relative paths and are not
/// copied. Returns the manifest path.
pub fn write_dataset(ds: &Dataset, dir: &Path, provenance: &Provenance) -> Result<PathBuf, IoError> {
    let mut manifest = Manifest {
        images: ds
            .images
            .iter()
            .map(|i| ManifestImage {
                id: i.image_id.clone(),
                width: i.width,
                height: i.height,
                path: i.path.clone(),
            })
            .collect(),
        masks: Vec::with_capacity(ds.masks.len()),
        events: ManifestEvents::default(),
        viewing_geometry: ds.viewing_geometry,
        provenance: Some(provenance.clone()),
    };

    for m in &ds.masks {
        let rel = PathBuf::from("masks").join(format!("{}.png", m.object_id));
        let bytes: Vec<u8> = m
            .mask
            .as_slice()
            .iter()
            .map(|&b| if b { 255 } else { 0 })
            .collect();
        write_png(
            &dir.join(&rel),
            m.mask.width(),
            m.mask.height(),
            PngPixels::Gray8(&bytes),
            provenance,
        )?;
        let r = m.tight_rect;
        manifest.masks.push(ManifestMask {
            object_id: m.object_id.clone(),
            image_id: m.image_id.clone(),
            path: rel,
            tight_rect: Some([r.x0, r.y0, r.x1, r.y1]),
        });
    }

    for modality in Modality::ALL {
        let name = match modality {
            Modality::EyeTracking => "fixations.csv",
            Modality::PointClick => "clicks.csv",
            Modality::RectDraw => "rectangles.csv",
        };
        let rel = PathBuf::from("events").join(name);
        write_events(&dir.join(&rel), ds, modality, provenance)?;
        match modality {
            Modality::EyeTracking => manifest.events.fixations = Some(rel),
            Modality::PointClick => manifest.events.clicks = Some(rel),
            Modality::RectDraw => manifest.events.rectangles = Some(rel),
        }
    }

    let manifest_path = dir.join("manifest.json");
    write_json_atomic(&manifest_path, &manifest)?;
    Ok(manifest_path)
}

fn write_events(
    path: &Path,
    ds: &Dataset,
    modality: Modality,
    provenance: &Provenance,
) -> Result<(), IoError> {
    write_atomic(path, |w| {
        writeln!(w, "{}", provenance.comment_line())?;
        writeln!(w, "{}", columns_for(modality).join(","))?;
        for r in ds.subject_records.iter().filter(|r| r.modality() == modality) {
            let (s, i) = (&r.subject_id, &r.image_id);
            match &r.events {
                Events::Fixations(v) if v.is_empty() => writeln!(w, "{s},{i},,,")?,
                Events::Clicks(v) if v.is_empty() => writeln!(w, "{s},{i},,")?,
                Events::Rects(v) if v.is_empty() => writeln!(w, "{s},{i},,,,")?,
                Events::Fixations(v) => {
                    for f in v {
                        writeln!(w, "{s},{i},{},{},{}", f.x, f.y, f.count)?;
                    }
                }
                Events::Clicks(v) => {
                    for c in v {
                        writeln!(w, "{s},{i},{},{}", c.x, c.y)?;
                    }
                }
                Events::Rects(v) => {
                    for r in v {
                        writeln!(w, "{s},{i},{},{},{},{}", r.x0, r.y0, r.x1, r.y1)?;
                    }
                }
            }
        }
        Ok(())
    })
}
