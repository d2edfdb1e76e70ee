//! File output helpers: atomic writes, PNG encoding with provenance text
//! chunks, and the version/config-hash stamp carried by every artifact.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOLKIT_NAME: &str = "salmon-kit";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: png encoding failed: {message}")]
    Png { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Encode { path: PathBuf, message: String },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Stamp embedded in every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub toolkit: String,
    pub version: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn for_config<C: Serialize>(config: &C) -> Self {
        Self {
            toolkit: TOOLKIT_NAME.to_string(),
            version: TOOLKIT_VERSION.to_string(),
            config_hash: config_hash(config),
        }
    }

    /// Single-line form used as a `#` comment heading CSV files.
    pub fn comment_line(&self) -> String {
        format!(
            "# {} {} config_hash={}",
            self.toolkit, self.version, self.config_hash
        )
    }
}

/// First 16 hex digits of SHA-256 over the config's canonical JSON.
pub fn config_hash<C: Serialize>(config: &C) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    let digest = Sha256::digest(&json);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `path` by streaming into a sibling temp file and renaming it into place.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<(), IoError>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| IoError::io(&dir, e))?;
    let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| IoError::io(&dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w).map_err(|e| IoError::io(path, e))?;
        w.flush().map_err(|e| IoError::io(path, e))?;
    }
    tmp.persist(path)
        .map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let bytes = serde_json::to_vec_pretty(value).map_err(|e| IoError::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_atomic(path, |w| {
        w.write_all(&bytes)?;
        w.write_all(b"\n")
    })
}

#[derive(Debug, Clone, Copy)]
pub enum PngPixels<'a> {
    Gray8(&'a [u8]),
    Gray16(&'a [u16]),
    Rgb8(&'a [u8]),
}

/// Encodes a PNG atomically, tagging it with the provenance stamp.
pub fn write_png(
    path: &Path,
    width: usize,
    height: usize,
    pixels: PngPixels<'_>,
    provenance: &Provenance,
) -> Result<(), IoError> {
    let png_err = |e: png::EncodingError| IoError::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, width as u32, height as u32);
        enc.set_compression(png::Compression::Fast);
        let bytes: std::borrow::Cow<'_, [u8]> = match pixels {
            PngPixels::Gray8(p) => {
                enc.set_color(png::ColorType::Grayscale);
                enc.set_depth(png::BitDepth::Eight);
                p.into()
            }
            PngPixels::Gray16(p) => {
                enc.set_color(png::ColorType::Grayscale);
                enc.set_depth(png::BitDepth::Sixteen);
                p.iter().flat_map(|v| v.to_be_bytes()).collect::<Vec<_>>().into()
            }
            PngPixels::Rgb8(p) => {
                enc.set_color(png::ColorType::Rgb);
                enc.set_depth(png::BitDepth::Eight);
                p.into()
            }
        };
        enc.add_text_chunk("Software".into(), format!("{} {}", provenance.toolkit, provenance.version))
            .map_err(png_err)?;
        enc.add_text_chunk("ConfigHash".into(), provenance.config_hash.clone())
            .map_err(png_err)?;
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(&bytes).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    write_atomic(path, |w| w.write_all(&buf))
}

/// Serializes CSV rows under a provenance comment line.
pub fn write_csv_atomic<R: Serialize>(
    path: &Path,
    provenance: &Provenance,
    header: &[&str],
    rows: &[R],
) -> Result<(), IoError> {
    let mut body = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(&mut body);
        let enc = |e: csv::Error| IoError::Encode {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        w.write_record(header).map_err(enc)?;
        for row in rows {
            w.serialize(row).map_err(enc)?;
        }
        w.flush().map_err(|e| IoError::io(path, e))?;
    }
    write_atomic(path, |w| {
        writeln!(w, "{}", provenance.comment_line())?;
        w.write_all(&body)
    })
}
