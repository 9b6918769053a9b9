//! Binary portable graymap (P5, maxval 255) for indexed label frames.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::mask::{LabelFrame, MaskError};

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bad graymap: {0}")]
    Format(String),
    #[error(transparent)]
    Mask(#[from] MaskError),
}

pub fn encode(frame: &LabelFrame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.labels());
    out
}

pub fn decode(bytes: &[u8]) -> Result<LabelFrame, PgmError> {
    let mut pos = 0usize;
    let mut token = || -> Result<String, PgmError> {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(PgmError::Format("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| !c.is_ascii_whitespace()) {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "P5" {
        return Err(PgmError::Format(format!("expected P5, found {magic:?}")));
    }
    let mut number = |what: &str| -> Result<usize, PgmError> {
        let t = token()?;
        t.parse()
            .map_err(|_| PgmError::Format(format!("bad {what}: {t:?}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(PgmError::Format(format!("maxval must be 255, got {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let start = pos + 1;
    let raster = bytes
        .get(start..)
        .ok_or_else(|| PgmError::Format("missing raster".into()))?;
    if raster.len() != width * height {
        return Err(PgmError::Format(format!(
            "raster has {} bytes, expected {}",
            raster.len(),
            width * height
        )));
    }
    Ok(LabelFrame::new(width, height, raster.to_vec())?)
}

pub fn write(path: &Path, frame: &LabelFrame) -> Result<(), PgmError> {
    fs::write(path, encode(frame)).map_err(|source| PgmError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read(path: &Path) -> Result<LabelFrame, PgmError> {
    let bytes = fs::read(path).map_err(|source| PgmError::Io {
        path: path.to_owned(),
        source,
    })?;
    decode(&bytes)
}

/// `frame_00012.pgm` style name for frame index 12.
pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:05}.pgm")
}
