//! Run-length container for single masks.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "MSEQ" | 0x01 | u32 width | u32 height | u32 run_count | u32 runs[run_count]
//! ```
//!
//! Runs alternate background/foreground in row-major order and always start with a
//! background run, which may be zero-length.

use crate::mask::{BinaryMask, MaskError};

pub const MAGIC: &[u8; 4] = b"MSEQ";
pub const VERSION: u8 = 0x01;
const HEADER_LEN: usize = 4 + 1 + 4 + 4 + 4;

/// Alternating background-first run lengths.
pub fn runs(m: &BinaryMask) -> Vec<u32> {
    let mut out = Vec::new();
    let mut current = false;
    let mut len: u32 = 0;
    for y in 0..m.height() {
        for x in 0..m.width() {
            let v = m.get(x, y);
            if v != current {
                out.push(len);
                len = 0;
                current = v;
            }
            len += 1;
        }
    }
    out.push(len);
    out
}

pub fn from_runs(runs: &[u32], width: usize, height: usize) -> Result<BinaryMask, MaskError> {
    let total: u64 = runs.iter().map(|&r| r as u64).sum();
    if total != (width * height) as u64 {
        return Err(MaskError::Malformed(format!(
            "runs cover {total} pixels, expected {}",
            width * height
        )));
    }
    let mut m = BinaryMask::empty(width, height)?;
    let mut idx = 0usize;
    for (i, &r) in runs.iter().enumerate() {
        let r = r as usize;
        if i % 2 == 1 {
            for j in idx..idx + r {
                m.set_index(j);
            }
        }
        idx += r;
    }
    Ok(m)
}

pub fn encode_rle(m: &BinaryMask) -> Vec<u8> {
    let runs = runs(m);
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * runs.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(m.width() as u32).to_le_bytes());
    out.extend_from_slice(&(m.height() as u32).to_le_bytes());
    out.extend_from_slice(&(runs.len() as u32).to_le_bytes());
    for r in runs {
        out.extend_from_slice(&r.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32, MaskError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| MaskError::Malformed("truncated container".into()))
}

/// Decodes one container from the front of `bytes`, returning the mask and the
/// number of bytes consumed.
pub fn decode_one(bytes: &[u8]) -> Result<(BinaryMask, usize), MaskError> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(MaskError::Malformed("missing MSEQ header".into()));
    }
    if bytes[4] != VERSION {
        return Err(MaskError::Malformed(format!("unsupported version {}", bytes[4])));
    }
    let width = read_u32(bytes, 5)? as usize;
    let height = read_u32(bytes, 9)? as usize;
    let count = read_u32(bytes, 13)? as usize;
    let end = HEADER_LEN
        .checked_add(count.checked_mul(4).ok_or_else(|| MaskError::Malformed("run count overflow".into()))?)
        .ok_or_else(|| MaskError::Malformed("run count overflow".into()))?;
    if bytes.len() < end {
        return Err(MaskError::Malformed(format!(
            "container declares {count} runs but holds {} bytes",
            bytes.len()
        )));
    }
    let runs: Vec<u32> = (0..count)
        .map(|i| read_u32(bytes, HEADER_LEN + 4 * i))
        .collect::<Result<_, _>>()?;
    Ok((from_runs(&runs, width, height)?, end))
}

/// Decodes a single container and checks it against the expected dimensions.
pub fn decode_rle(bytes: &[u8], width: usize, height: usize) -> Result<BinaryMask, MaskError> {
    let (m, used) = decode_one(bytes)?;
    if used != bytes.len() {
        return Err(MaskError::Malformed(format!(
            "{} trailing bytes after container",
            bytes.len() - used
        )));
    }
    if m.width() != width || m.height() != height {
        return Err(MaskError::Malformed(format!(
            "container is {}x{}, expected {width}x{height}",
            m.width(),
            m.height()
        )));
    }
    Ok(m)
}

/// Concatenation of containers, one per frame.
pub fn encode_sequence(masks: &[BinaryMask]) -> Vec<u8> {
    masks.iter().flat_map(encode_rle).collect()
}

pub fn decode_sequence(mut bytes: &[u8]) -> Result<Vec<BinaryMask>, MaskError> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let (m, used) = decode_one(bytes)?;
        out.push(m);
        bytes = &bytes[used..];
    }
    Ok(out)
}
