//! Parameter container: `TPRM`, a version byte, a u32 tensor count, a directory of
//! (u32 name length, UTF-8 name, u32 rank, u32 dims) entries, then all values as
//! little-endian f64 in directory order. Integers are little-endian.

use super::TemporalError;

pub const MAGIC: &[u8; 4] = b"TPRM";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn encode_tensors(tensors: &[NamedTensor]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    for t in tensors {
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TemporalError> {
        if self.bytes.len() < n {
            return Err(TemporalError::Snapshot("truncated".into()));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<usize, TemporalError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
}

pub fn decode_tensors(bytes: &[u8]) -> Result<Vec<NamedTensor>, TemporalError> {
    let mut r = Reader { bytes };
    if r.take(4)? != MAGIC {
        return Err(TemporalError::Snapshot("bad magic".into()));
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(TemporalError::Snapshot(format!("unsupported version {version}")));
    }
    let count = r.u32()?;
    let mut dir = Vec::new();
    for _ in 0..count {
        let len = r.u32()?;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|e| TemporalError::Snapshot(e.to_string()))?
            .to_owned();
        let rank = r.u32()?;
        let shape = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        dir.push((name, shape));
    }
    let mut out = Vec::with_capacity(dir.len());
    for (name, shape) in dir {
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| TemporalError::Snapshot("shape overflow".into()))?;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| TemporalError::Snapshot("shape overflow".into()))?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        out.push(NamedTensor { name, shape, data });
    }
    if !r.bytes.is_empty() {
        return Err(TemporalError::Snapshot(format!("{} trailing bytes", r.bytes.len())));
    }
    Ok(out)
}
