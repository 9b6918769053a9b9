//! Bit-packed binary masks and the set algebra the rest of the crate is built on.
//!
//! Masks are stored row-major, one bit per pixel, packed into `u64` words. Bits past
//! `width * height` in the last word are always zero, so derived equality is pixel
//! equality.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaskError {
    #[error("mask dimensions must be at least 1x1, got {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },
    #[error("operation requires a nonempty mask")]
    EmptyMask,
    #[error("point ({x}, {y}) outside {width}x{height} frame")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("malformed mask data: {0}")]
    Malformed(String),
}

/// A pixel location: `x` is the column, `y` the row, both 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelPoint {
    pub x: usize,
    pub y: usize,
}

impl PixelPoint {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for PixelPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    words: Vec<u64>,
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMask {}x{} ({} set)", self.width, self.height, self.count())?;
        if self.width * self.height <= 4096 {
            for y in 0..self.height {
                let row: String = (0..self.width)
                    .map(|x| if self.get(x, y) { '#' } else { '.' })
                    .collect();
                writeln!(f, "  {row}")?;
            }
        }
        Ok(())
    }
}

impl BinaryMask {
    /// An all-background mask.
    pub fn empty(width: usize, height: usize) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::InvalidDimensions { width, height });
        }
        let n = width * height;
        Ok(Self {
            width,
            height,
            words: vec![0; n.div_ceil(WORD)],
        })
    }

    pub fn full(width: usize, height: usize) -> Result<Self, MaskError> {
        Self::from_fn(width, height, |_, _| true)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, MaskError> {
        let mut m = Self::empty(width, height)?;
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set_index(y * width + x);
                }
            }
        }
        Ok(m)
    }

    pub fn from_points(
        width: usize,
        height: usize,
        points: &[PixelPoint],
    ) -> Result<Self, MaskError> {
        let mut m = Self::empty(width, height)?;
        for &p in points {
            m.set(p, true)?;
        }
        Ok(m)
    }

    /// Builds a mask from one value per pixel in row-major order; nonzero is foreground.
    pub fn from_values(width: usize, height: usize, values: &[u8]) -> Result<Self, MaskError> {
        if values.len() != width * height {
            return Err(MaskError::Malformed(format!(
                "expected {} values for {width}x{height}, got {}",
                width * height,
                values.len()
            )));
        }
        let mut m = Self::empty(width, height)?;
        for (i, &v) in values.iter().enumerate() {
            if v != 0 {
                m.set_index(i);
            }
        }
        Ok(m)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `width * height`.
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// True when no pixel is set.
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn same_dims(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_dims(&self, other: &BinaryMask) -> Result<(), MaskError> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(MaskError::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            })
        }
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        p.x < self.width && p.y < self.height
    }

    /// Reads the pixel at column `x`, row `y`. Out-of-range coordinates read as background.
    pub fn get(&self, x: usize, y: usize) -> bool {
        if x >= self.width || y >= self.height {
            return false;
        }
        self.get_index(y * self.width + x)
    }

    pub fn at(&self, p: PixelPoint) -> bool {
        self.get(p.x, p.y)
    }

    pub(crate) fn get_index(&self, i: usize) -> bool {
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub(crate) fn set_index(&mut self, i: usize) {
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    pub fn set(&mut self, p: PixelPoint, value: bool) -> Result<(), MaskError> {
        if !self.contains(p) {
            return Err(MaskError::OutOfBounds {
                x: p.x,
                y: p.y,
                width: self.width,
                height: self.height,
            });
        }
        let i = p.y * self.width + p.x;
        if value {
            self.set_index(i);
        } else {
            self.words[i / WORD] &= !(1 << (i % WORD));
        }
        Ok(())
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Foreground pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = PixelPoint> + '_ {
        let width = self.width;
        self.words.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let i = wi * WORD + b;
                Some(PixelPoint::new(i % width, i / width))
            })
        })
    }

    /// One `0`/`1` byte per pixel, row-major.
    pub fn to_values(&self) -> Vec<u8> {
        (0..self.pixel_count()).map(|i| self.get_index(i) as u8).collect()
    }

    fn zip_words(&self, other: &BinaryMask, op: impl Fn(u64, u64) -> u64) -> Result<Self, MaskError> {
        self.check_dims(other)?;
        Ok(Self {
            width: self.width,
            height: self.height,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    fn count_zip(&self, other: &BinaryMask, op: impl Fn(u64, u64) -> u64) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| op(a, b).count_ones() as usize)
            .sum()
    }

    /// True when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_dims(other) && self.words.iter().zip(&other.words).all(|(&a, &b)| a & !b == 0)
    }

    /// Translates the mask by `(dx, dy)`; pixels moved outside the frame are dropped.
    pub fn translate(&self, dx: i64, dy: i64) -> BinaryMask {
        let mut out = BinaryMask {
            width: self.width,
            height: self.height,
            words: vec![0; self.words.len()],
        };
        for p in self.pixels() {
            let nx = p.x as i64 + dx;
            let ny = p.y as i64 + dy;
            if nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height {
                out.set_index(ny as usize * self.width + nx as usize);
            }
        }
        out
    }

    /// Inclusive bounding box `(min_x, min_y, max_x, max_y)`, `None` for an empty mask.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut it = self.pixels();
        let first = it.next()?;
        let init = (first.x, first.y, first.x, first.y);
        Some(it.fold(init, |(x0, y0, x1, y1), p| {
            (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y))
        }))
    }
}

/// Intersection over union. Two empty masks score 1.0: both say "absent".
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64, MaskError> {
    a.check_dims(b)?;
    let inter = a.count_zip(b, |x, y| x & y);
    let uni = a.count_zip(b, |x, y| x | y);
    if uni == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / uni as f64)
}

pub fn intersect(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask, MaskError> {
    a.zip_words(b, |x, y| x & y)
}

pub fn union(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask, MaskError> {
    a.zip_words(b, |x, y| x | y)
}

/// Foreground pixels with at least one background pixel among their 8 neighbours.
/// Positions outside the frame count as background.
pub fn boundary_mask(m: &BinaryMask) -> BinaryMask {
    let (w, h) = (m.width, m.height);
    let mut out = BinaryMask {
        width: w,
        height: h,
        words: vec![0; m.words.len()],
    };
    for p in m.pixels() {
        let on_border = p.x == 0 || p.y == 0 || p.x + 1 == w || p.y + 1 == h;
        let touches_background = on_border || {
            let mut any = false;
            'scan: for ny in p.y - 1..=p.y + 1 {
                for nx in p.x - 1..=p.x + 1 {
                    if !m.get(nx, ny) {
                        any = true;
                        break 'scan;
                    }
                }
            }
            any
        };
        if touches_background {
            out.set_index(p.y * w + p.x);
        }
    }
    out
}

/// Boundary pixels in row-major order.
pub fn boundary(m: &BinaryMask) -> Vec<PixelPoint> {
    boundary_mask(m).pixels().collect()
}

/// A frame of object ids: 0 is background, any other value an object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelFrame {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelFrame {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::InvalidDimensions { width, height });
        }
        if labels.len() != width * height {
            return Err(MaskError::Malformed(format!(
                "label frame {width}x{height} needs {} values, got {}",
                width * height,
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn blank(width: usize, height: usize) -> Result<Self, MaskError> {
        Self::new(width, height, vec![0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, id: u8) {
        self.labels[y * self.width + x] = id;
    }

    /// All pixels carrying `id`.
    pub fn mask_of(&self, id: u8) -> BinaryMask {
        let mut m = BinaryMask::empty(self.width, self.height).expect("frame dims are valid");
        for (i, &v) in self.labels.iter().enumerate() {
            if v == id {
                m.set_index(i);
            }
        }
        m
    }

    /// Distinct nonzero ids, ascending.
    pub fn object_ids(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &v in &self.labels {
            seen[v as usize] = true;
        }
        (1..=255u8).filter(|&id| seen[id as usize]).collect()
    }
}

/// The 4-connected region sharing the seed's label. Background (label 0) gives an empty mask.
pub fn flood_fill(labels: &LabelFrame, seed: PixelPoint) -> Result<BinaryMask, MaskError> {
    let (w, h) = (labels.width, labels.height);
    if seed.x >= w || seed.y >= h {
        return Err(MaskError::OutOfBounds {
            x: seed.x,
            y: seed.y,
            width: w,
            height: h,
        });
    }
    let mut out = BinaryMask::empty(w, h)?;
    let target = labels.get(seed.x, seed.y);
    if target == 0 {
        return Ok(out);
    }
    let mut queue = VecDeque::new();
    out.set_index(seed.y * w + seed.x);
    queue.push_back(seed);
    while let Some(p) = queue.pop_front() {
        let mut visit = |x: usize, y: usize| {
            let i = y * w + x;
            if labels.labels[i] == target && !out.get_index(i) {
                out.set_index(i);
                queue.push_back(PixelPoint::new(x, y));
            }
        };
        if p.x > 0 {
            visit(p.x - 1, p.y);
        }
        if p.x + 1 < w {
            visit(p.x + 1, p.y);
        }
        if p.y > 0 {
            visit(p.x, p.y - 1);
        }
        if p.y + 1 < h {
            visit(p.x, p.y + 1);
        }
    }
    Ok(out)
}
