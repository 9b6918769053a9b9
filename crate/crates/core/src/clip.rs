//! Per-object, per-frame mask sequences for one video.

use thiserror::Error;

use crate::mask::{BinaryMask, LabelFrame, MaskError};

pub type ObjectId = u8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClipError {
    #[error("clip must have at least one frame")]
    NoFrames,
    #[error("object {id} has {got} frames, expected {expected}")]
    FrameCount { id: ObjectId, got: usize, expected: usize },
    #[error("object ids must be nonzero, unique and ascending")]
    Roster,
    #[error("roster mismatch: {0:?} vs {1:?}")]
    RosterMismatch(Vec<ObjectId>, Vec<ObjectId>),
    #[error("frame count mismatch: {0} vs {1}")]
    FrameMismatch(usize, usize),
    #[error(transparent)]
    Mask(#[from] MaskError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectTrack {
    pub id: ObjectId,
    pub masks: Vec<BinaryMask>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskClip {
    width: usize,
    height: usize,
    frame_count: usize,
    tracks: Vec<ObjectTrack>,
}

impl MaskClip {
    /// Builds a clip from tracks; ids must be nonzero and strictly ascending, and every
    /// track must carry `frame_count` masks of the given dimensions.
    pub fn new(
        width: usize,
        height: usize,
        frame_count: usize,
        tracks: Vec<ObjectTrack>,
    ) -> Result<Self, ClipError> {
        if frame_count == 0 {
            return Err(ClipError::NoFrames);
        }
        let probe = BinaryMask::empty(width, height)?;
        let mut prev = 0u8;
        for t in &tracks {
            if t.id <= prev {
                return Err(ClipError::Roster);
            }
            prev = t.id;
            if t.masks.len() != frame_count {
                return Err(ClipError::FrameCount {
                    id: t.id,
                    got: t.masks.len(),
                    expected: frame_count,
                });
            }
            for m in &t.masks {
                probe.check_dims(m)?;
            }
        }
        Ok(Self {
            width,
            height,
            frame_count,
            tracks,
        })
    }

    /// Splits indexed label frames into per-object tracks for the given roster.
    pub fn from_label_frames(frames: &[LabelFrame], roster: &[ObjectId]) -> Result<Self, ClipError> {
        let first = frames.first().ok_or(ClipError::NoFrames)?;
        let (w, h) = (first.width(), first.height());
        for f in frames {
            if f.width() != w || f.height() != h {
                return Err(MaskError::DimensionMismatch {
                    left_w: w,
                    left_h: h,
                    right_w: f.width(),
                    right_h: f.height(),
                }
                .into());
            }
        }
        let tracks = roster
            .iter()
            .map(|&id| ObjectTrack {
                id,
                masks: frames.iter().map(|f| f.mask_of(id)).collect(),
            })
            .collect();
        Self::new(w, h, frames.len(), tracks)
    }

    /// Flattens tracks into indexed frames. Where masks overlap, the lowest object id
    /// keeps the pixel.
    pub fn to_label_frames(&self) -> Vec<LabelFrame> {
        (0..self.frame_count)
            .map(|f| {
                let mut frame = LabelFrame::blank(self.width, self.height).expect("valid dims");
                for t in self.tracks.iter().rev() {
                    for p in t.masks[f].pixels() {
                        frame.set(p.x, p.y, t.id);
                    }
                }
                frame
            })
            .collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn tracks(&self) -> &[ObjectTrack] {
        &self.tracks
    }

    pub fn roster(&self) -> Vec<ObjectId> {
        self.tracks.iter().map(|t| t.id).collect()
    }

    pub fn track(&self, id: ObjectId) -> Option<&ObjectTrack> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub fn mask(&self, id: ObjectId, frame: usize) -> Option<&BinaryMask> {
        self.track(id).and_then(|t| t.masks.get(frame))
    }

    /// Same roster, frame count and dimensions.
    pub fn check_compatible(&self, other: &MaskClip) -> Result<(), ClipError> {
        if self.roster() != other.roster() {
            return Err(ClipError::RosterMismatch(self.roster(), other.roster()));
        }
        if self.frame_count != other.frame_count {
            return Err(ClipError::FrameMismatch(self.frame_count, other.frame_count));
        }
        if self.width != other.width || self.height != other.height {
            return Err(MaskError::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            }
            .into());
        }
        Ok(())
    }

    /// Objects with a nonempty mask on at least one frame.
    pub fn present_count(&self) -> usize {
        self.tracks
            .iter()
            .filter(|t| t.masks.iter().any(|m| !m.is_empty()))
            .count()
    }
}
