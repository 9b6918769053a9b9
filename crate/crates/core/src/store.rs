//! Clip directories on disk.
//!
//! ```text
//! <clip>/clip.json               manifest
//! <clip>/frames/frame_00000.pgm  indexed label frames
//! <clip>/tracks/object_001.mseq  per-object mask sequences (lossless under overlap)
//! <clip>/points.jsonl            optional point annotations
//! ```
//!
//! A suite is a directory whose subdirectories are clips. Readers prefer the track
//! files and fall back to splitting label frames by the manifest roster.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotator::PointAnnotation;
use crate::clip::{ClipError, MaskClip, ObjectId, ObjectTrack};
use crate::fusion::KeyframeSet;
use crate::mask::{LabelFrame, MaskError};
use crate::pgm::{self, PgmError};
use crate::rle;
use crate::synth::{NoiseConfig, SceneConfig, SynthClip};

pub const MANIFEST: &str = "clip.json";
pub const POINTS: &str = "points.jsonl";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bad JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error("bad mask data in {path}: {source}")]
    Mask {
        path: PathBuf,
        #[source]
        source: MaskError,
    },
    #[error(transparent)]
    Clip(#[from] ClipError),
    #[error("{0}")]
    Layout(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipManifest {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub objects: Vec<ObjectId>,
    /// Objects visible on at least one frame.
    pub count: u32,
    pub seed: Option<u64>,
    pub noise: Option<NoiseConfig>,
    pub scene: Option<SceneConfig>,
}

impl ClipManifest {
    /// Manifest for a clip that did not come from the generator.
    pub fn for_clip(name: &str, clip: &MaskClip) -> Self {
        Self {
            name: name.to_owned(),
            width: clip.width(),
            height: clip.height(),
            frames: clip.frame_count(),
            objects: clip.roster(),
            count: clip.present_count() as u32,
            seed: None,
            noise: None,
            scene: None,
        }
    }
}

/// A clip read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredClip {
    pub manifest: ClipManifest,
    pub clip: MaskClip,
    pub labels: Vec<LabelFrame>,
}

pub fn track_file_name(id: ObjectId) -> String {
    format!("object_{id:03}.mseq")
}

pub fn create_dir(path: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, StoreError> {
    fs::read(path).map_err(io_err(path))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| StoreError::Json {
        path: path.to_owned(),
        source,
    })?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|source| StoreError::Json {
        path: path.to_owned(),
        source,
    })
}

/// One compact JSON record per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), StoreError> {
    let mut text = String::new();
    for r in records {
        let line = serde_json::to_string(r).map_err(|source| StoreError::Json {
            path: path.to_owned(),
            source,
        })?;
        text.push_str(&line);
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())
}

/// Reads records, skipping blank lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| StoreError::Json {
                path: path.to_owned(),
                source,
            })
        })
        .collect()
}

/// Writes manifest, label frames, tracks and (when given) points.
pub fn write_clip(
    dir: &Path,
    manifest: &ClipManifest,
    clip: &MaskClip,
    points: Option<&[PointAnnotation]>,
) -> Result<(), StoreError> {
    let frames_dir = dir.join("frames");
    let tracks_dir = dir.join("tracks");
    create_dir(&frames_dir)?;
    create_dir(&tracks_dir)?;
    write_json(&dir.join(MANIFEST), manifest)?;
    for (i, frame) in clip.to_label_frames().iter().enumerate() {
        pgm::write(&frames_dir.join(pgm::frame_file_name(i)), frame)?;
    }
    for t in clip.tracks() {
        write_bytes(&tracks_dir.join(track_file_name(t.id)), &rle::encode_sequence(&t.masks))?;
    }
    if let Some(points) = points {
        write_jsonl(&dir.join(POINTS), points)?;
    }
    Ok(())
}

pub fn synth_manifest(clip: &SynthClip) -> ClipManifest {
    ClipManifest {
        seed: Some(clip.seed),
        noise: Some(clip.config.noise),
        scene: Some(clip.config.clone()),
        count: clip.count,
        ..ClipManifest::for_clip(&clip.name, &clip.gt)
    }
}

pub fn write_synth_clip(dir: &Path, clip: &SynthClip) -> Result<(), StoreError> {
    write_clip(dir, &synth_manifest(clip), &clip.gt, Some(&clip.points))
}

pub fn read_clip(dir: &Path) -> Result<StoredClip, StoreError> {
    let manifest: ClipManifest = read_json(&dir.join(MANIFEST))?;
    let frames_dir = dir.join("frames");
    let labels = (0..manifest.frames)
        .map(|i| pgm::read(&frames_dir.join(pgm::frame_file_name(i))))
        .collect::<Result<Vec<_>, _>>()?;
    for f in &labels {
        if f.width() != manifest.width || f.height() != manifest.height {
            return Err(StoreError::Layout(format!(
                "{}: frame is {}x{}, manifest says {}x{}",
                dir.display(),
                f.width(),
                f.height(),
                manifest.width,
                manifest.height
            )));
        }
    }
    let tracks_dir = dir.join("tracks");
    let clip = if tracks_dir.is_dir() {
        let mut tracks = Vec::with_capacity(manifest.objects.len());
        for &id in &manifest.objects {
            let path = tracks_dir.join(track_file_name(id));
            let masks = rle::decode_sequence(&read_bytes(&path)?).map_err(|source| StoreError::Mask {
                path: path.clone(),
                source,
            })?;
            tracks.push(ObjectTrack { id, masks });
        }
        MaskClip::new(manifest.width, manifest.height, manifest.frames, tracks)?
    } else {
        MaskClip::from_label_frames(&labels, &manifest.objects)?
    };
    Ok(StoredClip { manifest, clip, labels })
}

pub fn read_points(dir: &Path) -> Result<Option<Vec<PointAnnotation>>, StoreError> {
    let path = dir.join(POINTS);
    if path.is_file() {
        read_jsonl(&path).map(Some)
    } else {
        Ok(None)
    }
}

/// `root` itself when it is a clip, otherwise its clip subdirectories sorted by name.
pub fn clip_dirs(root: &Path) -> Result<Vec<PathBuf>, StoreError> {
    if root.join(MANIFEST).is_file() {
        return Ok(vec![root.to_owned()]);
    }
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let path = entry.map_err(io_err(root))?.path();
        if path.join(MANIFEST).is_file() {
            dirs.push(path);
        }
    }
    if dirs.is_empty() {
        return Err(StoreError::Layout(format!("{} holds no clips", root.display())));
    }
    dirs.sort();
    Ok(dirs)
}

pub const KEYFRAMES: &str = "keyframes.json";

/// Directory entry of a keyframe set; the masks sit in `tracks/`, one per keyframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeManifest {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub indices: Vec<usize>,
    pub objects: Vec<ObjectId>,
}

pub fn write_keyframes(dir: &Path, name: &str, width: usize, height: usize, kf: &KeyframeSet) -> Result<(), StoreError> {
    let tracks_dir = dir.join("tracks");
    create_dir(&tracks_dir)?;
    let manifest = KeyframeManifest {
        name: name.to_owned(),
        width,
        height,
        indices: kf.indices.clone(),
        objects: kf.tracks.iter().map(|t| t.id).collect(),
    };
    write_json(&dir.join(KEYFRAMES), &manifest)?;
    for t in &kf.tracks {
        write_bytes(&tracks_dir.join(track_file_name(t.id)), &rle::encode_sequence(&t.masks))?;
    }
    Ok(())
}

pub fn read_keyframes(dir: &Path) -> Result<(KeyframeManifest, KeyframeSet), StoreError> {
    let manifest: KeyframeManifest = read_json(&dir.join(KEYFRAMES))?;
    let mut tracks = Vec::with_capacity(manifest.objects.len());
    for &id in &manifest.objects {
        let path = dir.join("tracks").join(track_file_name(id));
        let masks = rle::decode_sequence(&read_bytes(&path)?).map_err(|source| StoreError::Mask {
            path: path.clone(),
            source,
        })?;
        for m in &masks {
            if m.width() != manifest.width || m.height() != manifest.height {
                return Err(StoreError::Layout(format!(
                    "{}: mask is {}x{}, manifest says {}x{}",
                    path.display(),
                    m.width(),
                    m.height(),
                    manifest.width,
                    manifest.height
                )));
            }
        }
        tracks.push(ObjectTrack { id, masks });
    }
    let kf = KeyframeSet {
        indices: manifest.indices.clone(),
        tracks,
    };
    Ok((manifest, kf))
}

/// Count record for one clip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub video: String,
    pub count: u32,
}
