//! Schemas, validators, statistics and fine-tuning export for design and
//! text-segmentation corpora.
//!
//! A corpus is a manifest listing record files; records are JSON. Image and
//! mask references are paths relative to the manifest directory.

mod export;
mod stats;
mod validate;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{CoverageMask, RasterImage};

pub use export::{export_finetune, ExportOutput, FinetunePair, TEMPLATE_PLANNER_V1};
pub use stats::{corpus_stats, Quantiles, StatsReport, LUMINANCE_BINS};
pub use validate::{mask_bbox, validate_design, validate_textseg};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub rule: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(path: impl Into<String>, rule: &str, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            rule: rule.to_string(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} [{}]: {}", self.path, self.rule, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignElement {
    pub role: crate::doc::Role,
    pub content: String,
    pub x: i64,
    pub y: i64,
    pub box_width: i64,
    pub box_height: i64,
    pub font_id: String,
    pub font_size: f64,
    pub color: String,
    pub alignment: crate::doc::Alignment,
    pub rotation_deg: f64,
}

impl DesignElement {
    pub fn spec(&self) -> crate::doc::TypographySpec {
        crate::doc::TypographySpec {
            x: self.x,
            y: self.y,
            box_width: self.box_width,
            box_height: self.box_height,
            font_id: self.font_id.clone(),
            font_size: self.font_size,
            color: self.color.clone(),
            alignment: self.alignment,
            rotation_deg: self.rotation_deg,
        }
    }
}

/// A poster background with annotated text elements and a short brief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub background_ref: String,
    pub elements: Vec<DesignElement>,
    pub user_description: String,
}

/// An image, a mask of its artistic text and a style caption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSegRecord {
    pub image_ref: String,
    pub mask_ref: String,
    pub description: String,
    /// Tight `[x0, y0, x1, y1)` box of the nonzero mask; derived, optional on disk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_bbox: Option<[u32; 4]>,
}

/// Where validators find referenced images.
pub trait AssetSource {
    fn image_dims(&self, reference: &str) -> Result<(u32, u32), String>;
    fn load_mask(&self, reference: &str) -> Result<CoverageMask, String>;
}

/// Assets on disk relative to a base directory.
#[derive(Debug, Clone)]
pub struct DirAssets {
    pub base: PathBuf,
}

impl DirAssets {
    pub fn new(base: impl Into<PathBuf>) -> Self {
        Self { base: base.into() }
    }

    fn resolve(&self, reference: &str) -> PathBuf {
        self.base.join(reference)
    }
}

impl AssetSource for DirAssets {
    fn image_dims(&self, reference: &str) -> Result<(u32, u32), String> {
        image::image_dimensions(self.resolve(reference)).map_err(|e| e.to_string())
    }

    fn load_mask(&self, reference: &str) -> Result<CoverageMask, String> {
        CoverageMask::load(&self.resolve(reference)).map_err(|e| e.to_string())
    }
}

/// In-memory assets keyed by reference.
#[derive(Debug, Clone, Default)]
pub struct MemoryAssets {
    pub images: HashMap<String, RasterImage>,
    pub masks: HashMap<String, CoverageMask>,
}

impl AssetSource for MemoryAssets {
    fn image_dims(&self, reference: &str) -> Result<(u32, u32), String> {
        self.images
            .get(reference)
            .map(RasterImage::dims)
            .or_else(|| self.masks.get(reference).map(CoverageMask::dims))
            .ok_or_else(|| format!("no asset {reference:?}"))
    }

    fn load_mask(&self, reference: &str) -> Result<CoverageMask, String> {
        self.masks
            .get(reference)
            .cloned()
            .ok_or_else(|| format!("no mask {reference:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Design,
    Textseg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: RecordKind,
    /// Record files relative to the manifest directory.
    pub records: Vec<String>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
}

/// One record as loaded from disk; `value` is `None` when the file could not
/// be read or parsed, with the reason in `error`.
#[derive(Debug, Clone)]
pub struct LoadedRecord {
    pub file: String,
    pub value: Option<serde_json::Value>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub manifest: Manifest,
    pub base: PathBuf,
    pub records: Vec<LoadedRecord>,
}

impl Corpus {
    /// Reads the manifest and every record it lists. Unreadable records are
    /// kept with their error so validation can report them.
    pub fn load(manifest_path: &Path) -> Result<Corpus, DatasetError> {
        let text = std::fs::read_to_string(manifest_path).map_err(|e| DatasetError::Io {
            path: manifest_path.to_path_buf(),
            message: e.to_string(),
        })?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| DatasetError::Manifest {
                path: manifest_path.to_path_buf(),
                message: e.to_string(),
            })?;
        let base = manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let records = manifest
            .records
            .iter()
            .map(|file| {
                let read = std::fs::read_to_string(base.join(file))
                    .map_err(|e| e.to_string())
                    .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()));
                match read {
                    Ok(v) => LoadedRecord {
                        file: file.clone(),
                        value: Some(v),
                        error: None,
                    },
                    Err(e) => LoadedRecord {
                        file: file.clone(),
                        value: None,
                        error: Some(e),
                    },
                }
            })
            .collect();
        Ok(Corpus {
            manifest,
            base,
            records,
        })
    }

    pub fn assets(&self) -> DirAssets {
        DirAssets::new(&self.base)
    }

    /// Diagnostics for every record, prefixed with the record file.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let assets = self.assets();
        let mut out = Vec::new();
        for r in &self.records {
            let diags = match (&r.value, &r.error) {
                (Some(v), _) => match self.manifest.kind {
                    RecordKind::Design => validate_design(v, &assets),
                    RecordKind::Textseg => validate_textseg(v, &assets),
                },
                (None, e) => vec![Diagnostic::new(
                    "",
                    "unparseable",
                    e.clone().unwrap_or_default(),
                )],
            };
            out.extend(diags.into_iter().map(|mut d| {
                d.path = if d.path.is_empty() {
                    r.file.clone()
                } else {
                    format!("{}:{}", r.file, d.path)
                };
                d
            }));
        }
        out
    }
}
