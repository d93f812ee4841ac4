//! Canonical JSON form of a [`PosterDocument`].
//!
//! Object keys are sorted lexicographically at every level, output is
//! pretty-printed with two-space indentation and a trailing newline, and
//! rasters are embedded as base64 PNG. Masks are stored 8-bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    ArtTextLayer, BackgroundLayer, BackgroundSource, DocError, ElementId, PosterDocument,
    TextElement,
};
use crate::raster::{CoverageMask, RasterImage};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocFile {
    canvas_width: u32,
    canvas_height: u32,
    background: BackgroundFile,
    #[serde(default)]
    elements: Vec<TextElement>,
    #[serde(default)]
    art_layers: Vec<ArtLayerFile>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BackgroundFile {
    source: BackgroundSource,
    #[serde(default)]
    pixels: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArtLayerFile {
    element_id: ElementId,
    style_prompt: String,
    mask: String,
    stylized_pixels: String,
    feather_sigma: f64,
    #[serde(default)]
    stale: bool,
}

/// Canonical text form. Equal documents produce identical bytes.
///
/// Panics only if PNG encoding of an in-memory buffer fails, which cannot
/// happen for buffers constructed through this crate.
pub fn serialize(doc: &PosterDocument) -> String {
    let file = DocFile {
        canvas_width: doc.canvas_width,
        canvas_height: doc.canvas_height,
        background: BackgroundFile {
            source: doc.background.source.clone(),
            pixels: doc
                .background
                .pixels
                .as_ref()
                .map(|p| p.to_png_base64().expect("png encode")),
        },
        elements: doc.elements.clone(),
        art_layers: doc
            .art_layers
            .iter()
            .map(|l| ArtLayerFile {
                element_id: l.element_id.clone(),
                style_prompt: l.style_prompt.clone(),
                mask: l.mask.to_png_base64().expect("png encode"),
                stylized_pixels: l.stylized_pixels.to_png_base64().expect("png encode"),
                feather_sigma: l.feather_sigma,
                stale: l.stale,
            })
            .collect(),
        metadata: doc.metadata.clone(),
    };
    let value = serde_json::to_value(&file).expect("document is always representable");
    let mut text = serde_json::to_string_pretty(&canonicalize(value)).expect("value serializes");
    text.push('\n');
    text
}

pub fn deserialize(text: &str) -> Result<PosterDocument, DocError> {
    let file: DocFile = serde_json::from_str(text).map_err(|e| DocError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;

    let pixels = match &file.background.pixels {
        Some(b64) => Some(
            RasterImage::from_png_base64(b64)
                .map_err(|e| DocError::schema("background.pixels", e.to_string()))?,
        ),
        None => None,
    };
    let mut art_layers = Vec::with_capacity(file.art_layers.len());
    for (j, l) in file.art_layers.into_iter().enumerate() {
        let mask = CoverageMask::from_png_base64(&l.mask)
            .map_err(|e| DocError::schema(format!("art_layers[{j}].mask"), e.to_string()))?;
        let stylized_pixels = RasterImage::from_png_base64(&l.stylized_pixels).map_err(|e| {
            DocError::schema(format!("art_layers[{j}].stylized_pixels"), e.to_string())
        })?;
        art_layers.push(ArtTextLayer {
            element_id: l.element_id,
            style_prompt: l.style_prompt,
            mask,
            stylized_pixels,
            feather_sigma: l.feather_sigma,
            stale: l.stale,
        });
    }
    let doc = PosterDocument {
        canvas_width: file.canvas_width,
        canvas_height: file.canvas_height,
        background: BackgroundLayer {
            source: file.background.source,
            pixels,
        },
        elements: file.elements,
        art_layers,
        metadata: file.metadata,
    };
    doc.validate()?;
    Ok(doc)
}

/// Rebuilds every object with lexicographically sorted keys, independent of
/// how `serde_json::Map` is backed in the current build.
pub(crate) fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let sorted: BTreeMap<String, Value> =
                map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect();
            Value::Object(sorted.into_iter().collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}
