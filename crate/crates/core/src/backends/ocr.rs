use serde::{Deserialize, Serialize};

use super::http::post_json;
use super::wire::OcrReply;
use super::{BackendEndpoint, BackendError, BackendKind, CancelToken};
use crate::doc::PosterDocument;
use crate::raster::RasterImage;
use crate::text::{render_all, FontRegistry, RenderOutput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedWord {
    pub word: String,
    pub confidence: f64,
}

/// Words the renderer actually drew, in element order. Elements that left no
/// ink on the canvas contribute nothing; characters the font could not draw
/// read back as U+FFFD.
pub fn oracle_ocr(rendered: &RenderOutput, registry: &FontRegistry) -> Vec<DetectedWord> {
    rendered
        .elements
        .iter()
        .filter(|e| !e.coverage.is_empty())
        .flat_map(|e| {
            e.run
                .drawn_text(registry)
                .split_whitespace()
                .map(|w| DetectedWord {
                    word: w.to_string(),
                    confidence: 1.0,
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Remote OCR when an endpoint is given; otherwise the oracle, which needs
/// the document the image was rendered from.
pub fn ocr_detect(
    image: &RasterImage,
    sidecar: Option<(&PosterDocument, &FontRegistry)>,
    endpoint: Option<&BackendEndpoint>,
    cancel: Option<&CancelToken>,
) -> Result<Vec<DetectedWord>, BackendError> {
    match endpoint {
        Some(ep) => {
            let b64 = image
                .to_png_base64()
                .map_err(|e| BackendError::Input(e.to_string()))?;
            let reply = post_json(ep, &serde_json::json!({"image_png_base64": b64}), cancel)?;
            let parsed: OcrReply =
                serde_json::from_value(reply).map_err(|e| BackendError::Malformed {
                    kind: BackendKind::Ocr,
                    message: e.to_string(),
                })?;
            Ok(parsed
                .words
                .into_iter()
                .map(|w| DetectedWord {
                    word: w.text,
                    confidence: w.confidence.clamp(0.0, 1.0),
                })
                .collect())
        }
        None => {
            let (doc, registry) = sidecar.ok_or_else(|| {
                BackendError::Input("oracle OCR needs the poster document sidecar".into())
            })?;
            if doc.dims() != image.dims() {
                return Err(BackendError::Input(format!(
                    "image {:?} does not match document canvas {:?}",
                    image.dims(),
                    doc.dims()
                )));
            }
            Ok(oracle_ocr(&render_all(doc, registry), registry))
        }
    }
}
