use serde_json::json;

use super::http::{field_str, post_json};
use super::{BackendEndpoint, BackendError, BackendKind, CancelToken};
use crate::raster::RasterImage;

/// Experimental: erases text from a reference image. There is no local
/// fallback, so a missing endpoint is an input error for the caller to map.
pub fn remove_text(
    image: &RasterImage,
    seed: u64,
    endpoint: &BackendEndpoint,
    cancel: Option<&CancelToken>,
) -> Result<RasterImage, BackendError> {
    if endpoint.kind != BackendKind::TextRemoval {
        return Err(BackendError::InvalidEndpoint(format!(
            "expected a text_removal endpoint, got {}",
            endpoint.kind
        )));
    }
    let b64 = image
        .to_png_base64()
        .map_err(|e| BackendError::Input(e.to_string()))?;
    let reply = post_json(endpoint, &json!({"image_png_base64": b64, "seed": seed}), cancel)?;
    let out = RasterImage::from_png_base64(field_str(&reply, "image_png_base64", endpoint)?)
        .map_err(|e| BackendError::Malformed {
            kind: BackendKind::TextRemoval,
            message: e.to_string(),
        })?;
    if out.dims() != image.dims() {
        return Ok(out.resize_cover(image.width(), image.height()));
    }
    Ok(out)
}
