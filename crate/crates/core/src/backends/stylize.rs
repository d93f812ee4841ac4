use serde_json::json;

use super::http::{field_str, post_json};
use super::{digest, BackendEndpoint, BackendError, BackendKind, CancelToken};
use crate::raster::{CoverageMask, RasterImage};

#[derive(Debug, Clone)]
pub struct StylizeRequest {
    /// Current flattened poster.
    pub image: RasterImage,
    /// Pre-feather coverage of the element to stylize.
    pub mask: CoverageMask,
    pub prompt: String,
    pub seed: u64,
}

impl StylizeRequest {
    fn check(&self) -> Result<(), BackendError> {
        if self.image.dims() != self.mask.dims() {
            return Err(BackendError::Input(format!(
                "image {:?} and mask {:?} differ",
                self.image.dims(),
                self.mask.dims()
            )));
        }
        Ok(())
    }
}

/// Full-canvas stylized image. Only the masked region is meaningful
/// downstream; the local fallback leaves every mask-zero pixel untouched.
pub fn stylize_text(
    req: &StylizeRequest,
    endpoint: Option<&BackendEndpoint>,
    cancel: Option<&CancelToken>,
) -> Result<RasterImage, BackendError> {
    req.check()?;
    let Some(ep) = endpoint else {
        return Ok(stylize_local(req));
    };
    let png = |r: Result<String, crate::raster::RasterError>| {
        r.map_err(|e| BackendError::Input(e.to_string()))
    };
    let body = json!({
        "image_png_base64": png(req.image.to_png_base64())?,
        "mask_png_base64": png(req.mask.to_png_base64())?,
        "prompt": req.prompt,
        "seed": req.seed,
    });
    let reply = post_json(ep, &body, cancel)?;
    let image = RasterImage::from_png_base64(field_str(&reply, "image_png_base64", ep)?)
        .map_err(|e| BackendError::Malformed {
            kind: BackendKind::Stylizer,
            message: e.to_string(),
        })?;
    if image.dims() != req.image.dims() {
        return Err(BackendError::Malformed {
            kind: BackendKind::Stylizer,
            message: format!(
                "expected {:?} image, got {:?}",
                req.image.dims(),
                image.dims()
            ),
        });
    }
    Ok(image)
}

const OUTLINE_RADIUS: i64 = 2;
const SHADOW_OFFSET: i64 = 3;

/// Local stylizer: a vertical two-color gradient fill chosen from the prompt
/// hash, a 2 px outline along the mask edge and a 3 px offset shadow, all
/// confined to the mask and blended over the input by mask coverage.
pub fn stylize_local(req: &StylizeRequest) -> RasterImage {
    let (w, h) = req.image.dims();
    let key = digest(&[b"stylize", req.prompt.as_bytes(), &req.seed.to_le_bytes()]);
    let top = vivid(&key[0..3]);
    let bottom = vivid(&key[3..6]);
    let outline = [top[0] * 0.25, top[1] * 0.25, top[2] * 0.25];

    let inside = |x: i64, y: i64| -> bool {
        x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && req.mask.get(x as u32, y as u32) > 0.0
    };

    let (mut y0, mut y1) = (u32::MAX, 0u32);
    for y in 0..h {
        for x in 0..w {
            if req.mask.get(x, y) > 0.0 {
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
    }
    let mut out = req.image.clone();
    if y0 == u32::MAX {
        return out;
    }
    let span = (y1 - y0).max(1) as f64;

    for y in y0..=y1 {
        for x in 0..w {
            let m = req.mask.get(x, y) as f64;
            if m == 0.0 {
                continue;
            }
            let (xi, yi) = (x as i64, y as i64);
            let near_edge = (-OUTLINE_RADIUS..=OUTLINE_RADIUS).any(|dy| {
                (-OUTLINE_RADIUS..=OUTLINE_RADIUS).any(|dx| {
                    dx * dx + dy * dy <= OUTLINE_RADIUS * OUTLINE_RADIUS
                        && !inside(xi + dx, yi + dy)
                })
            });
            let style = if near_edge {
                outline
            } else {
                let t = (y - y0) as f64 / span;
                let mut c = [
                    top[0] + (bottom[0] - top[0]) * t,
                    top[1] + (bottom[1] - top[1]) * t,
                    top[2] + (bottom[2] - top[2]) * t,
                ];
                if !inside(xi - SHADOW_OFFSET, yi - SHADOW_OFFSET) {
                    c.iter_mut().for_each(|v| *v *= 0.6);
                }
                c
            };
            let [r, g, b, a] = out.pixel(x, y);
            let mix = |s: f64, d: u8| (m * s + (1.0 - m) * d as f64).round().clamp(0.0, 255.0) as u8;
            out.set_pixel(
                x,
                y,
                [
                    mix(style[0], r),
                    mix(style[1], g),
                    mix(style[2], b),
                    mix(255.0, a),
                ],
            );
        }
    }
    out
}

fn vivid(bytes: &[u8]) -> [f64; 3] {
    // lift every channel into the upper half so fills read on dark and light grounds
    [
        128.0 + (bytes[0] as f64) / 2.0,
        128.0 + (bytes[1] as f64) / 2.0,
        128.0 + (bytes[2] as f64) / 2.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(mask: CoverageMask) -> StylizeRequest {
        let mut image = RasterImage::new(32, 24);
        for y in 0..24 {
            for x in 0..32 {
                image.set_pixel(x, y, [(x * 7) as u8, (y * 9) as u8, 77, 255]);
            }
        }
        StylizeRequest {
            image,
            mask,
            prompt: "neon chrome".into(),
            seed: 3,
        }
    }

    #[test]
    fn zero_mask_returns_input() {
        let req = request(CoverageMask::new(32, 24));
        assert_eq!(stylize_text(&req, None, None).unwrap(), req.image);
    }

    #[test]
    fn masked_region_changes_rest_does_not() {
        let mut mask = CoverageMask::new(32, 24);
        for y in 4..20 {
            for x in 6..26 {
                mask.set(x, y, if x == 6 { 0.5 } else { 1.0 });
            }
        }
        let req = request(mask.clone());
        let a = stylize_text(&req, None, None).unwrap();
        let b = stylize_text(&req, None, None).unwrap();
        assert_eq!(a, b);
        let mut changed = 0;
        for y in 0..24 {
            for x in 0..32 {
                if mask.get(x, y) == 0.0 {
                    assert_eq!(a.pixel(x, y), req.image.pixel(x, y));
                } else if a.pixel(x, y) != req.image.pixel(x, y) {
                    changed += 1;
                }
            }
        }
        assert!(changed > 100);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let mut req = request(CoverageMask::new(32, 24));
        req.mask = CoverageMask::new(8, 8);
        assert!(matches!(stylize_text(&req, None, None), Err(BackendError::Input(_))));
    }
}
