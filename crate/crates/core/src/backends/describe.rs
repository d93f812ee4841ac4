use super::http::{field_str, post_json};
use super::wire::RefineRequest;
use super::{BackendEndpoint, BackendError, CancelToken};
use crate::raster::{relative_luminance, RasterImage};

/// Short prose description of an image from pixel statistics: overall
/// brightness, the dominant hue family and whether the top or bottom is lighter.
pub fn image_summary(image: &RasterImage) -> String {
    let (w, h) = image.dims();
    let n = (w as f64 * h as f64).max(1.0);
    let (mut r, mut g, mut b, mut lum) = (0.0, 0.0, 0.0, 0.0);
    let (mut top, mut bottom) = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            let [pr, pg, pb, _] = image.pixel(x, y);
            r += pr as f64;
            g += pg as f64;
            b += pb as f64;
            let l = relative_luminance(pr, pg, pb);
            lum += l;
            if y < h / 2 {
                top += l;
            } else {
                bottom += l;
            }
        }
    }
    let (r, g, b, lum) = (r / n, g / n, b / n, lum / n);
    let brightness = match lum {
        l if l < 0.08 => "very dark",
        l if l < 0.25 => "dark",
        l if l < 0.55 => "mid-tone",
        _ => "light",
    };
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let hue = if max - min < 20.0 {
        "neutral gray".to_string()
    } else if max == r {
        if g > b { "warm orange" } else { "red magenta" }.to_string()
    } else if max == g {
        if r > b { "yellow green" } else { "green teal" }.to_string()
    } else if r > g {
        "violet".to_string()
    } else {
        "blue".to_string()
    };
    let half = (n / 2.0).max(1.0);
    let slope = if top / half > bottom / half + 0.05 {
        ", lighter at the top"
    } else if bottom / half > top / half + 0.05 {
        ", lighter at the bottom"
    } else {
        ""
    };
    format!("a {brightness} {hue} background{slope}")
}

/// Describes an image through the prompt refiner's `describe` context when an
/// endpoint is given, else through [`image_summary`].
pub fn describe_image(
    image: &RasterImage,
    endpoint: Option<&BackendEndpoint>,
    cancel: Option<&CancelToken>,
) -> Result<String, BackendError> {
    let Some(ep) = endpoint else {
        return Ok(image_summary(image));
    };
    let b64 = image
        .to_png_base64()
        .map_err(|e| BackendError::Input(e.to_string()))?;
    let body = serde_json::to_value(RefineRequest {
        text: "describe this background".into(),
        context: "describe".into(),
        background_summary: None,
        image_png_base64: Some(b64),
    })
    .expect("serializable");
    let reply = post_json(ep, &body, cancel)?;
    Ok(field_str(&reply, "prompt", ep)?.to_string())
}
