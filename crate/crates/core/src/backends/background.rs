use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::http::{field_str, post_json};
use super::wire::BackgroundRequest;
use super::{digest, BackendEndpoint, BackendError, BackendKind, CancelToken};
use crate::doc::{BackgroundSource, ProceduralSpec};
use crate::raster::{RasterImage, Rgba};

#[derive(Debug, Clone)]
pub struct BackgroundOutput {
    pub image: RasterImage,
    pub source: BackgroundSource,
    pub diagnostics: Vec<String>,
}

/// Background of exactly `dims`. With an endpoint the remote image is
/// resized and center-cropped to `dims` if needed; without one a procedural
/// background seeded by `(prompt, seed, dims)` is produced.
pub fn generate_background(
    prompt: &str,
    dims: (u32, u32),
    seed: u64,
    endpoint: Option<&BackendEndpoint>,
    cancel: Option<&CancelToken>,
) -> Result<BackgroundOutput, BackendError> {
    let (w, h) = dims;
    if w == 0 || h == 0 {
        return Err(BackendError::Input(format!("invalid dims {w}x{h}")));
    }
    let Some(ep) = endpoint else {
        let spec = ProceduralSpec::GradientNoise {
            prompt: prompt.to_string(),
            seed,
        };
        return Ok(BackgroundOutput {
            image: procedural_background(&spec, dims),
            source: BackgroundSource::Procedural { spec },
            diagnostics: Vec::new(),
        });
    };

    let body = serde_json::to_value(BackgroundRequest {
        prompt: prompt.to_string(),
        width: w,
        height: h,
        seed,
    })
    .expect("serializable");
    let reply = post_json(ep, &body, cancel)?;
    let b64 = field_str(&reply, "image_png_base64", ep)?;
    let image = RasterImage::from_png_base64(b64).map_err(|e| BackendError::Malformed {
        kind: BackendKind::Background,
        message: e.to_string(),
    })?;
    let mut diagnostics = Vec::new();
    let image = if image.dims() != dims {
        diagnostics.push(format!(
            "background: backend returned {}x{}, resized and cropped to {w}x{h}",
            image.width(),
            image.height()
        ));
        image.resize_cover(w, h)
    } else {
        image
    };
    Ok(BackgroundOutput {
        image,
        source: BackgroundSource::Generated {
            prompt: prompt.to_string(),
            backend_id: ep.url.clone(),
            seed,
        },
        diagnostics,
    })
}

fn random_color(rng: &mut ChaCha8Rng) -> [f64; 3] {
    // hue around the wheel, moderate saturation, value spread across the range
    let hue: f64 = rng.random_range(0.0..360.0);
    let sat: f64 = rng.random_range(0.35..0.85);
    let val: f64 = rng.random_range(0.15..0.95);
    let c = val * sat;
    let hp = hue / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = val - c;
    [(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0]
}

#[inline]
fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Deterministic background for a procedural spec.
pub fn procedural_background(spec: &ProceduralSpec, dims: (u32, u32)) -> RasterImage {
    let (w, h) = dims;
    match spec {
        ProceduralSpec::Solid { color } => {
            let c = Rgba::parse_hex(color).unwrap_or(Rgba([0, 0, 0, 255]));
            RasterImage::filled(w, h, c.0)
        }
        ProceduralSpec::GradientNoise { prompt, seed } => gradient_noise(prompt, *seed, w, h),
    }
}

fn gradient_noise(prompt: &str, seed: u64, w: u32, h: u32) -> RasterImage {
    let key = digest(&[
        b"background",
        prompt.as_bytes(),
        &seed.to_le_bytes(),
        &w.to_le_bytes(),
        &h.to_le_bytes(),
    ]);
    let mut rng = ChaCha8Rng::from_seed(key);

    let n_stops = rng.random_range(2..=4usize);
    let mut stops: Vec<(f64, [f64; 3])> = (0..n_stops)
        .map(|i| {
            let pos = if i == 0 {
                0.0
            } else if i == n_stops - 1 {
                1.0
            } else {
                rng.random_range(0.15..0.85)
            };
            (pos, random_color(&mut rng))
        })
        .collect();
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));

    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (dx, dy) = (angle.cos(), angle.sin());
    // projection range over the canvas corners
    let corners = [(0.0, 0.0), (w as f64, 0.0), (0.0, h as f64), (w as f64, h as f64)];
    let projs: Vec<f64> = corners.iter().map(|(x, y)| x * dx + y * dy).collect();
    let pmin = projs.iter().copied().fold(f64::INFINITY, f64::min);
    let pmax = projs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (pmax - pmin).max(1.0);

    // low-frequency value noise on a coarse lattice
    let cells = 4usize;
    let cell_w = w as f64 / cells as f64;
    let cell_h = h as f64 / cells as f64;
    let lattice: Vec<f64> = (0..(cells + 1) * (cells + 1))
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let amp: f64 = rng.random_range(10.0..28.0);

    let mut img = RasterImage::new(w, h);
    let buf = img.as_raw_mut();
    for y in 0..h {
        let fy = (y as f64 + 0.5) / cell_h;
        let gy = (fy.floor() as usize).min(cells - 1);
        let ty = smoothstep(fy - gy as f64);
        for x in 0..w {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let t = ((px * dx + py * dy) - pmin) / span;
            let mut k = 0;
            while k + 2 < stops.len() && t > stops[k + 1].0 {
                k += 1;
            }
            let (p0, c0) = stops[k];
            let (p1, c1) = stops[k + 1];
            let local = if p1 > p0 {
                ((t - p0) / (p1 - p0)).clamp(0.0, 1.0)
            } else {
                0.0
            };

            let fx = px / cell_w;
            let gx = (fx.floor() as usize).min(cells - 1);
            let tx = smoothstep(fx - gx as f64);
            let l = |ix: usize, iy: usize| lattice[iy * (cells + 1) + ix];
            let top = l(gx, gy) * (1.0 - tx) + l(gx + 1, gy) * tx;
            let bottom = l(gx, gy + 1) * (1.0 - tx) + l(gx + 1, gy + 1) * tx;
            let noise = (top * (1.0 - ty) + bottom * ty) * amp;

            let o = (y as usize * w as usize + x as usize) * 4;
            for c in 0..3 {
                let v = c0[c] + (c1[c] - c0[c]) * local + noise;
                buf[o + c] = v.round().clamp(0.0, 255.0) as u8;
            }
            buf[o + 3] = 255;
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_fallback_is_deterministic() {
        let a = generate_background("jazz night", (96, 128), 7, None, None).unwrap();
        let b = generate_background("jazz night", (96, 128), 7, None, None).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.image.dims(), (96, 128));
        assert!(matches!(a.source, BackgroundSource::Procedural { .. }));
    }

    #[test]
    fn seeds_change_many_pixels() {
        let a = generate_background("jazz night", (96, 128), 1, None, None).unwrap();
        let b = generate_background("jazz night", (96, 128), 2, None, None).unwrap();
        let differing = (0..128)
            .flat_map(|y| (0..96).map(move |x| (x, y)))
            .filter(|&(x, y)| a.image.pixel(x, y) != b.image.pixel(x, y))
            .count();
        assert!(differing * 100 >= 96 * 128, "{differing}");
    }

    #[test]
    fn solid_spec() {
        let img = procedural_background(
            &ProceduralSpec::Solid {
                color: "#102030".into(),
            },
            (4, 4),
        );
        assert_eq!(img.pixel(3, 3), [0x10, 0x20, 0x30, 255]);
    }
}
