//! Mask-guided blending, Gaussian mask feathering and layer flattening.
//!
//! `blend` computes `m * i1 + (1 - m) * i2` per channel (alpha included)
//! directly on sRGB values. Plain text is drawn with source-over; the
//! mask blend is reserved for art-text layers.

use thiserror::Error;

use crate::doc::{ElementId, PosterDocument};
use crate::raster::{CoverageMask, RasterImage};
use crate::text::RenderedElement;

/// Feather width at a 1024 px wide canvas; scales linearly with width.
pub const DEFAULT_FEATHER_SIGMA_AT_1024: f64 = 2.0;

pub fn default_feather_sigma(canvas_width: u32) -> f64 {
    DEFAULT_FEATHER_SIGMA_AT_1024 * canvas_width as f64 / 1024.0
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComposeError {
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((u32, u32), (u32, u32)),
    #[error("background pixels are not resolved")]
    BackgroundUnresolved,
    #[error("art layer for {0} is stale; restyle or remove it first")]
    StaleArtLayer(ElementId),
    #[error("rendered elements do not match the document: {0}")]
    RenderedMismatch(String),
}

/// Normalized 1-D Gaussian weights for offsets `-r..=r`, `r = ceil(3 * sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Separable Gaussian blur with replicate-edge padding. `sigma == 0` (or
/// negative) returns the mask unchanged.
pub fn gaussian_feather(mask: &CoverageMask, sigma: f64) -> CoverageMask {
    if !(sigma > 0.0) {
        return mask.clone();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let src = mask.values();

    let mut tmp = vec![0f64; src.len()];
    for y in 0..h {
        let row = &src[(y * w) as usize..((y + 1) * w) as usize];
        for x in 0..w {
            let mut acc = 0.0;
            for (j, wt) in k.iter().enumerate() {
                let sx = (x + j as i64 - r).clamp(0, w - 1);
                acc += wt * row[sx as usize] as f64;
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let mut out = vec![0f32; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, wt) in k.iter().enumerate() {
                let sy = (y + j as i64 - r).clamp(0, h - 1);
                acc += wt * tmp[(sy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc.clamp(0.0, 1.0) as f32;
        }
    }
    CoverageMask::from_values(mask.width(), mask.height(), out).expect("same dims")
}

/// `m * i1 + (1 - m) * i2` per channel, rounded to the nearest 8-bit value.
pub fn blend(
    i1: &RasterImage,
    i2: &RasterImage,
    m: &CoverageMask,
) -> Result<RasterImage, ComposeError> {
    if i1.dims() != i2.dims() {
        return Err(ComposeError::DimensionMismatch(i1.dims(), i2.dims()));
    }
    if i1.dims() != m.dims() {
        return Err(ComposeError::DimensionMismatch(i1.dims(), m.dims()));
    }
    let a = i1.as_raw();
    let b = i2.as_raw();
    let mut out = Vec::with_capacity(a.len());
    for (i, &mv) in m.values().iter().enumerate() {
        let mv = mv as f64;
        for c in 0..4 {
            let p = i * 4 + c;
            let v = mv * a[p] as f64 + (1.0 - mv) * b[p] as f64;
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(RasterImage::from_raw(i1.width(), i1.height(), out).expect("same dims"))
}

/// Source-over of straight-alpha `src` onto `dst`, in place.
pub fn source_over(dst: &mut RasterImage, src: &RasterImage) -> Result<(), ComposeError> {
    if dst.dims() != src.dims() {
        return Err(ComposeError::DimensionMismatch(dst.dims(), src.dims()));
    }
    let s = src.as_raw();
    let d = dst.as_raw_mut();
    for i in (0..s.len()).step_by(4) {
        let sa = s[i + 3];
        if sa == 0 {
            continue;
        }
        if sa == 255 {
            d[i..i + 4].copy_from_slice(&s[i..i + 4]);
            continue;
        }
        let a = sa as f64 / 255.0;
        let da = d[i + 3] as f64 / 255.0;
        let out_a = a + da * (1.0 - a);
        for c in 0..3 {
            let v = (s[i + c] as f64 * a + d[i + c] as f64 * da * (1.0 - a)) / out_a;
            d[i + c] = v.round().clamp(0.0, 255.0) as u8;
        }
        d[i + 3] = (out_a * 255.0).round().clamp(0.0, 255.0) as u8;
    }
    Ok(())
}

/// Flattens the whole layer stack.
pub fn flatten(
    doc: &PosterDocument,
    rendered: &[RenderedElement],
) -> Result<RasterImage, ComposeError> {
    flatten_until(doc, rendered, doc.elements.len())
}

/// Flattens the background plus elements `0..end` in document order. Each
/// element with an art layer is mask-blended; the rest are drawn with
/// source-over. A stale layer among those elements is an error.
pub fn flatten_until(
    doc: &PosterDocument,
    rendered: &[RenderedElement],
    end: usize,
) -> Result<RasterImage, ComposeError> {
    let mut current = doc
        .background
        .pixels
        .clone()
        .ok_or(ComposeError::BackgroundUnresolved)?;
    if current.dims() != doc.dims() {
        return Err(ComposeError::DimensionMismatch(current.dims(), doc.dims()));
    }
    if rendered.len() != doc.elements.len() {
        return Err(ComposeError::RenderedMismatch(format!(
            "{} rendered for {} elements",
            rendered.len(),
            doc.elements.len()
        )));
    }
    for el in doc.elements.iter().take(end) {
        if doc.art_layer(&el.id).is_some_and(|l| l.stale) {
            return Err(ComposeError::StaleArtLayer(el.id.clone()));
        }
    }
    for (el, r) in doc.elements.iter().zip(rendered).take(end) {
        if el.id != r.element_id {
            return Err(ComposeError::RenderedMismatch(format!(
                "expected {}, got {}",
                el.id, r.element_id
            )));
        }
        match doc.art_layer(&el.id) {
            Some(layer) => {
                let m = gaussian_feather(&layer.mask, layer.feather_sigma);
                current = blend(&layer.stylized_pixels, &current, &m)?;
            }
            None => source_over(&mut current, &r.pixels)?,
        }
    }
    Ok(current)
}
