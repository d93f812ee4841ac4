//! Pixel buffers shared by every stage: 8-bit RGBA images, float coverage
//! masks, sRGB colors and PNG encoding.

use std::io::Cursor;
use std::path::Path;

use base64::Engine as _;
use image::{ImageFormat, RgbaImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("buffer length {actual} does not match {width}x{height}")]
    BadLength {
        width: u32,
        height: u32,
        actual: usize,
    },
    #[error("image decode failed: {0}")]
    Decode(String),
    #[error("image encode failed: {0}")]
    Encode(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Row-major sRGB RGBA image, 8 bits per channel, straight (non-premultiplied) alpha.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl RasterImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; width as usize * height as usize * 4],
        }
    }

    pub fn filled(width: u32, height: u32, rgba: [u8; 4]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 4);
        for _ in 0..(width as usize * height as usize) {
            data.extend_from_slice(&rgba);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, RasterError> {
        if data.len() != width as usize * height as usize * 4 {
            return Err(RasterError::BadLength {
                width,
                height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn as_raw_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 4
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        let o = self.offset(x, y);
        [
            self.data[o],
            self.data[o + 1],
            self.data[o + 2],
            self.data[o + 3],
        ]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgba: [u8; 4]) {
        let o = self.offset(x, y);
        self.data[o..o + 4].copy_from_slice(&rgba);
    }

    pub fn to_png(&self) -> Result<Vec<u8>, RasterError> {
        let img = RgbaImage::from_raw(self.width, self.height, self.data.clone())
            .expect("length checked at construction");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)
            .map_err(|e| RasterError::Encode(e.to_string()))?;
        Ok(out.into_inner())
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, RasterError> {
        let img = image::load_from_memory(bytes)
            .map_err(|e| RasterError::Decode(e.to_string()))?
            .to_rgba8();
        let (w, h) = img.dimensions();
        Ok(Self {
            width: w,
            height: h,
            data: img.into_raw(),
        })
    }

    pub fn to_png_base64(&self) -> Result<String, RasterError> {
        Ok(base64::engine::general_purpose::STANDARD.encode(self.to_png()?))
    }

    pub fn from_png_base64(text: &str) -> Result<Self, RasterError> {
        let bytes = decode_base64(text)?;
        Self::from_png(&bytes)
    }

    pub fn load(path: &Path) -> Result<Self, RasterError> {
        Self::from_png(&std::fs::read(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), RasterError> {
        std::fs::write(path, self.to_png()?)?;
        Ok(())
    }

    /// Scales to cover `width`x`height` (preserving aspect) and center-crops.
    pub fn resize_cover(&self, width: u32, height: u32) -> RasterImage {
        if self.dims() == (width, height) {
            return self.clone();
        }
        let img = RgbaImage::from_raw(self.width, self.height, self.data.clone())
            .expect("length checked at construction");
        let scale = f64::max(
            width as f64 / self.width as f64,
            height as f64 / self.height as f64,
        );
        let sw = ((self.width as f64 * scale).ceil() as u32).max(width);
        let sh = ((self.height as f64 * scale).ceil() as u32).max(height);
        let scaled = image::imageops::resize(&img, sw, sh, image::imageops::FilterType::Triangle);
        let x0 = (sw - width) / 2;
        let y0 = (sh - height) / 2;
        let cropped = image::imageops::crop_imm(&scaled, x0, y0, width, height).to_image();
        RasterImage {
            width,
            height,
            data: cropped.into_raw(),
        }
    }
}

pub(crate) fn decode_base64(text: &str) -> Result<Vec<u8>, RasterError> {
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    base64::engine::general_purpose::STANDARD
        .decode(cleaned)
        .map_err(|e| RasterError::Decode(format!("base64: {e}")))
}

/// Single-channel scalar mask with values in `[0, 1]`.
#[derive(Clone, PartialEq)]
pub struct CoverageMask {
    width: u32,
    height: u32,
    values: Vec<f32>,
}

impl std::fmt::Debug for CoverageMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoverageMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl CoverageMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        Self {
            width,
            height,
            values: vec![value.clamp(0.0, 1.0); width as usize * height as usize],
        }
    }

    /// Values are clamped into `[0, 1]`; NaN becomes 0.
    pub fn from_values(width: u32, height: u32, values: Vec<f32>) -> Result<Self, RasterError> {
        if values.len() != width as usize * height as usize {
            return Err(RasterError::BadLength {
                width,
                height,
                actual: values.len(),
            });
        }
        let values = values
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: f32) {
        self.values[y as usize * self.width as usize + x as usize] = v.clamp(0.0, 1.0);
    }

    pub fn max_value(&self) -> f32 {
        self.values.iter().copied().fold(0.0, f32::max)
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// 8-bit quantization (`round(v * 255)`), the on-disk representation.
    pub fn to_u8(&self) -> Vec<u8> {
        self.values.iter().map(|&v| quantize_unit(v)).collect()
    }

    pub fn from_u8(width: u32, height: u32, levels: &[u8]) -> Result<Self, RasterError> {
        Self::from_values(width, height, levels.iter().map(|&q| unit_from_u8(q)).collect())
    }

    pub fn to_png(&self) -> Result<Vec<u8>, RasterError> {
        let img = image::GrayImage::from_raw(self.width, self.height, self.to_u8())
            .expect("length checked at construction");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)
            .map_err(|e| RasterError::Encode(e.to_string()))?;
        Ok(out.into_inner())
    }

    /// Decodes an 8-bit grayscale PNG (other color types are converted to luma).
    pub fn from_png(bytes: &[u8]) -> Result<Self, RasterError> {
        let img = image::load_from_memory(bytes)
            .map_err(|e| RasterError::Decode(e.to_string()))?
            .to_luma8();
        let (w, h) = img.dimensions();
        Self::from_u8(w, h, img.as_raw())
    }

    pub fn to_png_base64(&self) -> Result<String, RasterError> {
        Ok(base64::engine::general_purpose::STANDARD.encode(self.to_png()?))
    }

    pub fn from_png_base64(text: &str) -> Result<Self, RasterError> {
        Self::from_png(&decode_base64(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, RasterError> {
        Self::from_png(&std::fs::read(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), RasterError> {
        std::fs::write(path, self.to_png()?)?;
        Ok(())
    }
}

#[inline]
pub(crate) fn quantize_unit(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[inline]
pub(crate) fn unit_from_u8(q: u8) -> f32 {
    q as f32 / 255.0
}

/// sRGB color parsed from `#RRGGBB` or `#RRGGBBAA`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgba(pub [u8; 4]);

impl Rgba {
    pub fn parse_hex(s: &str) -> Option<Self> {
        let hex = s.strip_prefix('#')?;
        if !(hex.len() == 6 || hex.len() == 8) || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return None;
        }
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).ok();
        let a = if hex.len() == 8 { byte(6)? } else { 255 };
        Some(Rgba([byte(0)?, byte(2)?, byte(4)?, a]))
    }

    pub fn to_hex(self) -> String {
        let [r, g, b, a] = self.0;
        if a == 255 {
            format!("#{r:02X}{g:02X}{b:02X}")
        } else {
            format!("#{r:02X}{g:02X}{b:02X}{a:02X}")
        }
    }

    /// WCAG relative luminance of the color channels (alpha ignored).
    pub fn relative_luminance(self) -> f64 {
        relative_luminance(self.0[0], self.0[1], self.0[2])
    }
}

#[inline]
pub fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

pub fn relative_luminance(r: u8, g: u8, b: u8) -> f64 {
    0.2126 * srgb_to_linear(r) + 0.7152 * srgb_to_linear(g) + 0.0722 * srgb_to_linear(b)
}
