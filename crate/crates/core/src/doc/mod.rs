//! Editable poster document: canvas, background, text elements and art-text
//! layers. Documents are plain values; every operation returns a new one.

mod codec;
mod edit;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{CoverageMask, RasterImage, Rgba};

pub use codec::{deserialize, serialize};
pub use edit::{apply_edit, EditCommand, EditError};

pub const MIN_CANVAS: u32 = 64;
pub const MAX_CANVAS: u32 = 8192;

/// Metadata key holding the edit revision counter.
pub const REVISION_KEY: &str = "revision";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DocError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

impl DocError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        DocError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub String);

impl ElementId {
    pub fn new(id: impl Into<String>) -> Self {
        ElementId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ElementId {
    fn from(s: &str) -> Self {
        ElementId(s.to_string())
    }
}

/// Text element category, in decreasing order of design prominence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Title,
    Subtitle,
    Information,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Title => "title",
            Role::Subtitle => "subtitle",
            Role::Information => "information",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "title" => Some(Role::Title),
            "subtitle" => Some(Role::Subtitle),
            "information" => Some(Role::Information),
            _ => None,
        }
    }

    /// Lower is more prominent.
    pub fn priority(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    Left,
    Center,
    Right,
}

impl Alignment {
    pub fn as_str(self) -> &'static str {
        match self {
            Alignment::Left => "left",
            Alignment::Center => "center",
            Alignment::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<Alignment> {
        match s {
            "left" => Some(Alignment::Left),
            "center" => Some(Alignment::Center),
            "right" => Some(Alignment::Right),
            _ => None,
        }
    }
}

/// Position, size, font, color, alignment and rotation of one text element.
///
/// Pixel coordinates with the origin at the top-left and y growing downward.
/// `rotation_deg` is counterclockwise about the box center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypographySpec {
    pub x: i64,
    pub y: i64,
    pub box_width: i64,
    pub box_height: i64,
    pub font_id: String,
    pub font_size: f64,
    pub color: String,
    pub alignment: Alignment,
    pub rotation_deg: f64,
}

/// A typography invariant violation: the offending field (or `None` for the
/// box as a whole) and a message.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecViolation {
    pub field: Option<&'static str>,
    pub rule: &'static str,
    pub message: String,
}

impl SpecViolation {
    fn new(field: Option<&'static str>, rule: &'static str, message: String) -> Self {
        Self {
            field,
            rule,
            message,
        }
    }

    /// Joins the field onto a prefix path, e.g. `elements[0].typography.color`.
    pub fn path(&self, prefix: &str) -> String {
        match self.field {
            Some(f) => format!("{prefix}.{f}"),
            None => prefix.to_string(),
        }
    }
}

impl TypographySpec {
    pub fn right(&self) -> i64 {
        self.x + self.box_width
    }

    pub fn bottom(&self) -> i64 {
        self.y + self.box_height
    }

    pub fn rgba(&self) -> Option<Rgba> {
        Rgba::parse_hex(&self.color)
    }

    /// Checks every invariant against a `canvas_width`x`canvas_height` canvas.
    pub fn violations(&self, canvas_width: u32, canvas_height: u32) -> Vec<SpecViolation> {
        let mut out = Vec::new();
        if self.box_width <= 0 {
            out.push(SpecViolation::new(
                Some("box_width"),
                "nonpositive_box",
                format!("box_width must be > 0, got {}", self.box_width),
            ));
        }
        if self.box_height <= 0 {
            out.push(SpecViolation::new(
                Some("box_height"),
                "nonpositive_box",
                format!("box_height must be > 0, got {}", self.box_height),
            ));
        }
        if self.x < 0
            || self.y < 0
            || self.right() > canvas_width as i64
            || self.bottom() > canvas_height as i64
        {
            out.push(SpecViolation::new(
                None,
                "box_out_of_bounds",
                format!(
                    "box ({}, {}, {}x{}) is not inside the {}x{} canvas",
                    self.x, self.y, self.box_width, self.box_height, canvas_width, canvas_height
                ),
            ));
        }
        if !(self.font_size.is_finite() && self.font_size > 0.0) {
            out.push(SpecViolation::new(
                Some("font_size"),
                "nonpositive_font_size",
                format!("font_size must be > 0, got {}", self.font_size),
            ));
        } else if self.font_size > self.box_height as f64 {
            out.push(SpecViolation::new(
                Some("font_size"),
                "font_size_exceeds_box",
                format!(
                    "font_size {} exceeds box_height {}",
                    self.font_size, self.box_height
                ),
            ));
        }
        if self.rgba().is_none() {
            out.push(SpecViolation::new(
                Some("color"),
                "bad_color",
                format!("color {:?} is not #RRGGBB or #RRGGBBAA", self.color),
            ));
        }
        if !(self.rotation_deg.is_finite() && (-180.0..180.0).contains(&self.rotation_deg)) {
            out.push(SpecViolation::new(
                Some("rotation_deg"),
                "bad_rotation",
                format!("rotation_deg {} is outside [-180, 180)", self.rotation_deg),
            ));
        }
        if self.font_id.trim().is_empty() {
            out.push(SpecViolation::new(
                Some("font_id"),
                "empty_font_id",
                "font_id is empty".to_string(),
            ));
        }
        out
    }

    /// Closed-interval intersection test: boxes sharing an edge row or column overlap.
    pub fn overlaps(&self, other: &TypographySpec) -> bool {
        self.x <= other.right()
            && other.x <= self.right()
            && self.y <= other.bottom()
            && other.y <= self.bottom()
    }

    /// Geometry and font fields, i.e. everything except color.
    pub(crate) fn same_geometry(&self, other: &TypographySpec) -> bool {
        self.x == other.x
            && self.y == other.y
            && self.box_width == other.box_width
            && self.box_height == other.box_height
            && self.font_id == other.font_id
            && self.font_size == other.font_size
            && self.alignment == other.alignment
            && self.rotation_deg == other.rotation_deg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextElement {
    pub id: ElementId,
    pub role: Role,
    /// Explicit `\n` separates lines; there is no automatic wrapping.
    pub content: String,
    pub typography: TypographySpec,
    /// Set when an edit removed this element's art layer; cleared by restyling.
    #[serde(default)]
    pub restyle_pending: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProceduralSpec {
    /// Seeded gradient plus low-frequency value noise.
    GradientNoise { prompt: String, seed: u64 },
    Solid { color: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundSource {
    Generated {
        prompt: String,
        backend_id: String,
        seed: u64,
    },
    UserProvided {
        image_ref: String,
    },
    Procedural {
        spec: ProceduralSpec,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundLayer {
    pub source: BackgroundSource,
    /// Resolved pixels; `None` until the background stage (or a loader) fills it.
    pub pixels: Option<RasterImage>,
}

impl BackgroundLayer {
    pub fn unresolved(source: BackgroundSource) -> Self {
        Self {
            source,
            pixels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtTextLayer {
    pub element_id: ElementId,
    pub style_prompt: String,
    /// Pre-feather coverage of the stylized element.
    pub mask: CoverageMask,
    pub stylized_pixels: RasterImage,
    pub feather_sigma: f64,
    /// Set when the background changed underneath the layer.
    pub stale: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosterDocument {
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub background: BackgroundLayer,
    pub elements: Vec<TextElement>,
    pub art_layers: Vec<ArtTextLayer>,
    pub metadata: BTreeMap<String, String>,
}

impl PosterDocument {
    /// Empty document over the given background.
    pub fn new(canvas_width: u32, canvas_height: u32, background: BackgroundLayer) -> Self {
        Self {
            canvas_width,
            canvas_height,
            background,
            elements: Vec::new(),
            art_layers: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.canvas_width, self.canvas_height)
    }

    pub fn element(&self, id: &ElementId) -> Option<&TextElement> {
        self.elements.iter().find(|e| &e.id == id)
    }

    pub fn element_index(&self, id: &ElementId) -> Option<usize> {
        self.elements.iter().position(|e| &e.id == id)
    }

    pub fn art_layer(&self, id: &ElementId) -> Option<&ArtTextLayer> {
        self.art_layers.iter().find(|l| &l.element_id == id)
    }

    pub fn revision(&self) -> u64 {
        self.metadata
            .get(REVISION_KEY)
            .and_then(|r| r.parse().ok())
            .unwrap_or(0)
    }

    pub(crate) fn bump_revision(&mut self) {
        let next = self.revision() + 1;
        self.metadata.insert(REVISION_KEY.to_string(), next.to_string());
    }

    /// Returns a copy with `layer` attached (replacing any previous layer for the
    /// same element) and the element's pending-restyle flag cleared.
    pub fn with_art_layer(&self, layer: ArtTextLayer) -> Result<PosterDocument, DocError> {
        let mut doc = self.clone();
        let idx = doc.element_index(&layer.element_id).ok_or_else(|| {
            DocError::schema(
                "art_layers",
                format!("unknown element id {}", layer.element_id),
            )
        })?;
        doc.elements[idx].restyle_pending = false;
        doc.art_layers.retain(|l| l.element_id != layer.element_id);
        doc.art_layers.push(layer);
        doc.validate()?;
        Ok(doc)
    }

    /// First violated invariant, if any.
    pub fn validate(&self) -> Result<(), DocError> {
        for (name, v) in [
            ("canvas_width", self.canvas_width),
            ("canvas_height", self.canvas_height),
        ] {
            if !(MIN_CANVAS..=MAX_CANVAS).contains(&v) {
                return Err(DocError::schema(
                    name,
                    format!("{v} is outside [{MIN_CANVAS}, {MAX_CANVAS}]"),
                ));
            }
        }
        let dims = self.dims();
        if let Some(px) = &self.background.pixels {
            if px.dims() != dims {
                return Err(DocError::schema(
                    "background.pixels",
                    format!("{:?} does not match canvas {:?}", px.dims(), dims),
                ));
            }
        }
        let mut seen = HashSet::new();
        for (i, el) in self.elements.iter().enumerate() {
            let base = format!("elements[{i}]");
            if el.id.0.is_empty() {
                return Err(DocError::schema(format!("{base}.id"), "empty id"));
            }
            if !seen.insert(&el.id) {
                return Err(DocError::schema(
                    format!("{base}.id"),
                    format!("duplicate element id {}", el.id),
                ));
            }
            if el.content.trim().is_empty() {
                return Err(DocError::schema(
                    format!("{base}.content"),
                    "content is empty after trimming",
                ));
            }
            if let Some(v) = el
                .typography
                .violations(self.canvas_width, self.canvas_height)
                .into_iter()
                .next()
            {
                return Err(DocError::schema(
                    v.path(&format!("{base}.typography")),
                    v.message,
                ));
            }
        }
        let mut layered = HashSet::new();
        for (j, layer) in self.art_layers.iter().enumerate() {
            let base = format!("art_layers[{j}]");
            if !seen.contains(&layer.element_id) {
                return Err(DocError::schema(
                    format!("{base}.element_id"),
                    format!("references unknown element {}", layer.element_id),
                ));
            }
            if !layered.insert(&layer.element_id) {
                return Err(DocError::schema(
                    format!("{base}.element_id"),
                    format!("second art layer for element {}", layer.element_id),
                ));
            }
            if layer.mask.dims() != dims {
                return Err(DocError::schema(
                    format!("{base}.mask"),
                    format!("{:?} does not match canvas {:?}", layer.mask.dims(), dims),
                ));
            }
            if layer.stylized_pixels.dims() != dims {
                return Err(DocError::schema(
                    format!("{base}.stylized_pixels"),
                    format!(
                        "{:?} does not match canvas {:?}",
                        layer.stylized_pixels.dims(),
                        dims
                    ),
                ));
            }
            if !(layer.feather_sigma.is_finite() && layer.feather_sigma >= 0.0) {
                return Err(DocError::schema(
                    format!("{base}.feather_sigma"),
                    format!("must be >= 0, got {}", layer.feather_sigma),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn spec(x: i64, y: i64, w: i64, h: i64) -> TypographySpec {
        TypographySpec {
            x,
            y,
            box_width: w,
            box_height: h,
            font_id: "mono-test".into(),
            font_size: h as f64 * 0.8,
            color: "#FFFFFF".into(),
            alignment: Alignment::Center,
            rotation_deg: 0.0,
        }
    }

    pub fn element(id: &str, role: Role, content: &str, typography: TypographySpec) -> TextElement {
        TextElement {
            id: id.into(),
            role,
            content: content.into(),
            typography,
            restyle_pending: false,
        }
    }

    pub fn minimal_doc() -> PosterDocument {
        let mut doc = PosterDocument::new(
            200,
            300,
            BackgroundLayer::unresolved(BackgroundSource::Procedural {
                spec: ProceduralSpec::Solid {
                    color: "#202020".into(),
                },
            }),
        );
        doc.elements
            .push(element("t", Role::Title, "HELLO", spec(20, 20, 160, 40)));
        doc
    }
}
