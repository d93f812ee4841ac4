use thiserror::Error;

use super::registry::{FontRegistry, LoadedFont};
use crate::doc::{Alignment, ElementId, TextElement};

/// Auto-fit never shrinks text below this size.
pub const MIN_FONT_SIZE: f64 = 6.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("element {element_id} does not fit its box even at {min}px (needs {required:.2}px)", min = MIN_FONT_SIZE)]
    DoesNotFit { element_id: ElementId, required: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextMetrics {
    /// Widest line advance.
    pub width: f64,
    /// `line_count * line_height`.
    pub height: f64,
    pub line_count: usize,
    pub line_height: f64,
}

/// One shaped glyph. `x` is the pen position (left of the advance box) and
/// `baseline` the y of the baseline, both in canvas pixels before rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionedGlyph {
    pub codepoint: char,
    pub glyph_id: u16,
    pub x: f64,
    pub baseline: f64,
    /// Advance including kerning to the next glyph on the line.
    pub advance: f64,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphRun {
    pub element_id: ElementId,
    /// Font actually used (after fallback).
    pub font_id: String,
    pub fell_back: bool,
    pub requested_size: f64,
    pub applied_size: f64,
    pub glyphs: Vec<PositionedGlyph>,
    pub line_widths: Vec<f64>,
    /// Sum of all glyph advances over every line.
    pub total_advance: f64,
    pub line_count: usize,
}

impl GlyphRun {
    pub fn was_shrunk(&self) -> bool {
        self.applied_size < self.requested_size
    }

    /// The text as drawn, rebuilt from the glyph sequence: a codepoint is kept
    /// only when the font maps it to the glyph that was drawn and that glyph
    /// is not `.notdef`; anything else reads back as U+FFFD.
    pub fn drawn_text(&self, registry: &FontRegistry) -> String {
        let font = registry.resolve(&self.font_id).font;
        let mut out = String::new();
        let mut line = 0;
        for g in &self.glyphs {
            while line < g.line {
                out.push('\n');
                line += 1;
            }
            let expected = font.glyph_id(g.codepoint).0;
            if expected == g.glyph_id && (g.glyph_id != 0 || g.codepoint.is_whitespace()) {
                out.push(g.codepoint);
            } else {
                out.push(char::REPLACEMENT_CHARACTER);
            }
        }
        while line + 1 < self.line_count {
            out.push('\n');
            line += 1;
        }
        out
    }
}

struct LineGlyphs {
    glyphs: Vec<(char, u16, f64)>,
    width_units: f64,
}

fn shape_lines(font: &LoadedFont, content: &str) -> Vec<LineGlyphs> {
    content
        .split('\n')
        .map(|line| {
            let ids: Vec<(char, ab_glyph::GlyphId)> =
                line.chars().map(|c| (c, font.glyph_id(c))).collect();
            let mut glyphs = Vec::with_capacity(ids.len());
            let mut width = 0.0;
            for (i, &(c, id)) in ids.iter().enumerate() {
                let mut adv = font.advance_units(id);
                if let Some(&(_, next)) = ids.get(i + 1) {
                    adv += font.kern_units(id, next);
                }
                width += adv;
                glyphs.push((c, id.0, adv));
            }
            LineGlyphs {
                glyphs,
                width_units: width.max(0.0),
            }
        })
        .collect()
}

/// Width of the widest line and total block height at `font_size`.
/// Unknown font ids resolve to the registry fallback.
pub fn measure_text(
    registry: &FontRegistry,
    content: &str,
    font_id: &str,
    font_size: f64,
) -> TextMetrics {
    let font = registry.resolve(font_id).font;
    let lines = shape_lines(font, content);
    let scale = font.metrics.scale(font_size);
    let width = lines.iter().map(|l| l.width_units).fold(0.0, f64::max) * scale;
    let line_height = font.metrics.line_height(font_size);
    TextMetrics {
        width,
        height: line_height * lines.len() as f64,
        line_count: lines.len(),
        line_height,
    }
}

/// Positions the element's glyphs inside its box, shrinking the font
/// uniformly when the block overflows the box.
pub fn layout_glyphs(
    registry: &FontRegistry,
    element: &TextElement,
    canvas: (u32, u32),
) -> Result<GlyphRun, LayoutError> {
    let _ = canvas;
    let t = &element.typography;
    let m = measure_text(registry, &element.content, &t.font_id, t.font_size);
    let mut factor: f64 = 1.0;
    if m.width > t.box_width as f64 {
        factor = factor.min(t.box_width as f64 / m.width);
    }
    if m.height > t.box_height as f64 {
        factor = factor.min(t.box_height as f64 / m.height);
    }
    let size = t.font_size * factor;
    if factor < 1.0 && size < MIN_FONT_SIZE {
        return Err(LayoutError::DoesNotFit {
            element_id: element.id.clone(),
            required: size,
        });
    }
    Ok(layout_at_size(registry, element, size))
}

/// Lays the element out at exactly `size`, without fitting.
pub(crate) fn layout_at_size(
    registry: &FontRegistry,
    element: &TextElement,
    size: f64,
) -> GlyphRun {
    let t = &element.typography;
    let resolved = registry.resolve(&t.font_id);
    let font = resolved.font;
    let scale = font.metrics.scale(size);
    let lines = shape_lines(font, &element.content);
    let line_height = font.metrics.line_height(size);
    let block_height = line_height * lines.len() as f64;
    let top = t.y as f64 + (t.box_height as f64 - block_height) / 2.0;
    let ascent = font.metrics.ascent * scale;

    let mut glyphs = Vec::new();
    let mut line_widths = Vec::with_capacity(lines.len());
    let mut total_advance = 0.0;
    for (li, line) in lines.iter().enumerate() {
        let width = line.width_units * scale;
        line_widths.push(width);
        let start = match t.alignment {
            Alignment::Left => t.x as f64,
            Alignment::Center => t.x as f64 + (t.box_width as f64 - width) / 2.0,
            Alignment::Right => t.x as f64 + t.box_width as f64 - width,
        };
        let baseline = top + li as f64 * line_height + ascent;
        let mut pen = start;
        for &(c, gid, adv_units) in &line.glyphs {
            let advance = adv_units * scale;
            glyphs.push(PositionedGlyph {
                codepoint: c,
                glyph_id: gid,
                x: pen,
                baseline,
                advance,
                line: li,
            });
            pen += advance;
            total_advance += advance;
        }
    }
    GlyphRun {
        element_id: element.id.clone(),
        font_id: resolved.id.to_string(),
        fell_back: resolved.fell_back,
        requested_size: t.font_size,
        applied_size: size,
        glyphs,
        line_widths,
        total_advance: total_advance.max(0.0),
        line_count: lines.len(),
    }
}
