//! Deterministic glyph layout and rasterization of text elements.

mod layout;
mod registry;
mod render;

pub use layout::{
    layout_glyphs, measure_text, GlyphRun, LayoutError, PositionedGlyph, TextMetrics,
    MIN_FONT_SIZE,
};
pub use registry::{
    FontMetrics, FontRegistry, LoadedFont, RegistryError, Resolved, MONO_TEST_ID, SANS_ID,
};
pub use render::{rasterize_element, render_all, RenderOutput, RenderedElement};
