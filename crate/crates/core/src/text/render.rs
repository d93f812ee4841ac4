use ab_glyph::{point, Font, GlyphId, OutlinedGlyph, PxScaleFactor};

use super::layout::{layout_at_size, layout_glyphs, GlyphRun, LayoutError, MIN_FONT_SIZE};
use super::registry::FontRegistry;
use crate::doc::{ElementId, PosterDocument, TypographySpec};
use crate::raster::{quantize_unit, unit_from_u8, CoverageMask, RasterImage, Rgba};

/// Canvas-sized rendering of one element: straight-alpha pixels in the
/// element color and the matching anti-aliased coverage (quantized to
/// 1/255 steps, so `coverage > 0` exactly where `alpha > 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedElement {
    pub element_id: ElementId,
    pub pixels: RasterImage,
    pub coverage: CoverageMask,
    pub run: GlyphRun,
}

#[derive(Debug, Clone, Default)]
pub struct RenderOutput {
    pub elements: Vec<RenderedElement>,
    pub warnings: Vec<String>,
}

/// Exact values at multiples of 90 degrees so quarter turns resample without drift.
fn cos_sin(deg: f64) -> (f64, f64) {
    let d = deg.rem_euclid(360.0);
    if d == 0.0 {
        (1.0, 0.0)
    } else if d == 90.0 {
        (0.0, 1.0)
    } else if d == 180.0 {
        (-1.0, 0.0)
    } else if d == 270.0 {
        (0.0, -1.0)
    } else {
        let r = d.to_radians();
        (r.cos(), r.sin())
    }
}

fn draw_glyphs(registry: &FontRegistry, run: &GlyphRun, width: u32, height: u32) -> Vec<f32> {
    let font = registry.resolve(&run.font_id).font;
    let s = (run.applied_size / font.metrics.units_per_em) as f32;
    let factor = PxScaleFactor {
        horizontal: s,
        vertical: s,
    };
    let mut acc = vec![0f32; width as usize * height as usize];
    for g in &run.glyphs {
        let Some(outline) = font.font.outline(GlyphId(g.glyph_id)) else {
            continue;
        };
        let glyph = GlyphId(g.glyph_id).with_scale_and_position(
            run.applied_size as f32,
            point(g.x as f32, g.baseline as f32),
        );
        let outlined = OutlinedGlyph::new(glyph, outline, factor);
        let min = outlined.px_bounds().min;
        let (ox, oy) = (min.x as i64, min.y as i64);
        outlined.draw(|px, py, c| {
            let x = ox + px as i64;
            let y = oy + py as i64;
            if x >= 0 && y >= 0 && x < width as i64 && y < height as i64 {
                let i = y as usize * width as usize + x as usize;
                acc[i] = (acc[i] + c).min(1.0);
            }
        });
    }
    acc
}

#[inline]
fn sample_bilinear(src: &[f32], width: u32, height: u32, fx: f64, fy: f64) -> f32 {
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = fx - x0;
    let ty = fy - y0;
    let at = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
            0.0
        } else {
            src[y as usize * width as usize + x as usize] as f64
        }
    };
    let (x0, y0) = (x0 as i64, y0 as i64);
    let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
    let bottom = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
    (top * (1.0 - ty) + bottom * ty) as f32
}

/// Rotates the coverage counterclockwise (as seen on screen, y down) by
/// `deg` about `(cx, cy)` using inverse-mapped bilinear sampling.
fn rotate_coverage(src: &[f32], width: u32, height: u32, deg: f64, cx: f64, cy: f64) -> Vec<f32> {
    let (cos, sin) = cos_sin(deg);
    let mut out = vec![0f32; src.len()];

    // ink bounds of the source
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
    for y in 0..height {
        for x in 0..width {
            if src[(y * width + x) as usize] > 0.0 {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x + 1);
                y1 = y1.max(y + 1);
            }
        }
    }
    if x0 == u32::MAX {
        return out;
    }
    // forward map: screen-CCW rotation with y pointing down
    let fwd = |x: f64, y: f64| {
        let (dx, dy) = (x - cx, y - cy);
        (cx + dx * cos + dy * sin, cy - dx * sin + dy * cos)
    };
    let corners = [
        fwd(x0 as f64, y0 as f64),
        fwd(x1 as f64, y0 as f64),
        fwd(x0 as f64, y1 as f64),
        fwd(x1 as f64, y1 as f64),
    ];
    let min_x = corners.iter().map(|c| c.0).fold(f64::INFINITY, f64::min).floor() - 1.0;
    let max_x = corners.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
    let min_y = corners.iter().map(|c| c.1).fold(f64::INFINITY, f64::min).floor() - 1.0;
    let max_y = corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
    let xr = (min_x.max(0.0) as u32)..(max_x.min(width as f64).max(0.0) as u32);
    let yr = (min_y.max(0.0) as u32)..(max_y.min(height as f64).max(0.0) as u32);

    for y in yr {
        for x in xr.clone() {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            let sx = cx + dx * cos - dy * sin;
            let sy = cy + dx * sin + dy * cos;
            out[(y * width + x) as usize] = sample_bilinear(src, width, height, sx - 0.5, sy - 0.5);
        }
    }
    out
}

/// Fills the run's glyph coverage with `spec.color`, rotated about the box center.
pub fn rasterize_element(
    registry: &FontRegistry,
    run: &GlyphRun,
    spec: &TypographySpec,
    canvas: (u32, u32),
) -> RenderedElement {
    let (w, h) = canvas;
    let mut cov = draw_glyphs(registry, run, w, h);
    if cos_sin(spec.rotation_deg) != (1.0, 0.0) {
        let cx = spec.x as f64 + spec.box_width as f64 / 2.0;
        let cy = spec.y as f64 + spec.box_height as f64 / 2.0;
        cov = rotate_coverage(&cov, w, h, spec.rotation_deg, cx, cy);
    }

    let color = spec.rgba().unwrap_or(Rgba([0, 0, 0, 255]));
    let [r, g, b, ca] = color.0;
    let mut pixels = RasterImage::new(w, h);
    let mut levels = Vec::with_capacity(cov.len());
    let buf = pixels.as_raw_mut();
    for (i, &v) in cov.iter().enumerate() {
        let q = quantize_unit(v);
        levels.push(unit_from_u8(q));
        if q > 0 {
            let a = ((q as u32 * ca as u32 + 127) / 255).max(1) as u8;
            buf[i * 4..i * 4 + 4].copy_from_slice(&[r, g, b, a]);
        }
    }
    RenderedElement {
        element_id: run.element_id.clone(),
        pixels,
        coverage: CoverageMask::from_values(w, h, levels).expect("canvas-sized"),
        run: run.clone(),
    }
}

/// Renders every element in document order. Elements that do not fit their box
/// are rendered at the minimum size and reported as warnings.
pub fn render_all(doc: &PosterDocument, registry: &FontRegistry) -> RenderOutput {
    let canvas = doc.dims();
    let mut out = RenderOutput::default();
    for el in &doc.elements {
        let run = match layout_glyphs(registry, el, canvas) {
            Ok(run) => run,
            Err(e @ LayoutError::DoesNotFit { .. }) => {
                out.warnings.push(e.to_string());
                layout_at_size(registry, el, MIN_FONT_SIZE)
            }
        };
        if run.fell_back {
            out.warnings.push(format!(
                "element {}: font {:?} not registered, rendered with {}",
                el.id, el.typography.font_id, run.font_id
            ));
        }
        out.elements
            .push(rasterize_element(registry, &run, &el.typography, canvas));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::test_support::{element, minimal_doc, spec};
    use crate::doc::Role;
    use crate::text::registry::MONO_TEST_ID;

    fn mono(content: &str, t: TypographySpec) -> crate::doc::TextElement {
        let mut t = t;
        t.font_id = MONO_TEST_ID.into();
        element("e", Role::Title, content, t)
    }

    #[test]
    fn unrotated_coverage_equals_alpha() {
        let reg = FontRegistry::builtin();
        let el = mono("Ag", spec(10, 10, 100, 50));
        let run = layout_glyphs(&reg, &el, (128, 80)).unwrap();
        let r = rasterize_element(&reg, &run, &el.typography, (128, 80));
        assert!(r.coverage.max_value() > 0.0);
        for y in 0..80 {
            for x in 0..128 {
                let a = r.pixels.pixel(x, y)[3];
                assert_eq!(quantize_unit(r.coverage.get(x, y)), a);
            }
        }
    }

    #[test]
    fn coverage_and_alpha_agree_with_translucent_color() {
        let reg = FontRegistry::builtin();
        let mut t = spec(10, 10, 100, 50);
        t.color = "#10203004".into();
        let el = mono("W", t);
        let run = layout_glyphs(&reg, &el, (128, 80)).unwrap();
        let r = rasterize_element(&reg, &run, &el.typography, (128, 80));
        for y in 0..80 {
            for x in 0..128 {
                let a = r.pixels.pixel(x, y)[3];
                assert_eq!(r.coverage.get(x, y) > 0.0, a > 0);
            }
        }
    }

    #[test]
    fn half_turn_is_a_pixel_flip_within_the_box() {
        let reg = FontRegistry::builtin();
        let t0 = spec(13, 9, 71, 41);
        let el0 = mono("Fj7", t0.clone());
        let mut t180 = t0.clone();
        t180.rotation_deg = -180.0;
        let el180 = mono("Fj7", t180.clone());
        let canvas = (100, 60);
        let r0 = rasterize_element(&reg, &layout_glyphs(&reg, &el0, canvas).unwrap(), &t0, canvas);
        let r1 = rasterize_element(
            &reg,
            &layout_glyphs(&reg, &el180, canvas).unwrap(),
            &t180,
            canvas,
        );
        // brute-force flip oracle
        for y in t0.y..t0.bottom() {
            for x in t0.x..t0.right() {
                let fx = 2 * t0.x + t0.box_width - 1 - x;
                let fy = 2 * t0.y + t0.box_height - 1 - y;
                assert_eq!(
                    r1.pixels.pixel(x as u32, y as u32),
                    r0.pixels.pixel(fx as u32, fy as u32),
                    "({x},{y})"
                );
            }
        }
    }

    #[test]
    fn quarter_turn_moves_ink() {
        let reg = FontRegistry::builtin();
        let mut t = spec(20, 45, 60, 10);
        t.font_size = 8.0;
        t.rotation_deg = 90.0;
        let el = mono("IIIIIIIIII", t.clone());
        let run = layout_glyphs(&reg, &el, (100, 100)).unwrap();
        let r = rasterize_element(&reg, &run, &t, (100, 100));
        // rotated block is tall and narrow around the box center (50, 50)
        let mut xs = (u32::MAX, 0);
        let mut ys = (u32::MAX, 0);
        for y in 0..100 {
            for x in 0..100 {
                if r.coverage.get(x, y) > 0.0 {
                    xs = (xs.0.min(x), xs.1.max(x));
                    ys = (ys.0.min(y), ys.1.max(y));
                }
            }
        }
        assert!(ys.1 - ys.0 > 40, "{ys:?}");
        assert!(xs.1 - xs.0 < 12, "{xs:?}");
    }

    #[test]
    fn render_all_order_and_determinism() {
        let reg = FontRegistry::builtin();
        let mut doc = minimal_doc();
        assert_eq!(
            render_all(
                &PosterDocument {
                    elements: vec![],
                    ..doc.clone()
                },
                &reg
            )
            .elements
            .len(),
            0
        );
        doc.elements
            .push(element("s", Role::Subtitle, "WORLD", spec(20, 100, 160, 30)));
        let a = render_all(&doc, &reg);
        let b = render_all(&doc, &reg);
        assert_eq!(a.elements.len(), 2);
        assert_eq!(a.elements[0].element_id.as_str(), "t");
        assert_eq!(a.elements[1].element_id.as_str(), "s");
        assert_eq!(a.elements, b.elements);
        assert!(a.elements.iter().all(|e| e.coverage.max_value() > 0.0));
    }

    #[test]
    fn overflow_renders_placeholder_with_warning() {
        let reg = FontRegistry::builtin();
        let mut doc = minimal_doc();
        doc.elements[0].typography = spec(0, 0, 20, 10);
        doc.elements[0].typography.font_size = 10.0;
        doc.elements[0].content = "MUCH TOO LONG FOR THIS".into();
        let out = render_all(&doc, &reg);
        assert_eq!(out.elements[0].run.applied_size, MIN_FONT_SIZE);
        assert!(out.warnings.iter().any(|w| w.contains("does not fit")));
    }
}
