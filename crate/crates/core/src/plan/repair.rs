use super::{Canvas, PlanError};
use crate::doc::{Role, TypographySpec};
use crate::raster::Rgba;
use crate::text::FontRegistry;

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutItem {
    pub role: Role,
    pub spec: TypographySpec,
    /// The user pinned this box; repair never moves or resizes it.
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repaired {
    pub specs: Vec<TypographySpec>,
    pub diagnostics: Vec<String>,
}

const REPAIR_COLOR: &str = "#1A1A1A";

/// Makes every spec valid on `canvas` and removes overlaps.
///
/// Steps, in order: clamp boxes into the canvas (and settle font size against
/// box height), snap unregistered fonts to the fallback, then place non-fixed
/// boxes by priority (title, subtitle, information, then list order), moving
/// each one that overlaps an already placed box down to the smallest free
/// y, or failing that the smallest free y from the top. Fixed boxes are placed
/// first and never move; two overlapping fixed boxes are reported, not fixed.
pub fn repair_layout(
    items: &[LayoutItem],
    canvas: Canvas,
    registry: &FontRegistry,
) -> Result<Repaired, PlanError> {
    let (cw, ch) = (canvas.width as i64, canvas.height as i64);
    let mut diagnostics = Vec::new();
    let mut specs: Vec<TypographySpec> = items.iter().map(|i| i.spec.clone()).collect();

    for (i, (item, s)) in items.iter().zip(specs.iter_mut()).enumerate() {
        if !item.fixed {
            clamp_box(i, s, cw, ch, &mut diagnostics);
        }
        settle_fields(i, s, &mut diagnostics);
        if !registry.contains(&s.font_id) {
            diagnostics.push(format!(
                "item {i}: unknown font {:?} replaced by {:?}",
                s.font_id,
                registry.fallback_id()
            ));
            s.font_id = registry.fallback_id().to_string();
        }
    }

    let mut placed: Vec<usize> = Vec::new();
    for i in (0..items.len()).filter(|&i| items[i].fixed) {
        for &j in &placed {
            if specs[i].overlaps(&specs[j]) {
                diagnostics.push(format!("items {j} and {i}: fixed boxes overlap, left as is"));
            }
        }
        placed.push(i);
    }

    let mut order: Vec<usize> = (0..items.len()).filter(|&i| !items[i].fixed).collect();
    order.sort_by_key(|&i| (items[i].role.priority(), i));
    for i in order {
        let blocked = |y: i64, specs: &[TypographySpec]| {
            let mut probe = specs[i].clone();
            probe.y = y;
            placed.iter().any(|&j| probe.overlaps(&specs[j]))
        };
        let y0 = specs[i].y;
        if !blocked(y0, &specs) {
            placed.push(i);
            continue;
        }
        let h = specs[i].box_height;
        // the lowest free y is always the current y, 0, or just below a placed box
        let mut candidates: Vec<i64> = placed
            .iter()
            .map(|&j| specs[j].bottom() + 1)
            .chain([0])
            .filter(|&y| y + h <= ch)
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        let below = candidates
            .iter()
            .copied()
            .filter(|&y| y > y0)
            .find(|&y| !blocked(y, &specs));
        let found = below.or_else(|| {
            candidates
                .iter()
                .copied()
                .filter(|&y| y < y0)
                .find(|&y| !blocked(y, &specs))
        });
        match found {
            Some(y) => {
                diagnostics.push(format!(
                    "item {i}: moved from y={y0} to y={y} to avoid overlap{}",
                    if y < y0 { " (wrapped to top)" } else { "" }
                ));
                specs[i].y = y;
                placed.push(i);
            }
            None => {
                return Err(PlanError::Unsatisfiable(format!(
                    "item {i} ({}) cannot be placed without overlap",
                    items[i].role.as_str()
                )))
            }
        }
    }

    Ok(Repaired { specs, diagnostics })
}

fn clamp_box(i: usize, s: &mut TypographySpec, cw: i64, ch: i64, diags: &mut Vec<String>) {
    let before = (s.x, s.y, s.box_width, s.box_height);
    s.box_width = s.box_width.clamp(1, cw);
    s.box_height = s.box_height.clamp(1, ch);
    if s.font_size.is_finite() && s.font_size > s.box_height as f64 {
        s.box_height = (s.font_size.ceil() as i64).min(ch);
    }
    s.x = s.x.clamp(0, cw - s.box_width);
    s.y = s.y.clamp(0, ch - s.box_height);
    if before != (s.x, s.y, s.box_width, s.box_height) {
        diags.push(format!(
            "item {i}: box {:?} clamped to ({}, {}, {}x{})",
            before, s.x, s.y, s.box_width, s.box_height
        ));
    }
}

fn settle_fields(i: usize, s: &mut TypographySpec, diags: &mut Vec<String>) {
    let limit = s.box_height as f64;
    if !(s.font_size.is_finite() && s.font_size > 0.0) {
        diags.push(format!(
            "item {i}: font_size {} replaced by {}",
            s.font_size,
            limit * 0.8
        ));
        s.font_size = limit * 0.8;
    } else if s.font_size > limit {
        diags.push(format!(
            "item {i}: font_size {} reduced to box height {limit}",
            s.font_size
        ));
        s.font_size = limit;
    }
    if Rgba::parse_hex(&s.color).is_none() {
        diags.push(format!("item {i}: color {:?} replaced by {REPAIR_COLOR}", s.color));
        s.color = REPAIR_COLOR.to_string();
    }
    if !s.rotation_deg.is_finite() {
        diags.push(format!("item {i}: rotation {} replaced by 0", s.rotation_deg));
        s.rotation_deg = 0.0;
    } else if !(-180.0..180.0).contains(&s.rotation_deg) {
        let r = (s.rotation_deg + 180.0).rem_euclid(360.0) - 180.0;
        diags.push(format!(
            "item {i}: rotation {} normalized to {r}",
            s.rotation_deg
        ));
        s.rotation_deg = r;
    }
}
