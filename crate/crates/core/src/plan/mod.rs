//! Layout and typography planning for the user's text items.
//!
//! A deterministic rule-based planner and a remote-planner client share one
//! request/result contract; both outputs go through [`repair_layout`].

mod remote;
mod repair;
mod rules;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::BackendError;
use crate::doc::{Alignment, Role, TypographySpec};
use crate::raster::{relative_luminance, RasterImage, Rgba};

pub use remote::{
    mock_plan_reply, parse_plan_response, plan_remote, PlanResponse, WireSpec, WIRE_FIELDS,
};
pub use repair::{repair_layout, LayoutItem, Repaired};
pub use rules::{plan_rule_based, plan_rule_based_with};

pub const RULE_PLANNER_ID: &str = "rule-based-v1";
pub const GRID_SIZE: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid plan request: {0}")]
    Input(String),
    #[error("layout is unsatisfiable: {0}")]
    Unsatisfiable(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

/// What the planner knows about the background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundDescriptor {
    /// Row-major grid of mean relative luminance per region plus the most
    /// common colors.
    Stats {
        luminance_grid: Vec<Vec<f64>>,
        dominant_colors: Vec<String>,
    },
    Prose { description: String },
}

impl BackgroundDescriptor {
    /// 8x8 luminance grid and up to three dominant colors (quantized to 4 bits
    /// per channel, reported at the bucket center).
    pub fn from_image(image: &RasterImage) -> BackgroundDescriptor {
        let (w, h) = image.dims();
        let mut sums = vec![vec![0.0f64; GRID_SIZE]; GRID_SIZE];
        let mut counts = vec![vec![0u64; GRID_SIZE]; GRID_SIZE];
        let mut buckets = std::collections::BTreeMap::<u16, u64>::new();
        for y in 0..h {
            let gy = (y as usize * GRID_SIZE) / h as usize;
            for x in 0..w {
                let gx = (x as usize * GRID_SIZE) / w as usize;
                let [r, g, b, _] = image.pixel(x, y);
                sums[gy][gx] += relative_luminance(r, g, b);
                counts[gy][gx] += 1;
                let key = ((r as u16 >> 4) << 8) | ((g as u16 >> 4) << 4) | (b as u16 >> 4);
                *buckets.entry(key).or_default() += 1;
            }
        }
        let luminance_grid = sums
            .iter()
            .zip(&counts)
            .map(|(row, crow)| {
                row.iter()
                    .zip(crow)
                    .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
                    .collect()
            })
            .collect();
        let mut ranked: Vec<(u16, u64)> = buckets.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let dominant_colors = ranked
            .iter()
            .take(3)
            .map(|&(k, _)| {
                let c = |shift: u16| (((k >> shift) & 0xF) as u8) * 16 + 8;
                Rgba([c(8), c(4), c(0), 255]).to_hex()
            })
            .collect();
        BackgroundDescriptor::Stats {
            luminance_grid,
            dominant_colors,
        }
    }

    /// Uniform descriptor, handy for tests and solid backgrounds.
    pub fn uniform(luminance: f64) -> BackgroundDescriptor {
        BackgroundDescriptor::Stats {
            luminance_grid: vec![vec![luminance; GRID_SIZE]; GRID_SIZE],
            dominant_colors: Vec::new(),
        }
    }
}

/// A box the user pinned in place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedBox {
    pub x: i64,
    pub y: i64,
    pub width: i64,
    pub height: i64,
}

/// Attributes the user fixed; the planner returns these verbatim.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserConstraints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_box: Option<FixedBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<Alignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_deg: Option<f64>,
    /// Free-form layout wish, passed to remote planners only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout_hint: Option<String>,
}

impl UserConstraints {
    pub fn is_empty(&self) -> bool {
        *self == UserConstraints::default()
    }

    /// Overwrites the fixed attributes of `spec`.
    pub fn apply_to(&self, spec: &mut TypographySpec) {
        if let Some(b) = self.fixed_box {
            spec.x = b.x;
            spec.y = b.y;
            spec.box_width = b.width;
            spec.box_height = b.height;
        }
        if let Some(a) = self.alignment {
            spec.alignment = a;
        }
        if let Some(f) = &self.font_id {
            spec.font_id = f.clone();
        }
        if let Some(s) = self.font_size {
            spec.font_size = s;
        }
        if let Some(c) = &self.color {
            spec.color = c.clone();
        }
        if let Some(r) = self.rotation_deg {
            spec.rotation_deg = r;
        }
    }

    /// True when every fixed attribute of `spec` equals the constraint.
    pub fn honored_by(&self, spec: &TypographySpec) -> bool {
        let mut expected = spec.clone();
        self.apply_to(&mut expected);
        expected == *spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanItem {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "UserConstraints::is_empty")]
    pub constraints: UserConstraints,
}

impl PlanItem {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
            constraints: UserConstraints::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub canvas: Canvas,
    pub background_descriptor: BackgroundDescriptor,
    pub items: Vec<PlanItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style_hint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedItem {
    pub role: Role,
    pub content: String,
    pub spec: TypographySpec,
    pub applied_constraints: UserConstraints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub items: Vec<PlannedItem>,
    pub planner_id: String,
    pub diagnostics: Vec<String>,
}

/// Rule constants. Fractions are of the canvas height unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub title_top: f64,
    pub title_size: f64,
    pub subtitle_gap: f64,
    /// Fraction of the title font size.
    pub subtitle_ratio: f64,
    pub info_bottom: f64,
    pub info_size: f64,
    pub info_gap: f64,
    /// Fraction of the canvas width kept clear on each side.
    pub side_margin: f64,
    pub luminance_threshold: f64,
    pub light_color: String,
    pub dark_color: String,
    pub font_id: String,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            title_top: 0.12,
            title_size: 0.10,
            subtitle_gap: 0.02,
            subtitle_ratio: 0.45,
            info_bottom: 0.88,
            info_size: 0.025,
            info_gap: 0.01,
            side_margin: 0.05,
            luminance_threshold: 0.5,
            light_color: "#F5F5F0".into(),
            dark_color: "#1A1A1A".into(),
            font_id: crate::text::SANS_ID.into(),
        }
    }
}

impl PlanRequest {
    /// Structural checks shared by both planners.
    pub fn check(&self, registry: &crate::text::FontRegistry) -> Result<(), PlanError> {
        let Canvas { width, height } = self.canvas;
        let range = crate::doc::MIN_CANVAS..=crate::doc::MAX_CANVAS;
        if !range.contains(&width) || !range.contains(&height) {
            return Err(PlanError::Input(format!(
                "canvas {width}x{height} is outside [{}, {}]",
                crate::doc::MIN_CANVAS,
                crate::doc::MAX_CANVAS
            )));
        }
        if self.items.is_empty() {
            return Err(PlanError::Input("no text items".into()));
        }
        if self.items.iter().filter(|i| i.role == Role::Title).count() > 1 {
            return Err(PlanError::Input("at most one title item is allowed".into()));
        }
        if let BackgroundDescriptor::Stats { luminance_grid, .. } = &self.background_descriptor {
            let cols = luminance_grid.first().map_or(0, Vec::len);
            if cols == 0 || luminance_grid.iter().any(|r| r.len() != cols) {
                return Err(PlanError::Input(
                    "luminance_grid must be a non-empty rectangular grid".into(),
                ));
            }
        }
        for (i, item) in self.items.iter().enumerate() {
            if item.content.trim().is_empty() {
                return Err(PlanError::Input(format!("items[{i}].content is empty")));
            }
            let c = &item.constraints;
            let bad = |what: String| Err(PlanError::Input(format!("items[{i}].constraints.{what}")));
            if let Some(b) = c.fixed_box {
                if b.width <= 0
                    || b.height <= 0
                    || b.x < 0
                    || b.y < 0
                    || b.x + b.width > width as i64
                    || b.y + b.height > height as i64
                {
                    return bad(format!("fixed_box {b:?} is not inside the canvas"));
                }
            }
            if let Some(s) = c.font_size {
                let limit = c.fixed_box.map_or(height as i64, |b| b.height) as f64;
                if !(s.is_finite() && s > 0.0 && s <= limit) {
                    return bad(format!("font_size {s} must be in (0, {limit}]"));
                }
            }
            if let Some(col) = &c.color {
                if Rgba::parse_hex(col).is_none() {
                    return bad(format!("color {col:?} is not #RRGGBB or #RRGGBBAA"));
                }
            }
            if let Some(r) = c.rotation_deg {
                if !(r.is_finite() && (-180.0..180.0).contains(&r)) {
                    return bad(format!("rotation_deg {r} is outside [-180, 180)"));
                }
            }
            if let Some(f) = &c.font_id {
                if !registry.contains(f) {
                    return bad(format!("font_id {f:?} is not registered"));
                }
            }
        }
        Ok(())
    }
}

/// Mean luminance under a box, weighting grid cells by overlap area.
pub(crate) fn luminance_under(grid: &[Vec<f64>], canvas: Canvas, spec: &TypographySpec) -> f64 {
    let rows = grid.len();
    let cols = grid[0].len();
    let cw = canvas.width as f64 / cols as f64;
    let ch = canvas.height as f64 / rows as f64;
    let (x0, x1) = (spec.x as f64, spec.right() as f64);
    let (y0, y1) = (spec.y as f64, spec.bottom() as f64);
    let (mut acc, mut area) = (0.0, 0.0);
    for (r, row) in grid.iter().enumerate() {
        let oy = (y1.min((r + 1) as f64 * ch) - y0.max(r as f64 * ch)).max(0.0);
        if oy == 0.0 {
            continue;
        }
        for (c, &l) in row.iter().enumerate() {
            let ox = (x1.min((c + 1) as f64 * cw) - x0.max(c as f64 * cw)).max(0.0);
            acc += l * ox * oy;
            area += ox * oy;
        }
    }
    if area > 0.0 {
        acc / area
    } else {
        grid.iter().flatten().sum::<f64>() / (rows * cols) as f64
    }
}

const DARK_WORDS: &[&str] = &[
    "dark", "black", "night", "midnight", "deep", "navy", "shadow", "dim", "noir", "charcoal",
];
const LIGHT_WORDS: &[&str] = &[
    "light", "white", "bright", "pastel", "cream", "pale", "snow", "ivory", "sunny", "beige",
];

/// Luminance guess from a prose description: dark and light keywords vote.
pub(crate) fn prose_luminance(description: &str) -> f64 {
    let lower = description.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    let dark = words.iter().filter(|w| DARK_WORDS.contains(w)).count();
    let light = words.iter().filter(|w| LIGHT_WORDS.contains(w)).count();
    match dark.cmp(&light) {
        std::cmp::Ordering::Greater => 0.1,
        std::cmp::Ordering::Less => 0.9,
        std::cmp::Ordering::Equal => 0.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_grid_of_split_image() {
        let mut img = RasterImage::filled(64, 64, [0, 0, 0, 255]);
        for y in 0..64 {
            for x in 32..64 {
                img.set_pixel(x, y, [255, 255, 255, 255]);
            }
        }
        let BackgroundDescriptor::Stats {
            luminance_grid,
            dominant_colors,
        } = BackgroundDescriptor::from_image(&img)
        else {
            unreachable!()
        };
        assert_eq!(luminance_grid.len(), 8);
        assert_eq!(luminance_grid[3][0], 0.0);
        assert!((luminance_grid[3][7] - 1.0).abs() < 1e-12);
        assert_eq!(dominant_colors.len(), 2);
    }

    #[test]
    fn luminance_under_weights_by_area() {
        let grid = vec![vec![0.0, 1.0]];
        let canvas = Canvas {
            width: 100,
            height: 100,
        };
        let mut s = crate::doc::test_support::spec(25, 0, 50, 10);
        assert!((luminance_under(&grid, canvas, &s) - 0.5).abs() < 1e-12);
        s.x = 0;
        s.box_width = 25;
        assert_eq!(luminance_under(&grid, canvas, &s), 0.0);
    }

    #[test]
    fn prose_votes() {
        assert_eq!(prose_luminance("A dark, moody night sky"), 0.1);
        assert_eq!(prose_luminance("bright pastel meadow"), 0.9);
        assert_eq!(prose_luminance("abstract shapes"), 0.5);
    }

    #[test]
    fn constraints_roundtrip_and_apply() {
        let c = UserConstraints {
            color: Some("#FF0000".into()),
            rotation_deg: Some(15.0),
            ..Default::default()
        };
        let mut s = crate::doc::test_support::spec(0, 0, 10, 10);
        assert!(!c.honored_by(&s));
        c.apply_to(&mut s);
        assert!(c.honored_by(&s));
        let back: UserConstraints = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
