use serde_json::{Map, Value};

use super::{AssetSource, Diagnostic};
use crate::doc::{Alignment, Role, TypographySpec};
use crate::raster::CoverageMask;

/// Tight `[x0, y0, x1, y1)` box of the nonzero mask pixels.
pub fn mask_bbox(mask: &CoverageMask) -> Option<[u32; 4]> {
    let (w, h) = mask.dims();
    let mut b: Option<[u32; 4]> = None;
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) > 0.0 {
                b = Some(match b {
                    None => [x, y, x + 1, y + 1],
                    Some([x0, y0, x1, y1]) => [x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)],
                });
            }
        }
    }
    b
}

struct Fields<'a> {
    obj: &'a Map<String, Value>,
    prefix: String,
    out: &'a mut Vec<Diagnostic>,
}

impl Fields<'_> {
    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn get(&mut self, key: &str) -> Option<&Value> {
        let v = self.obj.get(key);
        if v.is_none() {
            let p = self.path(key);
            self.out
                .push(Diagnostic::new(p, "missing_field", format!("{key} is required")));
        }
        v
    }

    fn typed<T>(&mut self, key: &str, what: &str, f: impl Fn(&Value) -> Option<T>) -> Option<T> {
        let v = self.get(key)?.clone();
        let r = f(&v);
        if r.is_none() {
            let p = self.path(key);
            self.out.push(Diagnostic::new(
                p,
                "wrong_type",
                format!("{key} must be {what}, got {v}"),
            ));
        }
        r
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.typed(key, "a string", |v| v.as_str().map(str::to_string))
    }

    fn int(&mut self, key: &str) -> Option<i64> {
        self.typed(key, "an integer", Value::as_i64)
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        self.typed(key, "a number", Value::as_f64)
    }
}

/// Every invariant violation in a design record. Never panics, whatever the
/// JSON shape; an empty list means the record is valid.
pub fn validate_design(record: &Value, assets: &dyn AssetSource) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let Some(obj) = record.as_object() else {
        out.push(Diagnostic::new("", "not_an_object", "record must be a JSON object"));
        return out;
    };
    let mut f = Fields {
        obj,
        prefix: String::new(),
        out: &mut out,
    };
    if let Some(d) = f.string("user_description") {
        if d.trim().is_empty() {
            f.out.push(Diagnostic::new(
                "user_description",
                "empty_description",
                "user_description is empty",
            ));
        }
    }
    let dims = f.string("background_ref").and_then(|r| match assets.image_dims(&r) {
        Ok(d) => Some(d),
        Err(e) => {
            f.out.push(Diagnostic::new(
                "background_ref",
                "background_unreadable",
                format!("cannot read {r:?}: {e}"),
            ));
            None
        }
    });
    let Some(elements) = f.typed("elements", "an array", |v| v.as_array().cloned()) else {
        return out;
    };
    let mut titles = 0;
    for (k, el) in elements.iter().enumerate() {
        let base = format!("elements[{k}]");
        let Some(eobj) = el.as_object() else {
            out.push(Diagnostic::new(base, "not_an_object", "element must be an object"));
            continue;
        };
        let mut f = Fields {
            obj: eobj,
            prefix: base.clone(),
            out: &mut out,
        };
        if let Some(r) = f.string("role") {
            match Role::parse(&r) {
                Some(Role::Title) => titles += 1,
                Some(_) => {}
                None => f.out.push(Diagnostic::new(
                    format!("{base}.role"),
                    "unknown_role",
                    format!("role {r:?} is not title, subtitle or information"),
                )),
            }
        }
        if let Some(c) = f.string("content") {
            if c.trim().is_empty() {
                f.out.push(Diagnostic::new(
                    format!("{base}.content"),
                    "empty_content",
                    "content is empty",
                ));
            }
        }
        let alignment = f.string("alignment").and_then(|a| {
            let parsed = Alignment::parse(&a);
            if parsed.is_none() {
                f.out.push(Diagnostic::new(
                    format!("{base}.alignment"),
                    "unknown_alignment",
                    format!("alignment {a:?} is not left, center or right"),
                ));
            }
            parsed
        });
        let (x, y) = (f.int("x"), f.int("y"));
        let (w, h) = (f.int("box_width"), f.int("box_height"));
        let (font_id, font_size) = (f.string("font_id"), f.number("font_size"));
        let (color, rotation) = (f.string("color"), f.number("rotation_deg"));
        let spec = (|| {
            Some(TypographySpec {
                x: x?,
                y: y?,
                box_width: w?,
                box_height: h?,
                font_id: font_id?,
                font_size: font_size?,
                color: color?,
                alignment: alignment?,
                rotation_deg: rotation?,
            })
        })();
        if let Some(spec) = spec {
            let (cw, ch) = dims.unwrap_or((u32::MAX, u32::MAX));
            for v in spec.violations(cw, ch) {
                out.push(Diagnostic::new(v.path(&base), v.rule, v.message));
            }
        }
    }
    if titles > 1 {
        out.push(Diagnostic::new(
            "elements",
            "multiple_titles",
            format!("{titles} title elements; at most one is allowed"),
        ));
    }
    out
}

/// Every invariant violation in a text-segmentation record.
pub fn validate_textseg(record: &Value, assets: &dyn AssetSource) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let Some(obj) = record.as_object() else {
        out.push(Diagnostic::new("", "not_an_object", "record must be a JSON object"));
        return out;
    };
    let mut f = Fields {
        obj,
        prefix: String::new(),
        out: &mut out,
    };
    if let Some(d) = f.string("description") {
        if d.trim().is_empty() {
            f.out.push(Diagnostic::new(
                "description",
                "empty_description",
                "description is empty",
            ));
        }
    }
    let image_dims = f.string("image_ref").and_then(|r| match assets.image_dims(&r) {
        Ok(d) => Some(d),
        Err(e) => {
            f.out.push(Diagnostic::new(
                "image_ref",
                "image_unreadable",
                format!("cannot read {r:?}: {e}"),
            ));
            None
        }
    });
    let mask = f.string("mask_ref").and_then(|r| match assets.load_mask(&r) {
        Ok(m) => Some(m),
        Err(e) => {
            f.out.push(Diagnostic::new(
                "mask_ref",
                "mask_unreadable",
                format!("cannot read {r:?}: {e}"),
            ));
            None
        }
    });
    let Some(mask) = mask else {
        return out;
    };
    if let Some(d) = image_dims {
        if d != mask.dims() {
            out.push(Diagnostic::new(
                "mask_ref",
                "dim_mismatch",
                format!("mask {:?} does not match image {:?}", mask.dims(), d),
            ));
        }
    }
    let bbox = mask_bbox(&mask);
    if bbox.is_none() {
        out.push(Diagnostic::new("mask_ref", "empty_mask", "mask has no nonzero pixel"));
    }
    if let Some(given) = obj.get("region_bbox") {
        let parsed: Option<[u32; 4]> = serde_json::from_value(given.clone()).ok();
        match parsed {
            None => out.push(Diagnostic::new(
                "region_bbox",
                "wrong_type",
                "region_bbox must be [x0, y0, x1, y1]",
            )),
            Some(b) if Some(b) != bbox => out.push(Diagnostic::new(
                "region_bbox",
                "bbox_mismatch",
                format!("region_bbox {b:?} differs from the mask's tight box {bbox:?}"),
            )),
            Some(_) => {}
        }
    }
    out
}
