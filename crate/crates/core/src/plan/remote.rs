use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{
    plan_rule_based, repair_layout, LayoutItem, PlanError, PlanRequest, PlanResult, PlannedItem,
};
use crate::backends::{post_json, BackendEndpoint, CancelToken};
use crate::doc::{Alignment, TypographySpec};
use crate::raster::{RasterImage, Rgba};
use crate::text::FontRegistry;

/// Typography fields every planner reply item carries.
pub const WIRE_FIELDS: [&str; 9] = [
    "x",
    "y",
    "box_width",
    "box_height",
    "font_id",
    "font_size",
    "color",
    "alignment",
    "rotation_deg",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSpec {
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

impl From<&TypographySpec> for WireSpec {
    fn from(s: &TypographySpec) -> Self {
        WireSpec {
            x: s.x,
            y: s.y,
            box_width: s.box_width,
            box_height: s.box_height,
            font_id: s.font_id.clone(),
            font_size: s.font_size,
            color: s.color.clone(),
            alignment: s.alignment,
            rotation_deg: s.rotation_deg,
        }
    }
}

impl From<WireSpec> for TypographySpec {
    fn from(w: WireSpec) -> Self {
        TypographySpec {
            x: w.x,
            y: w.y,
            box_width: w.box_width,
            box_height: w.box_height,
            font_id: w.font_id,
            font_size: w.font_size,
            color: w.color,
            alignment: w.alignment,
            rotation_deg: w.rotation_deg,
        }
    }
}

/// Planner reply body: one spec per request item, in request order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanResponse {
    pub planner_id: String,
    pub items: Vec<WireSpec>,
}

impl From<&PlanResult> for PlanResponse {
    fn from(r: &PlanResult) -> Self {
        PlanResponse {
            planner_id: r.planner_id.clone(),
            items: r.items.iter().map(|i| WireSpec::from(&i.spec)).collect(),
        }
    }
}

/// Strict parse of a planner reply: every field present and well typed,
/// nothing extra, and every color, size and rotation in range.
pub fn parse_plan_response(text: &str) -> Result<PlanResponse, String> {
    let resp: PlanResponse = serde_json::from_str(text).map_err(|e| e.to_string())?;
    for (i, s) in resp.items.iter().enumerate() {
        if s.box_width <= 0 || s.box_height <= 0 {
            return Err(format!("items[{i}]: box must have positive size"));
        }
        if !(s.font_size.is_finite() && s.font_size > 0.0) {
            return Err(format!("items[{i}].font_size must be > 0"));
        }
        if Rgba::parse_hex(&s.color).is_none() {
            return Err(format!("items[{i}].color {:?} is not a hex color", s.color));
        }
        if !(-180.0..180.0).contains(&s.rotation_deg) {
            return Err(format!("items[{i}].rotation_deg out of range"));
        }
    }
    Ok(resp)
}

fn int_field(obj: &Map<String, Value>, key: &str) -> Option<i64> {
    let v = obj.get(key)?;
    v.as_i64().or_else(|| {
        v.as_f64()
            .filter(|f| f.is_finite() && f.abs() < 1e12)
            .map(|f| f.round() as i64)
    })
}

fn num_field(obj: &Map<String, Value>, key: &str) -> Option<f64> {
    obj.get(key)?.as_f64().filter(|f| f.is_finite())
}

/// Sends the request to a remote planner and turns its reply into a valid
/// plan. Missing or malformed fields take the rule-based value (rotation
/// takes 0), user-fixed attributes override the reply, and the result goes
/// through [`repair_layout`]. Every substitution is noted in diagnostics.
pub fn plan_remote(
    req: &PlanRequest,
    endpoint: &BackendEndpoint,
    registry: &FontRegistry,
    background_image: Option<&RasterImage>,
    cancel: Option<&CancelToken>,
) -> Result<PlanResult, PlanError> {
    req.check(registry)?;
    let mut body = serde_json::to_value(req).expect("serializable");
    if endpoint.supports_vision {
        if let Some(img) = background_image {
            let b64 = img
                .to_png_base64()
                .map_err(|e| PlanError::Input(e.to_string()))?;
            body["background_image_png_base64"] = Value::String(b64);
        }
    }
    let reply = post_json(endpoint, &body, cancel)?;

    let mut diagnostics = Vec::new();
    let mut fallback: Option<Result<PlanResult, PlanError>> = None;
    let mut rule_spec = |i: usize| -> Result<TypographySpec, PlanError> {
        let plan = fallback.get_or_insert_with(|| plan_rule_based(req, registry));
        match plan {
            Ok(p) => Ok(p.items[i].spec.clone()),
            Err(e) => Err(e.clone()),
        }
    };

    let planner_id = match reply.get("planner_id").and_then(Value::as_str) {
        Some(id) if !id.is_empty() => id.to_string(),
        _ => {
            diagnostics.push("reply has no planner_id".to_string());
            format!("remote:{}", endpoint.url)
        }
    };
    let empty = Vec::new();
    let reply_items = match reply.get("items").and_then(Value::as_array) {
        Some(a) => a,
        None => {
            diagnostics.push("reply has no items array; using rule-based values".to_string());
            &empty
        }
    };
    if reply_items.len() > req.items.len() {
        diagnostics.push(format!(
            "reply has {} items for {} requested; extras ignored",
            reply_items.len(),
            req.items.len()
        ));
    }

    let mut layout = Vec::with_capacity(req.items.len());
    for (i, item) in req.items.iter().enumerate() {
        let obj = match reply_items.get(i).and_then(Value::as_object) {
            Some(o) => o.clone(),
            None => {
                if !reply_items.is_empty() {
                    diagnostics.push(format!("item {i}: missing or not an object"));
                }
                Map::new()
            }
        };
        let mut spec = TypographySpec {
            x: 0,
            y: 0,
            box_width: 0,
            box_height: 0,
            font_id: String::new(),
            font_size: 0.0,
            color: String::new(),
            alignment: Alignment::Center,
            rotation_deg: 0.0,
        };
        let mut need_rule = Vec::new();
        for key in ["x", "y", "box_width", "box_height"] {
            match int_field(&obj, key) {
                Some(v) => match key {
                    "x" => spec.x = v,
                    "y" => spec.y = v,
                    "box_width" => spec.box_width = v,
                    _ => spec.box_height = v,
                },
                None => need_rule.push(key),
            }
        }
        match obj.get("font_id").and_then(Value::as_str) {
            Some(f) if !f.trim().is_empty() => spec.font_id = f.to_string(),
            _ => need_rule.push("font_id"),
        }
        match num_field(&obj, "font_size") {
            Some(s) if s > 0.0 => spec.font_size = s,
            _ => need_rule.push("font_size"),
        }
        match obj.get("color").and_then(Value::as_str) {
            Some(c) if Rgba::parse_hex(c).is_some() => spec.color = c.to_string(),
            _ => need_rule.push("color"),
        }
        match obj
            .get("alignment")
            .and_then(Value::as_str)
            .and_then(Alignment::parse)
        {
            Some(a) => spec.alignment = a,
            None => need_rule.push("alignment"),
        }
        match obj.get("rotation_deg") {
            None => diagnostics.push(format!("item {i}: rotation_deg missing, set to 0")),
            Some(_) => match num_field(&obj, "rotation_deg") {
                Some(r) => spec.rotation_deg = r,
                None => diagnostics.push(format!("item {i}: rotation_deg malformed, set to 0")),
            },
        }
        if !need_rule.is_empty() {
            let rule = rule_spec(i)?;
            for key in need_rule {
                diagnostics.push(format!(
                    "item {i}: {key} missing or malformed, used rule-based value"
                ));
                match key {
                    "x" => spec.x = rule.x,
                    "y" => spec.y = rule.y,
                    "box_width" => spec.box_width = rule.box_width,
                    "box_height" => spec.box_height = rule.box_height,
                    "font_id" => spec.font_id = rule.font_id.clone(),
                    "font_size" => spec.font_size = rule.font_size,
                    "color" => spec.color = rule.color.clone(),
                    _ => spec.alignment = rule.alignment,
                }
            }
        }
        if !item.constraints.honored_by(&spec) {
            diagnostics.push(format!("item {i}: user-fixed attributes restored"));
            item.constraints.apply_to(&mut spec);
        }
        layout.push(LayoutItem {
            role: item.role,
            spec,
            fixed: item.constraints.fixed_box.is_some(),
        });
    }

    let repaired = repair_layout(&layout, req.canvas, registry)?;
    diagnostics.extend(repaired.diagnostics);
    let items = req
        .items
        .iter()
        .zip(repaired.specs)
        .map(|(item, spec)| PlannedItem {
            role: item.role,
            content: item.content.clone(),
            spec,
            applied_constraints: item.constraints.clone(),
        })
        .collect();
    Ok(PlanResult {
        items,
        planner_id,
        diagnostics,
    })
}

/// Reply of the mock planner: the rule-based plan in wire form.
pub fn mock_plan_reply(body: &Value) -> Result<Value, String> {
    let mut body = body.clone();
    if let Some(obj) = body.as_object_mut() {
        obj.remove("background_image_png_base64");
    }
    let req: PlanRequest = serde_json::from_value(body).map_err(|e| e.to_string())?;
    let plan = plan_rule_based(&req, &FontRegistry::builtin()).map_err(|e| e.to_string())?;
    let mut resp = PlanResponse::from(&plan);
    resp.planner_id = "mock-planner".into();
    Ok(serde_json::to_value(resp).expect("serializable"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_parse_rejects_extra_and_missing() {
        let ok = r##"{"planner_id":"p","items":[{"x":1,"y":2,"box_width":3,"box_height":4,"font_id":"sans","font_size":3.5,"color":"#FFFFFF","alignment":"left","rotation_deg":0}]}"##;
        assert!(parse_plan_response(ok).is_ok());
        let extra = ok.replace("\"x\":1", "\"x\":1,\"z\":0");
        assert!(parse_plan_response(&extra).is_err());
        let missing = ok.replace("\"rotation_deg\":0", "\"rotation_deg\":-999");
        assert!(parse_plan_response(&missing).is_err());
        let bad_color = ok.replace("#FFFFFF", "white");
        assert!(parse_plan_response(&bad_color).is_err());
    }

    #[test]
    fn wire_fields_match_struct() {
        let w = WireSpec::from(&crate::doc::test_support::spec(0, 0, 1, 1));
        let v = serde_json::to_value(w).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        let mut want: Vec<_> = WIRE_FIELDS.iter().map(|s| s.to_string()).collect();
        keys.sort();
        want.sort();
        assert_eq!(keys, want);
    }
}
