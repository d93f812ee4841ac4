use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{validate_design, AssetSource, DatasetError, DesignRecord, Diagnostic};
use crate::plan::{PlanResponse, WireSpec};

pub const TEMPLATE_PLANNER_V1: &str = "planner-v1";

/// One JSONL line of the export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetunePair {
    pub template: String,
    pub instruction: String,
    /// Planner reply body as a JSON string.
    pub response: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExportOutput {
    /// JSONL, one pair per exported record, in input order.
    pub jsonl: String,
    pub exported: usize,
    pub excluded: usize,
    pub diagnostics: Vec<Diagnostic>,
}

fn instruction(rec: &DesignRecord, dims: (u32, u32)) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Design the typography for a poster.");
    let _ = writeln!(s, "Brief: {}", rec.user_description.trim());
    let _ = writeln!(s, "Canvas: {}x{}", dims.0, dims.1);
    let _ = writeln!(s, "Items:");
    for (i, e) in rec.elements.iter().enumerate() {
        let _ = writeln!(s, "{}. {}: {}", i + 1, e.role.as_str(), e.content);
    }
    s.push_str(
        "Reply with JSON {\"planner_id\", \"items\"}; each item gives x, y, box_width, \
         box_height, font_id, font_size, color, alignment and rotation_deg, in item order.",
    );
    s
}

/// Instruction/response pairs for fine-tuning a planner. Records that fail
/// validation are skipped and reported. Output depends only on the inputs.
pub fn export_finetune(
    records: &[(String, Value)],
    assets: &dyn AssetSource,
    template_id: &str,
) -> Result<ExportOutput, DatasetError> {
    if template_id != TEMPLATE_PLANNER_V1 {
        return Err(DatasetError::UnknownTemplate(template_id.to_string()));
    }
    let mut out = ExportOutput::default();
    for (file, value) in records {
        let diags = validate_design(value, assets);
        let parsed = serde_json::from_value::<DesignRecord>(value.clone());
        let dims = parsed
            .as_ref()
            .ok()
            .and_then(|r| assets.image_dims(&r.background_ref).ok());
        let (rec, dims) = match (diags.is_empty(), parsed, dims) {
            (true, Ok(rec), Some(dims)) => (rec, dims),
            (_, parsed, _) => {
                out.excluded += 1;
                let mut reported = diags;
                if reported.is_empty() {
                    let msg = parsed.err().map_or("unreadable background".to_string(), |e| e.to_string());
                    reported.push(Diagnostic::new("", "unparseable", msg));
                }
                out.diagnostics.extend(reported.into_iter().map(|mut d| {
                    d.path = format!("{file}:{}", d.path);
                    d
                }));
                continue;
            }
        };
        let response = PlanResponse {
            planner_id: format!("dataset:{template_id}"),
            items: rec.elements.iter().map(|e| WireSpec::from(&e.spec())).collect(),
        };
        let pair = FinetunePair {
            template: template_id.to_string(),
            instruction: instruction(&rec, dims),
            response: serde_json::to_string(&response).expect("serializable"),
        };
        out.jsonl
            .push_str(&serde_json::to_string(&pair).expect("serializable"));
        out.jsonl.push('\n');
        out.exported += 1;
    }
    Ok(out)
}
