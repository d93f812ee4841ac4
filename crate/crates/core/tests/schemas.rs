use std::path::PathBuf;

use poster_core::backends::mock::MockServer;
use poster_core::backends::{ocr_detect, BackendKind};
use poster_core::doc::{serialize, Role};
use poster_core::pipeline::{
    run_pipeline, run_reference_flow, PipelineConfig, PlannerChoice, PosterRequest, RequestItem,
};
use poster_core::plan::{
    plan_rule_based, BackgroundDescriptor, Canvas, PlanItem, PlanRequest, PlanResponse,
    UserConstraints, WIRE_FIELDS,
};
use poster_core::raster::RasterImage;
use poster_core::text::FontRegistry;
use serde_json::{json, Value};

fn load(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name);
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn validator(name: &str, def: Option<&str>) -> jsonschema::Validator {
    let mut schema = load(name);
    if let Some(d) = def {
        schema["$ref"] = json!(format!("#/$defs/{d}"));
    }
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, instance: &Value, what: &str) {
    let errors: Vec<String> = v.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{what}: {errors:?}");
}

fn schema_for(kind: BackendKind) -> &'static str {
    match kind {
        BackendKind::Background => "background.json",
        BackendKind::Stylizer => "stylize.json",
        BackendKind::PromptRefiner => "refine.json",
        BackendKind::Ocr => "ocr.json",
        BackendKind::Planner => "planner.json",
        BackendKind::TextRemoval => "text_removal.json",
    }
}

fn request() -> PosterRequest {
    let mut title = RequestItem::new(Role::Title, "Café Noir");
    title.constraints.font_size = Some(48.0);
    PosterRequest {
        background_prompt: Some("dusk".into()),
        items: vec![title, RequestItem::new(Role::Information, "Rue 12")],
        style_hint: Some("moody".into()),
        ..Default::default()
    }
}

#[test]
fn all_schemas_compile() {
    for kind in BackendKind::ALL {
        let name = schema_for(kind);
        validator(name, Some("request"));
        validator(name, Some("response"));
    }
    validator("document.json", None);
}

#[test]
fn outgoing_requests_match_schemas() {
    let mock = MockServer::start().unwrap();
    let mut config = PipelineConfig {
        canvas_width: 200,
        canvas_height: 280,
        planner: PlannerChoice::Remote,
        endpoints: BackendKind::ALL.iter().map(|k| mock.endpoint(*k)).collect(),
        ..Default::default()
    };
    for ep in &mut config.endpoints {
        ep.supports_vision = ep.kind == BackendKind::Planner;
    }
    let reg = FontRegistry::builtin();
    run_pipeline(&request(), &config, &reg, None).unwrap();
    run_reference_flow(&RasterImage::new(50, 70), &request(), &config, &reg, None).unwrap();
    ocr_detect(&RasterImage::new(8, 8), None, config.endpoint(BackendKind::Ocr), None).unwrap();

    for kind in BackendKind::ALL {
        let reqs = mock.requests(kind);
        assert!(!reqs.is_empty(), "{kind} not exercised");
        let v = validator(schema_for(kind), Some("request"));
        for r in reqs {
            let body: Value = serde_json::from_str(&r.body).unwrap();
            assert_valid(&v, &body, &format!("{kind} request"));
        }
    }
}

#[test]
fn planner_schema_matches_wire_format() {
    let schema = load("planner.json");
    let mut required: Vec<&str> = schema["$defs"]["spec"]["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let mut wire = WIRE_FIELDS.to_vec();
    required.sort();
    wire.sort();
    assert_eq!(required, wire);

    let req = PlanRequest {
        canvas: Canvas {
            width: 400,
            height: 600,
        },
        background_descriptor: BackgroundDescriptor::uniform(0.8),
        items: vec![
            PlanItem {
                constraints: UserConstraints {
                    color: Some("#112233".into()),
                    layout_hint: Some("top".into()),
                    ..Default::default()
                },
                ..PlanItem::new(Role::Title, "Spring")
            },
            PlanItem::new(Role::Subtitle, "fair"),
        ],
        style_hint: None,
    };
    assert_valid(
        &validator("planner.json", Some("request")),
        &serde_json::to_value(&req).unwrap(),
        "plan request",
    );
    let resp = PlanResponse::from(&plan_rule_based(&req, &FontRegistry::builtin()).unwrap());
    let mut body = serde_json::to_value(&resp).unwrap();
    let v = validator("planner.json", Some("response"));
    assert_valid(&v, &body, "plan response");

    body["items"][0]["extra"] = json!(1);
    assert!(!v.is_valid(&body));
    body["items"][0].as_object_mut().unwrap().remove("extra");
    body["items"][1].as_object_mut().unwrap().remove("rotation_deg");
    assert!(!v.is_valid(&body));
}

#[test]
fn canonical_documents_match_schema() {
    let config = PipelineConfig {
        canvas_width: 200,
        canvas_height: 280,
        ..Default::default()
    };
    let out = run_pipeline(&request(), &config, &FontRegistry::builtin(), None).unwrap();
    assert!(!out.document.art_layers.is_empty());
    let v = validator("document.json", None);
    let mut doc: Value = serde_json::from_str(&serialize(&out.document)).unwrap();
    assert_valid(&v, &doc, "document");

    doc["elements"][0]["typography"]["color"] = json!("red");
    assert!(!v.is_valid(&doc));
    doc["elements"][0]["typography"]["color"] = json!("#FFFFFF");
    doc["surprise"] = json!(true);
    assert!(!v.is_valid(&doc));
}
