use std::sync::Arc;

use poster_core::pipeline::service::{serve, Service};
use poster_core::pipeline::PipelineConfig;
use poster_core::raster::RasterImage;
use poster_core::text::FontRegistry;
use serde_json::{json, Value};

struct Api {
    base: String,
    client: reqwest::blocking::Client,
    _server: poster_core::pipeline::service::ServerHandle,
}

impl Api {
    fn start() -> Api {
        let config = PipelineConfig {
            canvas_width: 200,
            canvas_height: 280,
            seed: 9,
            ..Default::default()
        };
        let service = Arc::new(Service::new(config, FontRegistry::builtin()));
        let server = serve(service, "127.0.0.1:0", 2).unwrap();
        Api {
            base: server.base_url(),
            client: reqwest::blocking::Client::new(),
            _server: server,
        }
    }

    fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self
            .client
            .post(format!("{}{path}", self.base))
            .json(&body)
            .send()
            .unwrap();
        let status = r.status().as_u16();
        (status, r.json().unwrap_or(Value::Null))
    }

    fn get(&self, path: &str) -> reqwest::blocking::Response {
        self.client.get(format!("{}{path}", self.base)).send().unwrap()
    }
}

fn create_body() -> Value {
    json!({"request": {"background_prompt": "meadow", "items": [
        {"role": "title", "content": "MEADOW"},
        {"role": "subtitle", "content": "open air"},
        {"role": "information", "content": "June 1"}
    ]}})
}

#[test]
fn editor_loop_over_http() {
    let api = Api::start();
    assert_eq!(api.get("/health").status().as_u16(), 200);
    let (status, snap) = api.post("/sessions", create_body());
    assert_eq!(status, 201, "{snap}");
    let id = snap["id"].as_str().unwrap().to_string();
    assert_eq!(snap["elements"][0]["has_art_layer"], true);

    let (status, snap) = api.post(
        &format!("/sessions/{id}/edits"),
        json!({"op": "move_box", "id": "title", "dx": 10, "dy": 0}),
    );
    assert_eq!(status, 200);
    assert_eq!(snap["revision"], 1);
    assert_eq!(snap["elements"][0]["restyle_pending"], true);
    assert_eq!(snap["elements"][0]["has_art_layer"], false);

    let (status, _) = api.post(
        &format!("/sessions/{id}/edits"),
        json!({"op": "move_box", "id": "title", "dx": 100000, "dy": 0}),
    );
    assert_eq!(status, 422);

    let (status, snap) = api.post(&format!("/sessions/{id}/edits"), json!({"op": "set_color", "id": "subtitle-1", "color": "#FF0000"}));
    assert_eq!(status, 200);
    assert_eq!(snap["revision"], 2);

    let (status, snap) = api.post(&format!("/sessions/{id}/restyle"), json!({}));
    assert_eq!(status, 200, "{snap}");
    assert_eq!(snap["revision"], 3);
    assert_eq!(snap["elements"][0]["has_art_layer"], true);

    let preview = api.get(&format!("/sessions/{id}/preview.png"));
    assert_eq!(preview.status().as_u16(), 200);
    assert_eq!(preview.headers()["x-revision"], "3");
    let png = preview.bytes().unwrap();
    assert_eq!(RasterImage::from_png(&png).unwrap().dims(), (200, 280));

    let doc: Value = api.get(&format!("/sessions/{id}/document")).json().unwrap();
    assert_eq!(doc["elements"][1]["typography"]["color"], "#FF0000");

    let (status, snap) = api.post(&format!("/sessions/{id}/undo"), json!({"revision": 0}));
    assert_eq!(status, 200);
    assert_eq!(snap["revision"], 4);
    let v0 = api.get(&format!("/sessions/{id}/document?revision=0")).text().unwrap();
    let v4 = api.get(&format!("/sessions/{id}/document")).text().unwrap();
    assert_eq!(v0, v4);
}

#[test]
fn stale_preview_is_conflict() {
    let api = Api::start();
    let (_, snap) = api.post("/sessions", create_body());
    let id = snap["id"].as_str().unwrap();
    let (status, snap) = api.post(
        &format!("/sessions/{id}/edits"),
        json!({"op": "replace_background", "source": {"kind": "procedural",
               "spec": {"kind": "solid", "color": "#FAFAFA"}}}),
    );
    assert_eq!(status, 200, "{snap}");
    assert_eq!(snap["elements"][0]["stale"], true);
    assert_eq!(api.get(&format!("/sessions/{id}/preview.png")).status().as_u16(), 409);
}

#[test]
fn stateless_endpoints() {
    let api = Api::start();
    let (status, gen) = api.post("/v1/generate", create_body());
    assert_eq!(status, 200);
    let doc = gen["document"].clone();

    let (status, r) = api.post("/v1/render", json!({"document": doc}));
    assert_eq!(status, 200);
    assert!(r["image_png_base64"].is_string());

    let (status, s) = api.post(
        "/v1/stylize",
        json!({"document": doc, "element_id": "subtitle-1", "style_prompt": "chrome"}),
    );
    assert_eq!(status, 200, "{s}");
    assert_eq!(s["document"]["art_layers"].as_array().unwrap().len(), 2);

    let (status, e) = api.post("/v1/eval", json!({"posters": [{"id": "a", "document": doc}]}));
    assert_eq!(status, 200);
    assert_eq!(e["precision"], 1.0);
    assert_eq!(e["recall"], 1.0);

    let bg = RasterImage::new(100, 100).to_png_base64().unwrap();
    let record = json!({
        "background_ref": "bg.png", "user_description": "d",
        "elements": [{"role": "title", "content": "T", "x": 0, "y": 0, "box_width": 50,
            "box_height": 20, "font_id": "sans", "font_size": 16.0, "color": "#000000",
            "alignment": "left", "rotation_deg": 0.0}]
    });
    let mut bad = record.clone();
    bad["elements"][0]["color"] = json!("black");
    let body = json!({
        "kind": "design",
        "records": [{"file": "ok.json", "record": record}, {"file": "bad.json", "record": bad}],
        "images": {"bg.png": bg}
    });
    let (status, v) = api.post("/v1/validate-dataset", body.clone());
    assert_eq!(status, 200);
    assert_eq!(v["valid"], false);
    assert_eq!(v["diagnostics"][0]["path"], "bad.json:elements[0].color");
    let (status, x) = api.post("/v1/export-finetune", body);
    assert_eq!(status, 200);
    assert_eq!(x["exported"], 1);
    assert_eq!(x["excluded"], 1);
}

#[test]
fn errors_are_json() {
    let api = Api::start();
    let (status, e) = api.post("/sessions", json!({"request": {"items": []}}));
    assert_eq!(status, 400);
    assert!(e["error"].as_str().unwrap().contains("no text items"));
    assert_eq!(api.get("/sessions/s999").status().as_u16(), 404);
    let (status, _) = api.post(
        "/sessions",
        json!({"request": {"items": [{"role": "title", "content": "x"}]},
               "reference_png_base64": RasterImage::new(8, 8).to_png_base64().unwrap()}),
    );
    assert_eq!(status, 501);
}
