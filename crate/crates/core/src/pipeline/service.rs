//! JSON-over-HTTP service used by the editor.
//!
//! Routing is a pure function ([`Service::handle`]) so it can be tested
//! without sockets; [`serve`] puts it behind a threaded `tiny_http` server.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use serde::Deserialize;
use serde_json::{json, Value};
use tiny_http::{Header, Method, Response, Server};

use super::{
    run_pipeline, run_reference_flow, stylize_element, PipelineConfig, PipelineError,
    PipelineOutput, PosterRequest, Session, StageError,
};
use crate::backends::{BackendError, BackendKind};
use crate::compose::{flatten, ComposeError};
use crate::dataset::{
    export_finetune, validate_design, validate_textseg, Diagnostic, MemoryAssets, RecordKind,
};
use crate::doc::{deserialize, serialize, EditCommand, EditError, ElementId, PosterDocument};
use crate::eval::{evaluate_corpus, EvalPoster};
use crate::plan::PlanError;
use crate::raster::{CoverageMask, RasterImage};
use crate::text::{render_all, FontRegistry};

#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub content_type: &'static str,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn json(status: u16, value: &Value) -> Self {
        Self {
            status,
            content_type: "application/json",
            headers: Vec::new(),
            body: value.to_string().into_bytes(),
        }
    }

    fn png(bytes: Vec<u8>, revision: usize) -> Self {
        Self {
            status: 200,
            content_type: "image/png",
            headers: vec![("X-Revision".into(), revision.to_string())],
            body: bytes,
        }
    }

    fn empty(status: u16) -> Self {
        Self {
            status,
            content_type: "application/json",
            headers: Vec::new(),
            body: Vec::new(),
        }
    }

    pub fn body_json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or(Value::Null)
    }
}

fn error(status: u16, message: impl std::fmt::Display) -> HttpResponse {
    HttpResponse::json(status, &json!({ "error": message.to_string() }))
}

fn stage_status(kind: &StageError) -> u16 {
    match kind {
        StageError::Input(_) => 400,
        StageError::Edit(EditError::UnknownElement(_) | EditError::NoArtLayer(_)) => 404,
        StageError::Edit(EditError::InvariantViolation { .. }) => 422,
        StageError::Plan(PlanError::Unsatisfiable(_)) => 422,
        StageError::Compose(ComposeError::StaleArtLayer(_)) => 409,
        StageError::Backend(BackendError::Input(_)) => 400,
        StageError::Backend(BackendError::Cancelled) => 499,
        StageError::Backend(_) => 502,
        StageError::UnsupportedWithoutBackend(_) => 501,
        _ => 500,
    }
}

fn pipeline_error(e: &PipelineError) -> HttpResponse {
    HttpResponse::json(
        stage_status(&e.kind),
        &json!({ "error": e.to_string(), "stage": e.stage }),
    )
}

fn parse<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, HttpResponse> {
    serde_json::from_slice(body).map_err(|e| error(400, format!("bad request body: {e}")))
}

fn doc_value(doc: &PosterDocument) -> Value {
    serde_json::from_str(&serialize(doc)).expect("canonical document is JSON")
}

fn doc_from_value(v: &Value) -> Result<PosterDocument, HttpResponse> {
    deserialize(&v.to_string()).map_err(|e| error(400, format!("document: {e}")))
}

fn png_b64(img: &RasterImage) -> String {
    img.to_png_base64().expect("png encode")
}

fn image_from_b64(text: &str, what: &str) -> Result<RasterImage, HttpResponse> {
    RasterImage::from_png_base64(text).map_err(|e| error(400, format!("{what}: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    request: PosterRequest,
    #[serde(default)]
    background_png_base64: Option<String>,
    /// Reference poster for the text-removal flow.
    #[serde(default)]
    reference_png_base64: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EditsBody {
    One(EditCommand),
    Many { edits: Vec<EditCommand> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UndoBody {
    revision: usize,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RestyleBody {
    #[serde(default)]
    element_id: Option<String>,
    #[serde(default)]
    style_prompt: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RenderBody {
    document: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StylizeBody {
    document: Value,
    element_id: String,
    #[serde(default)]
    style_prompt: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalItem {
    id: String,
    document: Value,
    /// Flattened from the document when absent.
    #[serde(default)]
    image_png_base64: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalBody {
    posters: Vec<EvalItem>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetRecord {
    file: String,
    record: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetBody {
    kind: RecordKind,
    records: Vec<DatasetRecord>,
    /// Images by reference, PNG base64.
    #[serde(default)]
    images: BTreeMap<String, String>,
    /// Grayscale masks by reference, PNG base64.
    #[serde(default)]
    masks: BTreeMap<String, String>,
    #[serde(default)]
    template: Option<String>,
}

impl DatasetBody {
    fn assets(&self) -> Result<MemoryAssets, HttpResponse> {
        let mut a = MemoryAssets::default();
        for (k, v) in &self.images {
            a.images.insert(k.clone(), image_from_b64(v, k)?);
        }
        for (k, v) in &self.masks {
            let m = CoverageMask::from_png_base64(v).map_err(|e| error(400, format!("{k}: {e}")))?;
            a.masks.insert(k.clone(), m);
        }
        Ok(a)
    }
}

fn prefixed(file: &str, diags: Vec<Diagnostic>) -> impl Iterator<Item = Diagnostic> + '_ {
    diags.into_iter().map(move |mut d| {
        d.path = if d.path.is_empty() {
            file.to_string()
        } else {
            format!("{file}:{}", d.path)
        };
        d
    })
}

type SessionMap = HashMap<String, Arc<Mutex<Session>>>;

pub struct Service {
    config: PipelineConfig,
    registry: Arc<FontRegistry>,
    sessions: Mutex<SessionMap>,
    next_id: AtomicU64,
}

impl Service {
    pub fn new(config: PipelineConfig, registry: FontRegistry) -> Self {
        Self {
            config,
            registry: Arc::new(registry),
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, HttpResponse> {
        self.sessions
            .lock()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| error(404, format!("no session {id:?}")))
    }

    /// Routes one request. Never panics on client input.
    pub fn handle(&self, method: &str, url: &str, body: &[u8]) -> HttpResponse {
        let (path, query) = url.split_once('?').unwrap_or((url, ""));
        let parts: Vec<&str> = path.trim_matches('/').split('/').collect();
        let r = match (method, parts.as_slice()) {
            ("GET", ["health"]) => Ok(HttpResponse::json(200, &json!({"status": "ok"}))),
            ("POST", ["sessions"]) => self.create_session(body),
            ("GET", ["sessions"]) => Ok(self.list_sessions()),
            ("GET", ["sessions", id]) => self.get_session(id),
            ("DELETE", ["sessions", id]) => self.delete_session(id),
            ("POST", ["sessions", id, "edits"]) => self.post_edits(id, body),
            ("POST", ["sessions", id, "undo"]) => self.post_undo(id, body),
            ("POST", ["sessions", id, "restyle"]) => self.post_restyle(id, body),
            ("GET", ["sessions", id, "preview.png"]) => self.get_preview(id),
            ("GET", ["sessions", id, "document"]) => self.get_document(id, query),
            ("POST", ["v1", "generate"]) => self.generate(body),
            ("POST", ["v1", "render"]) => self.render(body),
            ("POST", ["v1", "stylize"]) => self.stylize(body),
            ("POST", ["v1", "eval"]) => self.eval(body),
            ("POST", ["v1", "validate-dataset"]) => self.validate_dataset(body),
            ("POST", ["v1", "export-finetune"]) => self.export(body),
            _ => Err(error(404, format!("no route for {method} {path}"))),
        };
        r.unwrap_or_else(|e| e)
    }

    fn run(&self, body: &[u8]) -> Result<(PipelineOutput, PipelineConfig), HttpResponse> {
        let b: CreateBody = parse(body)?;
        let mut config = self.config.clone();
        if let Some(seed) = b.seed {
            config.seed = seed;
        }
        let mut req = b.request;
        if let Some(bg) = &b.background_png_base64 {
            req.background_pixels = Some(image_from_b64(bg, "background_png_base64")?);
        } else if req.background_image.is_some() {
            return Err(error(400, "background_image paths are not accepted over HTTP"));
        }
        let out = match &b.reference_png_base64 {
            Some(r) => {
                let reference = image_from_b64(r, "reference_png_base64")?;
                run_reference_flow(&reference, &req, &config, &self.registry, None)
            }
            None => run_pipeline(&req, &config, &self.registry, None),
        };
        Ok((out.map_err(|e| pipeline_error(&e))?, config))
    }

    fn create_session(&self, body: &[u8]) -> Result<HttpResponse, HttpResponse> {
        let (out, config) = self.run(body)?;
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let mut session = Session::new(id.clone(), out.document, config);
        session.diagnostics = out.diagnostics;
        let snap = session.snapshot();
        self.sessions
            .lock()
            .expect("sessions lock")
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(HttpResponse::json(201, &json!(snap)))
    }

    fn list_sessions(&self) -> HttpResponse {
        let map = self.sessions.lock().expect("sessions lock");
        let mut ids: Vec<&String> = map.keys().collect();
        ids.sort_by_key(|id| (id.len(), id.to_string()));
        HttpResponse::json(200, &json!({ "sessions": ids }))
    }

    fn get_session(&self, id: &str) -> Result<HttpResponse, HttpResponse> {
        let s = self.session(id)?;
        let snap = s.lock().expect("session lock").snapshot();
        Ok(HttpResponse::json(200, &json!(snap)))
    }

    fn delete_session(&self, id: &str) -> Result<HttpResponse, HttpResponse> {
        self.sessions
            .lock()
            .expect("sessions lock")
            .remove(id)
            .map(|_| HttpResponse::empty(204))
            .ok_or_else(|| error(404, format!("no session {id:?}")))
    }

    /// Edits in one body apply all-or-nothing.
    fn post_edits(&self, id: &str, body: &[u8]) -> Result<HttpResponse, HttpResponse> {
        let edits = match parse::<EditsBody>(body)? {
            EditsBody::One(e) => vec![e],
            EditsBody::Many { edits } => edits,
        };
        let s = self.session(id)?;
        let mut guard = s.lock().expect("session lock");
        let mut work = guard.clone();
        for e in &edits {
            work.edit(e, None).map_err(|e| pipeline_error(&e))?;
        }
        *guard = work;
        Ok(HttpResponse::json(200, &json!(guard.snapshot())))
    }

    fn post_undo(&self, id: &str, body: &[u8]) -> Result<HttpResponse, HttpResponse> {
        let b: UndoBody = parse(body)?;
        let s = self.session(id)?;
        let mut guard = s.lock().expect("session lock");
        guard.undo(b.revision).map_err(|e| pipeline_error(&e))?;
        Ok(HttpResponse::json(200, &json!(guard.snapshot())))
    }

    fn post_restyle(&self, id: &str, body: &[u8]) -> Result<HttpResponse, HttpResponse> {
        let b: RestyleBody = if body.iter().all(u8::is_ascii_whitespace) {
            RestyleBody::default()
        } else {
            parse(body)?
        };
        let s = self.session(id)?;
        let mut guard = s.lock().expect("session lock");
        let target = b.element_id.map(ElementId::new);
        guard
            .restyle(target.as_ref(), b.style_prompt.as_deref(), &self.registry, None)
            .map_err(|e| pipeline_error(&e))?;
        Ok(HttpResponse::json(200, &json!(guard.snapshot())))
    }

    fn get_preview(&self, id: &str) -> Result<HttpResponse, HttpResponse> {
        let s = self.session(id)?;
        let guard = s.lock().expect("session lock");
        let img = guard.preview(&self.registry).map_err(|e| pipeline_error(&e))?;
        let png = img.to_png().map_err(|e| error(500, e))?;
        Ok(HttpResponse::png(png, guard.revision()))
    }

    fn get_document(&self, id: &str, query: &str) -> Result<HttpResponse, HttpResponse> {
        let s = self.session(id)?;
        let guard = s.lock().expect("session lock");
        let revision = match query.strip_prefix("revision=") {
            Some(k) => k
                .parse::<usize>()
                .map_err(|_| error(400, format!("bad revision {k:?}")))?,
            None if query.is_empty() => guard.revision(),
            None => return Err(error(400, format!("unknown query {query:?}"))),
        };
        let doc = guard
            .at_revision(revision)
            .ok_or_else(|| error(404, format!("no revision {revision}")))?;
        let mut resp = HttpResponse::json(200, &doc_value(doc));
        resp.headers.push(("X-Revision".into(), revision.to_string()));
        Ok(resp)
    }

    fn generate(&self, body: &[u8]) -> Result<HttpResponse, HttpResponse> {
        let (out, _) = self.run(body)?;
        Ok(HttpResponse::json(
            200,
            &json!({
                "document": doc_value(&out.document),
                "image_png_base64": png_b64(&out.image),
                "diagnostics": out.diagnostics,
            }),
        ))
    }

    fn render(&self, body: &[u8]) -> Result<HttpResponse, HttpResponse> {
        let b: RenderBody = parse(body)?;
        let doc = doc_from_value(&b.document)?;
        let out = render_all(&doc, &self.registry);
        let img = flatten(&doc, &out.elements).map_err(|e| {
            let status = stage_status(&StageError::Compose(e.clone()));
            error(status, e)
        })?;
        Ok(HttpResponse::json(
            200,
            &json!({ "image_png_base64": png_b64(&img), "warnings": out.warnings }),
        ))
    }

    fn stylize(&self, body: &[u8]) -> Result<HttpResponse, HttpResponse> {
        let b: StylizeBody = parse(body)?;
        let doc = doc_from_value(&b.document)?;
        let id = ElementId::new(b.element_id);
        let content = doc
            .element(&id)
            .map(|e| e.content.clone())
            .ok_or_else(|| error(404, format!("unknown element {id}")))?;
        let rendered = render_all(&doc, &self.registry).elements;
        let prompt = b.style_prompt.unwrap_or(content);
        let (doc, diagnostics) = stylize_element(&doc, &rendered, &id, &prompt, &self.config, None)
            .map_err(|e| pipeline_error(&e))?;
        let img = flatten(&doc, &rendered).map_err(|e| error(409, e))?;
        Ok(HttpResponse::json(
            200,
            &json!({
                "document": doc_value(&doc),
                "image_png_base64": png_b64(&img),
                "diagnostics": diagnostics,
            }),
        ))
    }

    fn eval(&self, body: &[u8]) -> Result<HttpResponse, HttpResponse> {
        let b: EvalBody = parse(body)?;
        let mut docs = Vec::new();
        let mut images = Vec::new();
        for p in &b.posters {
            let doc = doc_from_value(&p.document)?;
            let img = match &p.image_png_base64 {
                Some(s) => image_from_b64(s, &p.id)?,
                None => {
                    let r = render_all(&doc, &self.registry).elements;
                    flatten(&doc, &r).map_err(|e| error(409, format!("{}: {e}", p.id)))?
                }
            };
            docs.push(doc);
            images.push(img);
        }
        let posters: Vec<EvalPoster<'_>> = b
            .posters
            .iter()
            .zip(docs.iter().zip(&images))
            .map(|(p, (document, image))| EvalPoster {
                id: p.id.clone(),
                image,
                document,
            })
            .collect();
        let report = evaluate_corpus(
            &posters,
            &self.registry,
            self.config.endpoint(BackendKind::Ocr),
            None,
        )
        .map_err(|e| error(stage_status(&StageError::Backend(e.clone())), e))?;
        Ok(HttpResponse::json(200, &json!(report)))
    }

    fn validate_dataset(&self, body: &[u8]) -> Result<HttpResponse, HttpResponse> {
        let b: DatasetBody = parse(body)?;
        let assets = b.assets()?;
        let mut diagnostics = Vec::new();
        for r in &b.records {
            let d = match b.kind {
                RecordKind::Design => validate_design(&r.record, &assets),
                RecordKind::Textseg => validate_textseg(&r.record, &assets),
            };
            diagnostics.extend(prefixed(&r.file, d));
        }
        Ok(HttpResponse::json(
            200,
            &json!({ "valid": diagnostics.is_empty(), "diagnostics": diagnostics }),
        ))
    }

    fn export(&self, body: &[u8]) -> Result<HttpResponse, HttpResponse> {
        let b: DatasetBody = parse(body)?;
        if b.kind != RecordKind::Design {
            return Err(error(400, "only design corpora can be exported"));
        }
        let assets = b.assets()?;
        let records: Vec<(String, Value)> = b
            .records
            .iter()
            .map(|r| (r.file.clone(), r.record.clone()))
            .collect();
        let template = b.template.as_deref().unwrap_or(crate::dataset::TEMPLATE_PLANNER_V1);
        let out = export_finetune(&records, &assets, template).map_err(|e| error(400, e))?;
        Ok(HttpResponse::json(
            200,
            &json!({
                "jsonl": out.jsonl,
                "exported": out.exported,
                "excluded": out.excluded,
                "diagnostics": out.diagnostics,
            }),
        ))
    }
}

/// A running HTTP server; dropping it stops the workers.
pub struct ServerHandle {
    server: Arc<Server>,
    addr: String,
    workers: Vec<thread::JoinHandle<()>>,
}

impl ServerHandle {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until every worker exits.
    pub fn join(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

/// Serves `service` on `addr` (e.g. `127.0.0.1:8080`, port 0 for any) with
/// `workers` threads.
pub fn serve(service: Arc<Service>, addr: &str, workers: usize) -> std::io::Result<ServerHandle> {
    let server = Arc::new(Server::http(addr).map_err(std::io::Error::other)?);
    let bound = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| std::io::Error::other("no ip address"))?;
    let workers = (0..workers.max(1))
        .map(|_| {
            let server = Arc::clone(&server);
            let service = Arc::clone(&service);
            thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    let mut body = Vec::new();
                    let _ = request.as_reader().read_to_end(&mut body);
                    let method = match request.method() {
                        Method::Get => "GET",
                        Method::Post => "POST",
                        Method::Delete => "DELETE",
                        Method::Put => "PUT",
                        _ => "OTHER",
                    };
                    let url = request.url().to_string();
                    let resp = service.handle(method, &url, &body);
                    log::info!("{method} {url} -> {}", resp.status);
                    let mut r = Response::from_data(resp.body).with_status_code(resp.status);
                    let ct = Header::from_bytes("Content-Type", resp.content_type).expect("header");
                    r = r.with_header(ct);
                    for (k, v) in resp.headers {
                        if let Ok(h) = Header::from_bytes(k.as_bytes(), v.as_bytes()) {
                            r = r.with_header(h);
                        }
                    }
                    let _ = request.respond(r);
                }
            })
        })
        .collect();
    Ok(ServerHandle {
        server,
        addr: bound.to_string(),
        workers,
    })
}
