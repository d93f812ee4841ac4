//! Scripted in-process server speaking every backend protocol, for tests and
//! offline demos.
//!
//! ```no_run
//! use poster_core::backends::mock::MockServer;
//! use poster_core::backends::BackendKind;
//!
//! let server = MockServer::start().unwrap();
//! server.fail_next(BackendKind::Background, 2, 503);
//! let endpoint = server.endpoint(BackendKind::Background);
//! ```

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

use super::wire::{BackgroundRequest, OcrWord, RefineRequest, StylizeRequestBody};
use super::{procedural_background, stylize_local, BackendEndpoint, BackendKind, StylizeRequest};
use crate::doc::ProceduralSpec;
use crate::raster::{CoverageMask, RasterImage};

/// What the server sends back for one request.
#[derive(Debug, Clone, PartialEq)]
pub enum MockReply {
    Json(Value),
    Raw { status: u16, body: String },
}

impl MockReply {
    pub fn status(status: u16) -> Self {
        MockReply::Raw {
            status,
            body: format!("{{\"error\":\"scripted status {status}\"}}"),
        }
    }
}

pub type Handler = Box<dyn Fn(&Value) -> MockReply + Send>;

#[derive(Debug, Clone, PartialEq)]
pub struct RecordedRequest {
    pub kind: BackendKind,
    pub body: String,
    pub authorization: Option<String>,
}

#[derive(Default)]
struct State {
    queued: HashMap<BackendKind, VecDeque<MockReply>>,
    always: HashMap<BackendKind, MockReply>,
    handlers: HashMap<BackendKind, Handler>,
    delays: HashMap<BackendKind, Duration>,
    requests: Vec<RecordedRequest>,
    background_dims: Option<(u32, u32)>,
    ocr_words: Vec<OcrWord>,
}

pub struct MockServer {
    base: String,
    server: Arc<Server>,
    state: Arc<Mutex<State>>,
    worker: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds an ephemeral localhost port and starts serving.
    pub fn start() -> std::io::Result<MockServer> {
        let server = Server::http("127.0.0.1:0").map_err(std::io::Error::other)?;
        let server = Arc::new(server);
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| std::io::Error::other("no ip address"))?;
        let state = Arc::new(Mutex::new(State::default()));
        let worker = {
            let server = Arc::clone(&server);
            let state = Arc::clone(&state);
            thread::spawn(move || serve(&server, &state))
        };
        Ok(MockServer {
            base: format!("http://127.0.0.1:{port}"),
            server,
            state,
            worker: Some(worker),
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    pub fn path(kind: BackendKind) -> &'static str {
        match kind {
            BackendKind::Background => "/v1/background",
            BackendKind::Stylizer => "/v1/stylize",
            BackendKind::PromptRefiner => "/v1/refine",
            BackendKind::Ocr => "/v1/ocr",
            BackendKind::Planner => "/v1/plan",
            BackendKind::TextRemoval => "/v1/remove-text",
        }
    }

    pub fn url(&self, kind: BackendKind) -> String {
        format!("{}{}", self.base, Self::path(kind))
    }

    /// Endpoint for `kind` with a short backoff so retry tests stay fast.
    pub fn endpoint(&self, kind: BackendKind) -> BackendEndpoint {
        BackendEndpoint::new(kind, self.url(kind))
            .with_backoff_ms(5)
            .with_timeout(10.0)
    }

    fn with<R>(&self, f: impl FnOnce(&mut State) -> R) -> R {
        f(&mut self.state.lock().expect("mock state"))
    }

    /// The next `n` requests to `kind` get `status`.
    pub fn fail_next(&self, kind: BackendKind, n: usize, status: u16) {
        self.with(|s| {
            let q = s.queued.entry(kind).or_default();
            q.extend((0..n).map(|_| MockReply::status(status)));
        });
    }

    /// Queue one scripted reply ahead of the default handler.
    pub fn push_reply(&self, kind: BackendKind, reply: MockReply) {
        self.with(|s| s.queued.entry(kind).or_default().push_back(reply));
    }

    /// Every request to `kind` gets `reply` until [`MockServer::clear`].
    pub fn always(&self, kind: BackendKind, reply: MockReply) {
        self.with(|s| {
            s.always.insert(kind, reply);
        });
    }

    pub fn set_handler(&self, kind: BackendKind, handler: Handler) {
        self.with(|s| {
            s.handlers.insert(kind, handler);
        });
    }

    pub fn set_delay(&self, kind: BackendKind, delay: Duration) {
        self.with(|s| {
            s.delays.insert(kind, delay);
        });
    }

    /// Background replies use these dims instead of the requested ones.
    pub fn set_background_dims(&self, width: u32, height: u32) {
        self.with(|s| s.background_dims = Some((width, height)));
    }

    pub fn set_ocr_words(&self, words: &[(&str, f64)]) {
        self.with(|s| {
            s.ocr_words = words
                .iter()
                .map(|(t, c)| OcrWord {
                    text: t.to_string(),
                    confidence: *c,
                })
                .collect()
        });
    }

    /// Drops scripted replies, handlers and delays for `kind`.
    pub fn clear(&self, kind: BackendKind) {
        self.with(|s| {
            s.queued.remove(&kind);
            s.always.remove(&kind);
            s.handlers.remove(&kind);
            s.delays.remove(&kind);
        });
    }

    pub fn count(&self, kind: BackendKind) -> usize {
        self.with(|s| s.requests.iter().filter(|r| r.kind == kind).count())
    }

    pub fn requests(&self, kind: BackendKind) -> Vec<RecordedRequest> {
        self.with(|s| {
            s.requests
                .iter()
                .filter(|r| r.kind == kind)
                .cloned()
                .collect()
        })
    }

    pub fn reset_counts(&self) {
        self.with(|s| s.requests.clear());
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn kind_for(path: &str) -> Option<BackendKind> {
    let path = path.split('?').next().unwrap_or(path);
    BackendKind::ALL
        .into_iter()
        .find(|k| MockServer::path(*k) == path)
}

fn serve(server: &Server, state: &Mutex<State>) {
    for mut request in server.incoming_requests() {
        let Some(kind) = kind_for(request.url()) else {
            let _ = request.respond(Response::from_string("not found").with_status_code(404));
            continue;
        };
        let mut body = String::new();
        let _ = request.as_reader().read_to_string(&mut body);
        let authorization = request
            .headers()
            .iter()
            .find(|h| h.field.equiv("Authorization"))
            .map(|h| h.value.to_string());

        let (reply, delay) = {
            let mut s = state.lock().expect("mock state");
            s.requests.push(RecordedRequest {
                kind,
                body: body.clone(),
                authorization,
            });
            let delay = s.delays.get(&kind).copied();
            let scripted = s
                .queued
                .get_mut(&kind)
                .and_then(VecDeque::pop_front)
                .or_else(|| s.always.get(&kind).cloned());
            let reply = match scripted {
                Some(r) => r,
                None => match serde_json::from_str::<Value>(&body) {
                    Err(e) => MockReply::Raw {
                        status: 400,
                        body: format!("{{\"error\":\"bad json: {e}\"}}"),
                    },
                    Ok(v) => match s.handlers.get(&kind) {
                        Some(h) => h(&v),
                        None => default_reply(kind, &v, &s),
                    },
                },
            };
            (reply, delay)
        };
        if let Some(d) = delay {
            thread::sleep(d);
        }
        let (status, text) = match reply {
            MockReply::Json(v) => (200, v.to_string()),
            MockReply::Raw { status, body } => (status, body),
        };
        let header = Header::from_bytes("Content-Type", "application/json").expect("header");
        let _ = request.respond(
            Response::from_string(text)
                .with_status_code(status)
                .with_header(header),
        );
    }
}

fn bad_request(message: impl std::fmt::Display) -> MockReply {
    MockReply::Raw {
        status: 400,
        body: json!({ "error": message.to_string() }).to_string(),
    }
}

fn image_reply(img: &RasterImage) -> MockReply {
    match img.to_png_base64() {
        Ok(b64) => MockReply::Json(json!({ "image_png_base64": b64 })),
        Err(e) => MockReply::Raw {
            status: 500,
            body: json!({ "error": e.to_string() }).to_string(),
        },
    }
}

fn default_reply(kind: BackendKind, body: &Value, state: &State) -> MockReply {
    match kind {
        BackendKind::Background => {
            let req: BackgroundRequest = match serde_json::from_value(body.clone()) {
                Ok(r) => r,
                Err(e) => return bad_request(e),
            };
            let dims = state.background_dims.unwrap_or((req.width, req.height));
            let spec = ProceduralSpec::GradientNoise {
                prompt: format!("remote:{}", req.prompt),
                seed: req.seed,
            };
            image_reply(&procedural_background(&spec, dims))
        }
        BackendKind::Stylizer => {
            let req: StylizeRequestBody = match serde_json::from_value(body.clone()) {
                Ok(r) => r,
                Err(e) => return bad_request(e),
            };
            let image = RasterImage::from_png_base64(&req.image_png_base64);
            let mask = CoverageMask::from_png_base64(&req.mask_png_base64);
            match (image, mask) {
                (Ok(image), Ok(mask)) if image.dims() == mask.dims() => {
                    image_reply(&stylize_local(&StylizeRequest {
                        image,
                        mask,
                        prompt: req.prompt,
                        seed: req.seed,
                    }))
                }
                _ => bad_request("undecodable or mismatched image/mask"),
            }
        }
        BackendKind::PromptRefiner => {
            let req: RefineRequest = match serde_json::from_value(body.clone()) {
                Ok(r) => r,
                Err(e) => return bad_request(e),
            };
            let prompt = if req.context == "describe" {
                "a softly lit abstract background".to_string()
            } else {
                format!("{} ({} refined)", req.text, req.context)
            };
            MockReply::Json(json!({ "prompt": prompt }))
        }
        BackendKind::Ocr => MockReply::Json(json!({ "words": state.ocr_words })),
        BackendKind::Planner => match crate::plan::mock_plan_reply(body) {
            Ok(v) => MockReply::Json(v),
            Err(e) => bad_request(e),
        },
        BackendKind::TextRemoval => {
            let img = body
                .get("image_png_base64")
                .and_then(Value::as_str)
                .map(RasterImage::from_png_base64);
            match img {
                Some(Ok(img)) => {
                    // stand-in for inpainting: flat fill with the mean color
                    let n = (img.width() as u64 * img.height() as u64).max(1);
                    let mut sum = [0u64; 4];
                    for px in img.as_raw().chunks_exact(4) {
                        for c in 0..4 {
                            sum[c] += px[c] as u64;
                        }
                    }
                    let mean = sum.map(|s| (s / n) as u8);
                    image_reply(&RasterImage::filled(img.width(), img.height(), mean))
                }
                _ => bad_request("missing image_png_base64"),
            }
        }
    }
}
