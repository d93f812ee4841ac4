//! Python bindings: `import poster_engine`.
//!
//! Structured values (requests, edits, configs, reports) cross the boundary as
//! plain dicts and lists, or as JSON strings. Images are PNG `bytes`.

use std::fmt::Display;
use std::path::Path;

use poster_core::compose::flatten;
use poster_core::dataset::{export_finetune as export_records, Corpus, RecordKind};
use poster_core::doc::{deserialize, serialize, EditCommand, ElementId, PosterDocument};
use poster_core::eval::{evaluate_corpus, normalize_words, word_prf, EvalPoster};
use poster_core::pipeline::{
    resolve_background, run_pipeline, stylize_element, PipelineConfig, PipelineError,
    PosterRequest, Session as CoreSession,
};
use poster_core::raster::RasterImage;
use poster_core::text::{render_all, FontRegistry};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(poster_engine, PosterError, PyException);

fn fail(e: impl Display) -> PyErr {
    PosterError::new_err(e.to_string())
}

fn pipeline_err(e: PipelineError) -> PyErr {
    if e.is_input() {
        PyValueError::new_err(e.to_string())
    } else {
        fail(e)
    }
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(fail)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Accepts a JSON string or any JSON-serializable Python value.
fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = match obj.extract::<String>() {
        Ok(s) => s,
        Err(_) => obj
            .py()
            .import("json")?
            .call_method1("dumps", (obj,))?
            .extract()?,
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn png<'py>(py: Python<'py>, img: &RasterImage) -> PyResult<Bound<'py, PyBytes>> {
    Ok(PyBytes::new(py, &img.to_png().map_err(fail)?))
}

fn edits_from(obj: &Bound<'_, PyAny>) -> PyResult<Vec<EditCommand>> {
    let value: serde_json::Value = from_py(obj)?;
    let parsed = match value {
        serde_json::Value::Array(_) => serde_json::from_value(value),
        v => serde_json::from_value(v).map(|e| vec![e]),
    };
    parsed.map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A poster document. Immutable from Python; operations return new documents.
#[pyclass(module = "poster_engine", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Document {
    inner: PosterDocument,
}

#[pymethods]
impl Document {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Document> {
        deserialize(text)
            .map(|inner| Document { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Canonical JSON text.
    fn to_json(&self) -> String {
        serialize(&self.inner)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        py.import("json")?.call_method1("loads", (self.to_json(),))
    }

    #[getter]
    fn canvas_width(&self) -> u32 {
        self.inner.canvas_width
    }

    #[getter]
    fn canvas_height(&self) -> u32 {
        self.inner.canvas_height
    }

    #[getter]
    fn element_ids(&self) -> Vec<String> {
        self.inner.elements.iter().map(|e| e.id.0.clone()).collect()
    }

    #[getter]
    fn metadata<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.metadata)
    }

    fn content(&self, element_id: &str) -> PyResult<String> {
        self.inner
            .element(&ElementId::new(element_id))
            .map(|e| e.content.clone())
            .ok_or_else(|| PyValueError::new_err(format!("unknown element {element_id}")))
    }

    fn has_art_layer(&self, element_id: &str) -> bool {
        self.inner.art_layer(&ElementId::new(element_id)).is_some()
    }

    fn __eq__(&self, other: &Document) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Document({}x{}, elements={:?}, art_layers={})",
            self.inner.canvas_width,
            self.inner.canvas_height,
            self.element_ids(),
            self.inner.art_layers.len()
        )
    }
}

/// Pipeline configuration plus the font registry it selects.
#[pyclass(module = "poster_engine", frozen)]
struct Engine {
    config: PipelineConfig,
    registry: FontRegistry,
}

impl Engine {
    fn resolved(&self, doc: &PosterDocument) -> PyResult<PosterDocument> {
        resolve_background(doc, &self.config, None)
            .map(|(d, _)| d)
            .map_err(fail)
    }
}

#[pymethods]
impl Engine {
    /// `config` is a dict or JSON string with the same keys as the CLI config
    /// file. With `use_env`, `POSTER_*` variables override it.
    #[new]
    #[pyo3(signature = (config=None, use_env=false))]
    fn new(config: Option<&Bound<'_, PyAny>>, use_env: bool) -> PyResult<Engine> {
        let mut config: PipelineConfig = match config {
            Some(c) => from_py(c)?,
            None => PipelineConfig::default(),
        };
        if use_env {
            config.apply_env().map_err(|e| PyValueError::new_err(e.to_string()))?;
        }
        config
            .validate()
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let registry = config.registry().map_err(fail)?;
        Ok(Engine { config, registry })
    }

    #[getter]
    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.config)
    }

    #[getter]
    fn font_ids(&self) -> Vec<String> {
        self.registry.ids().map(str::to_string).collect()
    }

    /// Runs the full pipeline. Returns `(document, png_bytes, diagnostics)`.
    #[pyo3(signature = (request, seed=None))]
    fn generate<'py>(
        &self,
        py: Python<'py>,
        request: &Bound<'py, PyAny>,
        seed: Option<u64>,
    ) -> PyResult<(Document, Bound<'py, PyBytes>, Vec<String>)> {
        let req: PosterRequest = from_py(request)?;
        let mut config = self.config.clone();
        if let Some(s) = seed {
            config.seed = s;
        }
        let out = run_pipeline(&req, &config, &self.registry, None).map_err(pipeline_err)?;
        let image = png(py, &out.image)?;
        Ok((Document { inner: out.document }, image, out.diagnostics))
    }

    /// Flattens a document to PNG bytes.
    fn render<'py>(&self, py: Python<'py>, doc: &Document) -> PyResult<Bound<'py, PyBytes>> {
        let d = self.resolved(&doc.inner)?;
        let rendered = render_all(&d, &self.registry);
        png(py, &flatten(&d, &rendered.elements).map_err(fail)?)
    }

    /// Applies one edit or a list of edits; all or nothing.
    fn edit(&self, doc: &Document, edits: &Bound<'_, PyAny>) -> PyResult<Document> {
        let edits = edits_from(edits)?;
        let mut s = CoreSession::new("py", self.resolved(&doc.inner)?, self.config.clone());
        for e in &edits {
            s.edit(e, None).map_err(pipeline_err)?;
        }
        Ok(Document {
            inner: s.current().clone(),
        })
    }

    #[pyo3(signature = (doc, element_id, style_prompt=None))]
    fn stylize(
        &self,
        doc: &Document,
        element_id: &str,
        style_prompt: Option<&str>,
    ) -> PyResult<Document> {
        let d = self.resolved(&doc.inner)?;
        let id = ElementId::new(element_id);
        let prompt = match (style_prompt, d.element(&id)) {
            (Some(p), _) => p.to_string(),
            (None, Some(el)) => el.content.clone(),
            (None, None) => return Err(PyValueError::new_err(format!("unknown element {id}"))),
        };
        let rendered = render_all(&d, &self.registry).elements;
        let (next, _) = stylize_element(&d, &rendered, &id, &prompt, &self.config, None)
            .map_err(pipeline_err)?;
        Ok(Document { inner: next })
    }

    /// Word precision/recall report. `images` are PNG bytes aligned with
    /// `docs`; when omitted each document is flattened.
    #[pyo3(signature = (docs, images=None))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        docs: Vec<PyRef<'py, Document>>,
        images: Option<Vec<Vec<u8>>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        if images.as_ref().is_some_and(|i| i.len() != docs.len()) {
            return Err(PyValueError::new_err("images and docs differ in length"));
        }
        let mut loaded = Vec::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            let d = self.resolved(&doc.inner)?;
            let img = match &images {
                Some(imgs) => RasterImage::from_png(&imgs[i])
                    .map_err(|e| PyValueError::new_err(e.to_string()))?,
                None => flatten(&d, &render_all(&d, &self.registry).elements).map_err(fail)?,
            };
            loaded.push((format!("poster-{i}"), d, img));
        }
        let posters: Vec<EvalPoster<'_>> = loaded
            .iter()
            .map(|(id, document, image)| EvalPoster {
                id: id.clone(),
                image,
                document,
            })
            .collect();
        let ocr = self.config.endpoint(poster_core::backends::BackendKind::Ocr);
        let report = evaluate_corpus(&posters, &self.registry, ocr, None).map_err(fail)?;
        to_py(py, &report)
    }

    /// An editing session starting at `doc`.
    fn session(&self, doc: &Document) -> PyResult<Session> {
        Ok(Session {
            inner: CoreSession::new("py", self.resolved(&doc.inner)?, self.config.clone()),
            registry: self.registry.clone(),
        })
    }
}

/// Revisioned editing history with restyling and undo.
#[pyclass(module = "poster_engine")]
struct Session {
    inner: CoreSession,
    registry: FontRegistry,
}

#[pymethods]
impl Session {
    #[getter]
    fn revision(&self) -> usize {
        self.inner.revision()
    }

    #[getter]
    fn diagnostics(&self) -> Vec<String> {
        self.inner.diagnostics.clone()
    }

    #[pyo3(signature = (revision=None))]
    fn document(&self, revision: Option<usize>) -> PyResult<Document> {
        let doc = match revision {
            Some(k) => self
                .inner
                .at_revision(k)
                .ok_or_else(|| PyValueError::new_err(format!("no revision {k}")))?,
            None => self.inner.current(),
        };
        Ok(Document { inner: doc.clone() })
    }

    /// Applies one edit or a list of edits. Returns the new revision.
    fn edit(&mut self, edits: &Bound<'_, PyAny>) -> PyResult<usize> {
        let edits = edits_from(edits)?;
        let mut next = self.inner.clone();
        for e in &edits {
            next.edit(e, None).map_err(pipeline_err)?;
        }
        self.inner = next;
        Ok(self.inner.revision())
    }

    fn undo(&mut self, revision: usize) -> PyResult<usize> {
        self.inner.undo(revision).map_err(pipeline_err)
    }

    #[pyo3(signature = (element_id=None, style_prompt=None))]
    fn restyle(&mut self, element_id: Option<&str>, style_prompt: Option<&str>) -> PyResult<usize> {
        let id = element_id.map(ElementId::new);
        self.inner
            .restyle(id.as_ref(), style_prompt, &self.registry, None)
            .map_err(pipeline_err)
    }

    fn preview<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        png(py, &self.inner.preview(&self.registry).map_err(pipeline_err)?)
    }

    fn snapshot<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.snapshot())
    }
}

/// Word-level precision/recall of detected text against specified text.
#[pyfunction]
fn text_prf<'py>(py: Python<'py>, detected: &str, specified: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &word_prf(&normalize_words(detected), &normalize_words(specified)))
}

/// Diagnostics for every record of a dataset manifest; empty when valid.
#[pyfunction]
fn validate_dataset<'py>(py: Python<'py>, manifest: &str) -> PyResult<Bound<'py, PyAny>> {
    let corpus = Corpus::load(Path::new(manifest)).map_err(fail)?;
    to_py(py, &corpus.validate())
}

/// Planner fine-tuning JSONL for a design corpus. Returns
/// `(jsonl, exported, excluded)`.
#[pyfunction]
#[pyo3(signature = (manifest, template="planner-v1"))]
fn export_finetune(manifest: &str, template: &str) -> PyResult<(String, usize, usize)> {
    let corpus = Corpus::load(Path::new(manifest)).map_err(fail)?;
    if corpus.manifest.kind != RecordKind::Design {
        return Err(PyValueError::new_err("only design corpora can be exported"));
    }
    let records: Vec<(String, serde_json::Value)> = corpus
        .records
        .iter()
        .map(|r| (r.file.clone(), r.value.clone().unwrap_or(serde_json::Value::Null)))
        .collect();
    let out = export_records(&records, &corpus.assets(), template).map_err(fail)?;
    Ok((out.jsonl, out.exported, out.excluded))
}

#[pymodule]
fn poster_engine(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PosterError", m.py().get_type::<PosterError>())?;
    m.add_class::<Document>()?;
    m.add_class::<Engine>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(text_prf, m)?)?;
    m.add_function(wrap_pyfunction!(validate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(export_finetune, m)?)?;
    Ok(())
}
