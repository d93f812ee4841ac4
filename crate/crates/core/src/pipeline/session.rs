use serde::{Deserialize, Serialize};

use super::{resolve_background, stylize_element, AtStage, PipelineConfig, PipelineError, Stage, StageError};
use crate::backends::CancelToken;
use crate::compose::flatten;
use crate::doc::{apply_edit, deserialize, serialize, EditCommand, ElementId, PosterDocument};
use crate::raster::RasterImage;
use crate::text::{render_all, FontRegistry};

/// An editing session. History is append-only: edits, restyles and undos
/// each push a new document, and revision `k` is `history[k]`.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    history: Vec<PosterDocument>,
    pub stage: Stage,
    pub config: PipelineConfig,
    pub diagnostics: Vec<String>,
}

/// Summary returned by the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub revision: usize,
    pub stage: Stage,
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub elements: Vec<ElementSummary>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementSummary {
    pub id: String,
    pub role: String,
    pub content: String,
    pub has_art_layer: bool,
    pub stale: bool,
    pub restyle_pending: bool,
}

#[derive(Serialize, Deserialize)]
struct SessionFile {
    id: String,
    stage: Stage,
    config: PipelineConfig,
    history: Vec<String>,
}

impl Session {
    pub fn new(id: impl Into<String>, doc: PosterDocument, config: PipelineConfig) -> Self {
        Self {
            id: id.into(),
            history: vec![doc],
            stage: Stage::Done,
            config,
            diagnostics: Vec::new(),
        }
    }

    pub fn current(&self) -> &PosterDocument {
        self.history.last().expect("history is never empty")
    }

    pub fn revision(&self) -> usize {
        self.history.len() - 1
    }

    pub fn at_revision(&self, k: usize) -> Option<&PosterDocument> {
        self.history.get(k)
    }

    /// Applies one edit. A background replacement without pixels is resolved
    /// from its source before it is recorded.
    pub fn edit(
        &mut self,
        edit: &EditCommand,
        cancel: Option<&CancelToken>,
    ) -> Result<usize, PipelineError> {
        let stage = match edit {
            EditCommand::ReplaceBackground { .. } => Stage::Background,
            _ => Stage::Planning,
        };
        let mut next = apply_edit(self.current(), edit).at(stage)?;
        if next.background.pixels.is_none() {
            let (resolved, d) = resolve_background(&next, &self.config, cancel).at(stage)?;
            next = resolved;
            self.diagnostics = d;
        } else {
            self.diagnostics.clear();
        }
        self.history.push(next);
        self.stage = stage;
        Ok(self.revision())
    }

    /// Restores revision `k` by appending a copy of it.
    pub fn undo(&mut self, k: usize) -> Result<usize, PipelineError> {
        let doc = self.history.get(k).cloned().ok_or_else(|| {
            PipelineError::new(
                Stage::Planning,
                StageError::Input(format!("no revision {k}; latest is {}", self.revision())),
            )
        })?;
        self.history.push(doc);
        self.stage = Stage::Done;
        self.diagnostics.clear();
        Ok(self.revision())
    }

    /// Elements with a stale layer or a pending restyle, in document order.
    pub fn restyle_targets(&self) -> Vec<ElementId> {
        let doc = self.current();
        doc.elements
            .iter()
            .filter(|e| e.restyle_pending || doc.art_layer(&e.id).is_some_and(|l| l.stale))
            .map(|e| e.id.clone())
            .collect()
    }

    /// Restyles `target`, or every element returned by [`Self::restyle_targets`].
    /// The style prompt defaults to the element content.
    pub fn restyle(
        &mut self,
        target: Option<&ElementId>,
        style_prompt: Option<&str>,
        registry: &FontRegistry,
        cancel: Option<&CancelToken>,
    ) -> Result<usize, PipelineError> {
        let targets = match target {
            Some(id) => vec![id.clone()],
            None => self.restyle_targets(),
        };
        if targets.is_empty() {
            return Err(PipelineError::new(
                Stage::Stylization,
                StageError::Input("nothing to restyle".into()),
            ));
        }
        let mut doc = self.current().clone();
        let mut diagnostics = Vec::new();
        for id in &targets {
            let content = doc
                .element(id)
                .map(|e| e.content.clone())
                .ok_or_else(|| {
                    PipelineError::new(Stage::Stylization, StageError::Input(format!("unknown element {id}")))
                })?;
            let rendered = render_all(&doc, registry).elements;
            let (next, d) = stylize_element(
                &doc,
                &rendered,
                id,
                style_prompt.unwrap_or(&content),
                &self.config,
                cancel,
            )?;
            doc = next;
            diagnostics.extend(d);
        }
        doc.bump_revision();
        self.history.push(doc);
        self.stage = Stage::Done;
        self.diagnostics = diagnostics;
        Ok(self.revision())
    }

    /// Flattened current document.
    pub fn preview(&self, registry: &FontRegistry) -> Result<RasterImage, PipelineError> {
        let doc = self.current();
        let rendered = render_all(doc, registry).elements;
        flatten(doc, &rendered).at(Stage::Composition)
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        let doc = self.current();
        SessionSnapshot {
            id: self.id.clone(),
            revision: self.revision(),
            stage: self.stage,
            canvas_width: doc.canvas_width,
            canvas_height: doc.canvas_height,
            elements: doc
                .elements
                .iter()
                .map(|e| {
                    let layer = doc.art_layer(&e.id);
                    ElementSummary {
                        id: e.id.to_string(),
                        role: e.role.as_str().to_string(),
                        content: e.content.clone(),
                        has_art_layer: layer.is_some(),
                        stale: layer.is_some_and(|l| l.stale),
                        restyle_pending: e.restyle_pending,
                    }
                })
                .collect(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = SessionFile {
            id: self.id.clone(),
            stage: self.stage,
            config: self.config.clone(),
            history: self.history.iter().map(serialize).collect(),
        };
        serde_json::to_string(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Session, StageError> {
        let file: SessionFile =
            serde_json::from_str(text).map_err(|e| StageError::Input(format!("session: {e}")))?;
        let history = file
            .history
            .iter()
            .map(|d| deserialize(d))
            .collect::<Result<Vec<_>, _>>()?;
        if history.is_empty() {
            return Err(StageError::Input("session history is empty".into()));
        }
        Ok(Session {
            id: file.id,
            history,
            stage: file.stage,
            config: file.config,
            diagnostics: Vec::new(),
        })
    }
}
