//! End-to-end orchestration: background, planning, rendering, stylization
//! and composition, plus editing sessions and the HTTP service.

mod config;
mod run;
pub mod service;
mod session;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::BackendError;
use crate::compose::ComposeError;
use crate::doc::{DocError, EditError, Role};
use crate::plan::{PlanError, UserConstraints};
use crate::raster::RasterImage;
use crate::text::RegistryError;

pub use config::{PipelineConfig, PlannerChoice};
pub use run::{
    resolve_background, run_pipeline, run_reference_flow, stylize_element, PipelineOutput,
};
pub use session::{Session, SessionSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Background,
    Planning,
    Rendering,
    Stylization,
    Composition,
    Done,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Background => "background",
            Stage::Planning => "planning",
            Stage::Rendering => "rendering",
            Stage::Stylization => "stylization",
            Stage::Composition => "composition",
            Stage::Done => "done",
        })
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Plan(PlanError),
    #[error(transparent)]
    Doc(#[from] DocError),
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("{0} needs a configured backend")]
    UnsupportedWithoutBackend(String),
}

impl From<PlanError> for StageError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Input(m) => StageError::Input(m),
            PlanError::Backend(b) => StageError::Backend(b),
            other => StageError::Plan(other),
        }
    }
}

/// A failure tagged with the stage that produced it.
#[derive(Debug, Error)]
#[error("{stage} stage: {kind}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: StageError,
}

impl PipelineError {
    pub fn new(stage: Stage, kind: impl Into<StageError>) -> Self {
        Self {
            stage,
            kind: kind.into(),
        }
    }

    pub fn is_input(&self) -> bool {
        matches!(
            self.kind,
            StageError::Input(_) | StageError::Plan(PlanError::Input(_))
        )
    }
}

pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<StageError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

/// One text item of a poster request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestItem {
    /// Element id; generated from the role when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "UserConstraints::is_empty")]
    pub constraints: UserConstraints,
    /// Overrides the default (title only) stylization choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stylize: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style_prompt: Option<String>,
}

impl RequestItem {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            id: None,
            role,
            content: content.into(),
            constraints: UserConstraints::default(),
            stylize: None,
            style_prompt: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosterRequest {
    /// Short background description; refined before generation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_prompt: Option<String>,
    /// Path of a user background image, used instead of generation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_image: Option<String>,
    /// Decoded user background; takes precedence over `background_image`.
    #[serde(skip)]
    pub background_pixels: Option<RasterImage>,
    pub items: Vec<RequestItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style_hint: Option<String>,
    /// Default style prompt for stylized items.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub art_style: Option<String>,
}

impl PosterRequest {
    pub fn from_json(text: &str) -> Result<PosterRequest, StageError> {
        serde_json::from_str(text).map_err(|e| StageError::Input(format!("request: {e}")))
    }
}
