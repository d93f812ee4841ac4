use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::StageError;
use crate::backends::{BackendEndpoint, BackendKind};
use crate::compose::default_feather_sigma;
use crate::doc::{MAX_CANVAS, MIN_CANVAS};
use crate::plan::PlannerConfig;
use crate::text::FontRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerChoice {
    Rule,
    Remote,
}

/// Everything a run depends on besides the request itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub seed: u64,
    /// Art-layer feather; `None` scales the default with canvas width.
    pub feather_sigma: Option<f64>,
    pub planner: PlannerChoice,
    /// Font manifest layered over the built-in fonts.
    pub font_manifest: Option<PathBuf>,
    pub endpoints: Vec<BackendEndpoint>,
    /// Stylize the title unless its item opts out.
    pub stylize_title: bool,
    pub planner_rules: PlannerConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            canvas_width: 1024,
            canvas_height: 1448,
            seed: 0,
            feather_sigma: None,
            planner: PlannerChoice::Rule,
            font_manifest: None,
            endpoints: Vec::new(),
            stylize_title: true,
            planner_rules: PlannerConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, StageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StageError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| StageError::Input(format!("{}: {e}", path.display())))
    }

    /// Applies overrides from the process environment.
    pub fn apply_env(&mut self) -> Result<(), StageError> {
        self.apply_vars(|k| std::env::var(k).ok())
    }

    /// Applies `POSTER_SEED`, `POSTER_CANVAS` (`WxH`), `POSTER_FEATHER_SIGMA`,
    /// `POSTER_PLANNER` (`rule` or `remote`), `POSTER_FONT_MANIFEST` and one
    /// `POSTER_<KIND>_URL` per backend kind.
    pub fn apply_vars(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), StageError> {
        let bad = |k: &str, v: &str| StageError::Input(format!("{k}={v:?} is invalid"));
        if let Some(v) = var("POSTER_SEED") {
            self.seed = v.trim().parse().map_err(|_| bad("POSTER_SEED", &v))?;
        }
        if let Some(v) = var("POSTER_CANVAS") {
            let (w, h) = v
                .trim()
                .split_once(['x', 'X'])
                .ok_or_else(|| bad("POSTER_CANVAS", &v))?;
            self.canvas_width = w.parse().map_err(|_| bad("POSTER_CANVAS", &v))?;
            self.canvas_height = h.parse().map_err(|_| bad("POSTER_CANVAS", &v))?;
        }
        if let Some(v) = var("POSTER_FEATHER_SIGMA") {
            self.feather_sigma = Some(v.trim().parse().map_err(|_| bad("POSTER_FEATHER_SIGMA", &v))?);
        }
        if let Some(v) = var("POSTER_PLANNER") {
            self.planner = match v.trim() {
                "rule" => PlannerChoice::Rule,
                "remote" => PlannerChoice::Remote,
                _ => return Err(bad("POSTER_PLANNER", &v)),
            };
        }
        if let Some(v) = var("POSTER_FONT_MANIFEST") {
            self.font_manifest = Some(PathBuf::from(v));
        }
        for kind in BackendKind::ALL {
            if let Some(url) = var(&kind.url_env()).filter(|u| !u.trim().is_empty()) {
                match self.endpoints.iter_mut().find(|e| e.kind == kind) {
                    Some(e) => e.url = url.trim().to_string(),
                    None => self.endpoints.push(BackendEndpoint::new(kind, url.trim())),
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), StageError> {
        for (name, v) in [("canvas_width", self.canvas_width), ("canvas_height", self.canvas_height)] {
            if !(MIN_CANVAS..=MAX_CANVAS).contains(&v) {
                return Err(StageError::Input(format!(
                    "{name} {v} is outside [{MIN_CANVAS}, {MAX_CANVAS}]"
                )));
            }
        }
        if let Some(s) = self.feather_sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(StageError::Input(format!("feather_sigma {s} must be >= 0")));
            }
        }
        for (i, e) in self.endpoints.iter().enumerate() {
            e.validate()?;
            if self.endpoints[..i].iter().any(|o| o.kind == e.kind) {
                return Err(StageError::Input(format!("two endpoints for {}", e.kind)));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.canvas_width, self.canvas_height)
    }

    pub fn endpoint(&self, kind: BackendKind) -> Option<&BackendEndpoint> {
        self.endpoints.iter().find(|e| e.kind == kind)
    }

    pub fn feather_sigma_for(&self, canvas_width: u32) -> f64 {
        self.feather_sigma
            .unwrap_or_else(|| default_feather_sigma(canvas_width))
    }

    pub fn registry(&self) -> Result<FontRegistry, StageError> {
        match &self.font_manifest {
            Some(p) => Ok(FontRegistry::from_manifest(p)?),
            None => Ok(FontRegistry::builtin()),
        }
    }
}
