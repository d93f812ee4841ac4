use std::collections::HashSet;
use std::path::Path;

use super::{AtStage, PipelineConfig, PipelineError, PlannerChoice, PosterRequest, Stage, StageError};
use crate::backends::{
    describe_image, digest, generate_background, procedural_background, refine_prompt,
    remove_text, stylize_text, BackendKind, CancelToken, PromptContext, StylizeRequest,
};
use crate::compose::{flatten, flatten_until};
use crate::doc::{
    ArtTextLayer, BackgroundLayer, BackgroundSource, ElementId, PosterDocument, Role, TextElement,
};
use crate::plan::{
    plan_remote, plan_rule_based_with, BackgroundDescriptor, Canvas, PlanItem, PlanRequest,
    PlanResult,
};
use crate::raster::RasterImage;
use crate::text::{render_all, FontRegistry, RenderedElement};

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub document: PosterDocument,
    pub image: RasterImage,
    pub rendered: Vec<RenderedElement>,
    pub diagnostics: Vec<String>,
}

fn fit_to_canvas(
    image: RasterImage,
    dims: (u32, u32),
    what: &str,
    diagnostics: &mut Vec<String>,
) -> RasterImage {
    if image.dims() == dims {
        return image;
    }
    diagnostics.push(format!(
        "{what}: {}x{} image resized and cropped to {}x{}",
        image.width(),
        image.height(),
        dims.0,
        dims.1
    ));
    image.resize_cover(dims.0, dims.1)
}

/// Fills in background pixels from the background source when they are
/// missing. Generated sources without a configured backend fall back to the
/// procedural generator with the same prompt and seed.
pub fn resolve_background(
    doc: &PosterDocument,
    config: &PipelineConfig,
    cancel: Option<&CancelToken>,
) -> Result<(PosterDocument, Vec<String>), StageError> {
    let mut diagnostics = Vec::new();
    if doc.background.pixels.is_some() {
        return Ok((doc.clone(), diagnostics));
    }
    let dims = doc.dims();
    let (pixels, source) = match &doc.background.source {
        BackgroundSource::Procedural { spec } => {
            (procedural_background(spec, dims), doc.background.source.clone())
        }
        BackgroundSource::Generated { prompt, seed, .. } => {
            let ep = config.endpoint(BackendKind::Background);
            if ep.is_none() {
                diagnostics.push("background: no backend configured, using procedural".into());
            }
            let out = generate_background(prompt, dims, *seed, ep, cancel)?;
            diagnostics.extend(out.diagnostics);
            (out.image, out.source)
        }
        BackgroundSource::UserProvided { image_ref } => {
            let img = RasterImage::load(Path::new(image_ref))
                .map_err(|e| StageError::Input(format!("background {image_ref:?}: {e}")))?;
            (
                fit_to_canvas(img, dims, "background", &mut diagnostics),
                doc.background.source.clone(),
            )
        }
    };
    let mut next = doc.clone();
    next.background = BackgroundLayer {
        source,
        pixels: Some(pixels),
    };
    next.validate()?;
    Ok((next, diagnostics))
}

fn stylize_seed(seed: u64, id: &ElementId) -> u64 {
    let d = digest(&[b"stylize", &seed.to_le_bytes(), id.as_str().as_bytes()]);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Stylizes one element: the composite of everything below it plus the
/// element's coverage go to the stylizer, and the result is attached as an
/// art layer. An element that draws nothing is left unchanged with a
/// diagnostic.
pub fn stylize_element(
    doc: &PosterDocument,
    rendered: &[RenderedElement],
    id: &ElementId,
    style_prompt: &str,
    config: &PipelineConfig,
    cancel: Option<&CancelToken>,
) -> Result<(PosterDocument, Vec<String>), PipelineError> {
    let st = Stage::Stylization;
    let idx = doc
        .element_index(id)
        .ok_or_else(|| PipelineError::new(st, StageError::Input(format!("unknown element {id}"))))?;
    let r = rendered.get(idx).filter(|r| &r.element_id == id).ok_or_else(|| {
        PipelineError::new(st, StageError::Input(format!("no rendering for {id}")))
    })?;
    if r.coverage.is_empty() {
        return Ok((doc.clone(), vec![format!("stylization: {id} draws nothing, skipped")]));
    }
    let base = flatten_until(doc, rendered, idx).at(st)?;
    let background = doc.background.pixels.as_ref().unwrap_or(&base);
    let refiner = config.endpoint(BackendKind::PromptRefiner);
    let summary = describe_image(background, refiner, cancel).at(st)?;
    let prompt =
        refine_prompt(style_prompt, PromptContext::ArtText, Some(&summary), refiner, cancel).at(st)?;
    let req = StylizeRequest {
        image: base,
        mask: r.coverage.clone(),
        prompt: prompt.clone(),
        seed: stylize_seed(config.seed, id),
    };
    let stylized = stylize_text(&req, config.endpoint(BackendKind::Stylizer), cancel).at(st)?;
    let layer = ArtTextLayer {
        element_id: id.clone(),
        style_prompt: prompt,
        mask: req.mask,
        stylized_pixels: stylized,
        feather_sigma: config.feather_sigma_for(doc.canvas_width),
        stale: false,
    };
    let next = doc.with_art_layer(layer).at(st)?;
    Ok((next, Vec::new()))
}

fn element_ids(req: &PosterRequest) -> Result<Vec<ElementId>, StageError> {
    let mut seen = HashSet::new();
    let mut counts = [0usize; 3];
    let mut ids = Vec::new();
    for item in &req.items {
        let id = match &item.id {
            Some(id) if id.trim().is_empty() => {
                return Err(StageError::Input("element id is empty".into()))
            }
            Some(id) => id.clone(),
            None => {
                let n = &mut counts[item.role.priority() as usize];
                *n += 1;
                match item.role {
                    Role::Title if *n == 1 => "title".to_string(),
                    role => format!("{}-{n}", role.as_str()),
                }
            }
        };
        if !seen.insert(id.clone()) {
            return Err(StageError::Input(format!("duplicate element id {id:?}")));
        }
        ids.push(ElementId::new(id));
    }
    Ok(ids)
}

fn default_background_prompt(req: &PosterRequest) -> String {
    req.background_prompt
        .clone()
        .filter(|p| !p.trim().is_empty())
        .or_else(|| req.style_hint.clone().filter(|p| !p.trim().is_empty()))
        .or_else(|| {
            req.items
                .iter()
                .find(|i| i.role == Role::Title)
                .or(req.items.first())
                .map(|i| i.content.clone())
        })
        .unwrap_or_else(|| "abstract".to_string())
}

fn plan(
    plan_req: &PlanRequest,
    config: &PipelineConfig,
    registry: &FontRegistry,
    background: &RasterImage,
    diagnostics: &mut Vec<String>,
    cancel: Option<&CancelToken>,
) -> Result<PlanResult, StageError> {
    let remote = match config.planner {
        PlannerChoice::Rule => None,
        PlannerChoice::Remote => {
            let ep = config.endpoint(BackendKind::Planner);
            if ep.is_none() {
                diagnostics.push("planning: no planner backend configured, using rules".into());
            }
            ep
        }
    };
    Ok(match remote {
        Some(ep) => plan_remote(plan_req, ep, registry, Some(background), cancel)?,
        None => plan_rule_based_with(plan_req, &config.planner_rules, registry)?,
    })
}

/// Runs every stage for a fresh poster.
pub fn run_pipeline(
    req: &PosterRequest,
    config: &PipelineConfig,
    registry: &FontRegistry,
    cancel: Option<&CancelToken>,
) -> Result<PipelineOutput, PipelineError> {
    config.validate().at(Stage::Background)?;
    let ids = element_ids(req).at(Stage::Planning)?;
    let dims = config.dims();
    let mut diagnostics = Vec::new();

    let user_image = match (&req.background_pixels, &req.background_image) {
        (Some(px), r) => Some((px.clone(), r.clone().unwrap_or_else(|| "inline".into()))),
        (None, Some(path)) => Some((
            RasterImage::load(Path::new(path))
                .map_err(|e| StageError::Input(format!("background {path:?}: {e}")))
                .at(Stage::Background)?,
            path.clone(),
        )),
        (None, None) => None,
    };
    let mut refined_prompt = None;
    let (background, source) = match user_image {
        Some((img, image_ref)) => (
            fit_to_canvas(img, dims, "background", &mut diagnostics),
            BackgroundSource::UserProvided { image_ref },
        ),
        None => {
            let prompt = refine_prompt(
                &default_background_prompt(req),
                PromptContext::Background,
                None,
                config.endpoint(BackendKind::PromptRefiner),
                cancel,
            )
            .at(Stage::Background)?;
            let out = generate_background(
                &prompt,
                dims,
                config.seed,
                config.endpoint(BackendKind::Background),
                cancel,
            )
            .at(Stage::Background)?;
            diagnostics.extend(out.diagnostics);
            refined_prompt = Some(prompt);
            (out.image, out.source)
        }
    };

    let plan_req = PlanRequest {
        canvas: Canvas {
            width: dims.0,
            height: dims.1,
        },
        background_descriptor: BackgroundDescriptor::from_image(&background),
        items: req
            .items
            .iter()
            .map(|i| PlanItem {
                role: i.role,
                content: i.content.clone(),
                constraints: i.constraints.clone(),
            })
            .collect(),
        style_hint: req.style_hint.clone(),
    };
    let planned = plan(&plan_req, config, registry, &background, &mut diagnostics, cancel)
        .at(Stage::Planning)?;
    diagnostics.extend(planned.diagnostics.iter().map(|d| format!("planning: {d}")));

    let mut doc = PosterDocument::new(
        dims.0,
        dims.1,
        BackgroundLayer {
            source,
            pixels: Some(background),
        },
    );
    doc.elements = ids
        .iter()
        .zip(&planned.items)
        .map(|(id, p)| TextElement {
            id: id.clone(),
            role: p.role,
            content: p.content.clone(),
            typography: p.spec.clone(),
            restyle_pending: false,
        })
        .collect();
    doc.metadata.insert("seed".into(), config.seed.to_string());
    doc.metadata.insert("planner_id".into(), planned.planner_id.clone());
    if let Some(p) = refined_prompt {
        doc.metadata.insert("background_prompt".into(), p);
    }
    doc.validate().at(Stage::Planning)?;

    let out = render_all(&doc, registry);
    diagnostics.extend(out.warnings.iter().map(|w| format!("rendering: {w}")));
    let rendered = out.elements;

    for (item, id) in req.items.iter().zip(&ids) {
        let wanted = item
            .stylize
            .unwrap_or(item.role == Role::Title && config.stylize_title);
        if !wanted {
            continue;
        }
        let style = item
            .style_prompt
            .as_deref()
            .or(req.art_style.as_deref())
            .unwrap_or(&item.content);
        let (next, d) = stylize_element(&doc, &rendered, id, style, config, cancel)?;
        doc = next;
        diagnostics.extend(d);
    }

    let image = flatten(&doc, &rendered).at(Stage::Composition)?;
    Ok(PipelineOutput {
        document: doc,
        image,
        rendered,
        diagnostics,
    })
}

/// Reference-poster flow: the text of `reference` is erased by the
/// text-removal backend and the cleaned image becomes the background for a
/// regular run. Needs a text-removal endpoint.
pub fn run_reference_flow(
    reference: &RasterImage,
    req: &PosterRequest,
    config: &PipelineConfig,
    registry: &FontRegistry,
    cancel: Option<&CancelToken>,
) -> Result<PipelineOutput, PipelineError> {
    let ep = config.endpoint(BackendKind::TextRemoval).ok_or_else(|| {
        PipelineError::new(
            Stage::Background,
            StageError::UnsupportedWithoutBackend("text removal".into()),
        )
    })?;
    let mut diagnostics = Vec::new();
    let reference = fit_to_canvas(reference.clone(), config.dims(), "reference", &mut diagnostics);
    let cleaned = remove_text(&reference, config.seed, ep, cancel).at(Stage::Background)?;
    let hash = digest(&[reference.as_raw()]);
    let tag: String = hash[..8].iter().map(|b| format!("{b:02x}")).collect();
    let mut run_req = req.clone();
    run_req.background_pixels = Some(cleaned);
    run_req.background_image = Some(format!("text-removed:{tag}"));
    let mut out = run_pipeline(&run_req, config, registry, cancel)?;
    diagnostics.append(&mut out.diagnostics);
    out.diagnostics = diagnostics;
    Ok(out)
}
