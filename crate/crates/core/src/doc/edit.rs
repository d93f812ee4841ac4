use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::{Alignment, BackgroundLayer, BackgroundSource, DocError, ElementId, PosterDocument};
use crate::raster::RasterImage;

/// One user edit. Serialized with an `op` tag, e.g.
/// `{"op": "move_box", "id": "title", "dx": 10, "dy": 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditCommand {
    MoveBox {
        id: ElementId,
        dx: i64,
        dy: i64,
    },
    ResizeBox {
        id: ElementId,
        width: i64,
        height: i64,
    },
    SetFont {
        id: ElementId,
        font_id: String,
    },
    SetFontSize {
        id: ElementId,
        font_size: f64,
    },
    SetColor {
        id: ElementId,
        color: String,
    },
    SetAlignment {
        id: ElementId,
        alignment: Alignment,
    },
    SetRotation {
        id: ElementId,
        rotation_deg: f64,
    },
    SetContent {
        id: ElementId,
        content: String,
    },
    ReplaceBackground {
        source: BackgroundSource,
        #[serde(
            default,
            serialize_with = "ser_png_opt",
            deserialize_with = "de_png_opt"
        )]
        pixels: Option<RasterImage>,
    },
    RemoveArtLayer {
        id: ElementId,
    },
}

impl EditCommand {
    pub fn target(&self) -> Option<&ElementId> {
        match self {
            EditCommand::MoveBox { id, .. }
            | EditCommand::ResizeBox { id, .. }
            | EditCommand::SetFont { id, .. }
            | EditCommand::SetFontSize { id, .. }
            | EditCommand::SetColor { id, .. }
            | EditCommand::SetAlignment { id, .. }
            | EditCommand::SetRotation { id, .. }
            | EditCommand::SetContent { id, .. }
            | EditCommand::RemoveArtLayer { id } => Some(id),
            EditCommand::ReplaceBackground { .. } => None,
        }
    }
}

fn ser_png_opt<S: Serializer>(img: &Option<RasterImage>, s: S) -> Result<S::Ok, S::Error> {
    match img {
        Some(img) => s.serialize_some(&img.to_png_base64().map_err(serde::ser::Error::custom)?),
        None => s.serialize_none(),
    }
}

fn de_png_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<RasterImage>, D::Error> {
    let text: Option<String> = Option::deserialize(d)?;
    text.map(|t| RasterImage::from_png_base64(&t).map_err(serde::de::Error::custom))
        .transpose()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EditError {
    #[error("unknown element {0}")]
    UnknownElement(ElementId),
    #[error("element {0} has no art layer")]
    NoArtLayer(ElementId),
    #[error("edit violates invariant at {path}: {message}")]
    InvariantViolation { path: String, message: String },
}

impl From<DocError> for EditError {
    fn from(e: DocError) -> Self {
        match e {
            DocError::Schema { path, message } => EditError::InvariantViolation { path, message },
            DocError::Parse { message, .. } => EditError::InvariantViolation {
                path: String::new(),
                message,
            },
        }
    }
}

/// Applies `edit` to a copy of `doc` and re-validates it.
///
/// A geometry or content change to an element with an art layer removes that
/// layer and marks the element `restyle_pending`. Replacing the background
/// marks every art layer stale. Successful edits bump the revision counter.
pub fn apply_edit(doc: &PosterDocument, edit: &EditCommand) -> Result<PosterDocument, EditError> {
    let mut next = doc.clone();

    if let EditCommand::ReplaceBackground { source, pixels } = edit {
        next.background = BackgroundLayer {
            source: source.clone(),
            pixels: pixels.clone(),
        };
        for layer in &mut next.art_layers {
            layer.stale = true;
        }
        next.validate()?;
        next.bump_revision();
        return Ok(next);
    }

    let id = edit.target().expect("element edits carry a target");
    let idx = next
        .element_index(id)
        .ok_or_else(|| EditError::UnknownElement(id.clone()))?;

    if let EditCommand::RemoveArtLayer { id } = edit {
        let before = next.art_layers.len();
        next.art_layers.retain(|l| &l.element_id != id);
        if next.art_layers.len() == before {
            return Err(EditError::NoArtLayer(id.clone()));
        }
        next.bump_revision();
        return Ok(next);
    }

    let el = &mut next.elements[idx];
    let t = &mut el.typography;
    match edit {
        EditCommand::MoveBox { dx, dy, .. } => {
            t.x += dx;
            t.y += dy;
        }
        EditCommand::ResizeBox { width, height, .. } => {
            t.box_width = *width;
            t.box_height = *height;
        }
        EditCommand::SetFont { font_id, .. } => t.font_id = font_id.clone(),
        EditCommand::SetFontSize { font_size, .. } => t.font_size = *font_size,
        EditCommand::SetColor { color, .. } => t.color = color.clone(),
        EditCommand::SetAlignment { alignment, .. } => t.alignment = *alignment,
        EditCommand::SetRotation { rotation_deg, .. } => t.rotation_deg = *rotation_deg,
        EditCommand::SetContent { content, .. } => el.content = content.clone(),
        EditCommand::ReplaceBackground { .. } | EditCommand::RemoveArtLayer { .. } => {
            unreachable!("handled above")
        }
    }

    let old = &doc.elements[idx];
    let new = &next.elements[idx];
    let changed = old.content != new.content || !old.typography.same_geometry(&new.typography);
    if changed && next.art_layers.iter().any(|l| &l.element_id == id) {
        next.art_layers.retain(|l| &l.element_id != id);
        next.elements[idx].restyle_pending = true;
    }

    next.validate()?;
    next.bump_revision();
    Ok(next)
}
