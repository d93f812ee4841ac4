use serde::{Deserialize, Serialize};

use super::http::{field_str, post_json};
use super::wire::RefineRequest;
use super::{BackendEndpoint, BackendError, CancelToken};

pub const BACKGROUND_SUFFIX: &str =
    "poster background, rich atmospheric lighting, cohesive color palette, high detail, no text, no letters";
pub const ART_TEXT_SUFFIX: &str =
    "artistic title lettering, bold decorative typography, crisp edges, high contrast, legible letterforms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptContext {
    Background,
    ArtText,
}

impl PromptContext {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptContext::Background => "background",
            PromptContext::ArtText => "art_text",
        }
    }
}

/// Expands a short user prompt into a generation prompt.
///
/// Local template: `"{text}, "`, then `"in harmony with {summary}, "` when a
/// background summary is given, then the fixed suffix for the context.
pub fn refine_prompt(
    user_text: &str,
    context: PromptContext,
    background_summary: Option<&str>,
    endpoint: Option<&BackendEndpoint>,
    cancel: Option<&CancelToken>,
) -> Result<String, BackendError> {
    let text = user_text.trim();
    if text.is_empty() {
        return Err(BackendError::Input("prompt text is empty".into()));
    }
    let summary = background_summary.map(str::trim).filter(|s| !s.is_empty());
    let Some(ep) = endpoint else {
        let suffix = match context {
            PromptContext::Background => BACKGROUND_SUFFIX,
            PromptContext::ArtText => ART_TEXT_SUFFIX,
        };
        let mut out = format!("{text}, ");
        if let Some(s) = summary {
            out.push_str(&format!("in harmony with {s}, "));
        }
        out.push_str(suffix);
        return Ok(out);
    };
    let body = serde_json::to_value(RefineRequest {
        text: text.to_string(),
        context: context.as_str().to_string(),
        background_summary: summary.map(str::to_string),
        image_png_base64: None,
    })
    .expect("serializable");
    let reply = post_json(ep, &body, cancel)?;
    Ok(field_str(&reply, "prompt", ep)?.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn background_template() {
        let p = refine_prompt("jazz night", PromptContext::Background, None, None, None).unwrap();
        assert_eq!(p, format!("jazz night, {BACKGROUND_SUFFIX}"));
    }

    #[test]
    fn summary_is_spliced() {
        let p = refine_prompt(
            "GALA",
            PromptContext::ArtText,
            Some("a dark blue background"),
            None,
            None,
        )
        .unwrap();
        assert_eq!(
            p,
            format!("GALA, in harmony with a dark blue background, {ART_TEXT_SUFFIX}")
        );
    }

    #[test]
    fn empty_text_is_input_error() {
        assert!(matches!(
            refine_prompt("  ", PromptContext::Background, None, None, None),
            Err(BackendError::Input(_))
        ));
    }
}
