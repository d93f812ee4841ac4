//! Poster composition engine.
//!
//! A poster is built in three stages: a background (generated, procedural or
//! user-supplied), a typography plan for the user's text, and optional
//! artistic stylization of selected text blended in through a feathered mask.
//! Everything lives in an editable [`doc::PosterDocument`]; text is always
//! rendered from fonts, never generated, so the drawn words are exactly the
//! requested ones.

pub mod backends;
pub mod compose;
pub mod dataset;
pub mod doc;
pub mod eval;
pub mod pipeline;
pub mod plan;
pub mod raster;
pub mod text;
