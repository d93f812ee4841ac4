use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ab_glyph::{Font, FontArc, GlyphId};
use serde::Deserialize;
use thiserror::Error;

/// Monospace test font: 1000 units/em, every advance 600, ascent 800,
/// descent 200, no line gap and no kerning. See `fonts/README.md`.
pub const MONO_TEST_ID: &str = "mono-test";
/// Proportional bold sans used by default for display text.
pub const SANS_ID: &str = "sans";

static MONO_TEST_TTF: &[u8] = include_bytes!("../../fonts/poster-mono-test.ttf");
static SANS_TTF: &[u8] = include_bytes!("../../fonts/poster-sans.ttf");

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid font {0}")]
    InvalidFont(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("fallback font {0} is not registered")]
    MissingFallback(String),
}

/// Unscaled vertical metrics plus units-per-em.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FontMetrics {
    pub units_per_em: f64,
    pub ascent: f64,
    /// Positive distance below the baseline.
    pub descent: f64,
    pub line_gap: f64,
}

impl FontMetrics {
    pub fn scale(&self, font_size: f64) -> f64 {
        font_size / self.units_per_em
    }

    pub fn line_height(&self, font_size: f64) -> f64 {
        (self.ascent + self.descent + self.line_gap) * self.scale(font_size)
    }
}

#[derive(Clone)]
pub struct LoadedFont {
    pub(crate) font: FontArc,
    pub metrics: FontMetrics,
}

impl LoadedFont {
    fn new(font: FontArc) -> Self {
        let metrics = FontMetrics {
            units_per_em: font.units_per_em().unwrap_or(1000.0) as f64,
            ascent: font.ascent_unscaled() as f64,
            descent: -(font.descent_unscaled() as f64),
            line_gap: font.line_gap_unscaled() as f64,
        };
        Self { font, metrics }
    }

    pub fn glyph_id(&self, c: char) -> GlyphId {
        self.font.glyph_id(c)
    }

    /// Unscaled advance of a glyph.
    pub fn advance_units(&self, id: GlyphId) -> f64 {
        self.font.h_advance_unscaled(id) as f64
    }

    pub fn kern_units(&self, a: GlyphId, b: GlyphId) -> f64 {
        self.font.kern_unscaled(a, b) as f64
    }
}

/// A font resolved from an id, with the id actually used.
pub struct Resolved<'a> {
    pub id: &'a str,
    pub font: &'a LoadedFont,
    pub fell_back: bool,
}

/// Immutable map from font id to loaded font, with a fallback id.
#[derive(Clone)]
pub struct FontRegistry {
    fonts: BTreeMap<String, LoadedFont>,
    fallback_id: String,
}

impl std::fmt::Debug for FontRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FontRegistry")
            .field("fonts", &self.fonts.keys().collect::<Vec<_>>())
            .field("fallback_id", &self.fallback_id)
            .finish()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    fallback: String,
    #[serde(default)]
    fonts: BTreeMap<String, String>,
}

impl FontRegistry {
    /// The two embedded fonts, falling back to [`SANS_ID`].
    pub fn builtin() -> Self {
        let mut fonts = BTreeMap::new();
        for (id, bytes) in [(MONO_TEST_ID, MONO_TEST_TTF), (SANS_ID, SANS_TTF)] {
            let font = FontArc::try_from_slice(bytes).expect("embedded font parses");
            fonts.insert(id.to_string(), LoadedFont::new(font));
        }
        Self {
            fonts,
            fallback_id: SANS_ID.to_string(),
        }
    }

    /// Loads a JSON manifest `{"fallback": id, "fonts": {id: path}}` on top of
    /// the embedded fonts. Paths are relative to the manifest; the value
    /// `builtin:<id>` aliases an embedded font.
    pub fn from_manifest(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| RegistryError::Manifest(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut reg = Self::builtin();
        for (id, entry) in manifest.fonts {
            let loaded = if let Some(alias) = entry.strip_prefix("builtin:") {
                reg.fonts
                    .get(alias)
                    .cloned()
                    .ok_or_else(|| RegistryError::Manifest(format!("no builtin font {alias}")))?
            } else {
                let file = base.join(&entry);
                let bytes = std::fs::read(&file).map_err(|source| RegistryError::Io {
                    path: file.clone(),
                    source,
                })?;
                let font = FontArc::try_from_vec(bytes)
                    .map_err(|_| RegistryError::InvalidFont(file.display().to_string()))?;
                LoadedFont::new(font)
            };
            reg.fonts.insert(id, loaded);
        }
        if !reg.fonts.contains_key(&manifest.fallback) {
            return Err(RegistryError::MissingFallback(manifest.fallback));
        }
        reg.fallback_id = manifest.fallback;
        Ok(reg)
    }

    pub fn with_fallback(mut self, id: &str) -> Result<Self, RegistryError> {
        if !self.fonts.contains_key(id) {
            return Err(RegistryError::MissingFallback(id.to_string()));
        }
        self.fallback_id = id.to_string();
        Ok(self)
    }

    pub fn fallback_id(&self) -> &str {
        &self.fallback_id
    }

    pub fn contains(&self, id: &str) -> bool {
        self.fonts.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.fonts.keys().map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Option<&LoadedFont> {
        self.fonts.get(id)
    }

    /// Resolves `id`, substituting the fallback font (with a logged warning)
    /// when it is not registered.
    pub fn resolve(&self, id: &str) -> Resolved<'_> {
        match self.fonts.get_key_value(id) {
            Some((k, font)) => Resolved {
                id: k,
                font,
                fell_back: false,
            },
            None => {
                log::warn!("font {id:?} not registered, using {}", self.fallback_id);
                let (k, font) = self
                    .fonts
                    .get_key_value(&self.fallback_id)
                    .expect("fallback registered");
                Resolved {
                    id: k,
                    font,
                    fell_back: true,
                }
            }
        }
    }
}

impl Default for FontRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mono_test_metrics_match_documentation() {
        let reg = FontRegistry::builtin();
        let mono = reg.get(MONO_TEST_ID).unwrap();
        assert_eq!(
            mono.metrics,
            FontMetrics {
                units_per_em: 1000.0,
                ascent: 800.0,
                descent: 200.0,
                line_gap: 0.0
            }
        );
        for c in ['A', 'W', 'i', ' ', 'é', 'Ž', '\u{FFFF}'] {
            assert_eq!(mono.advance_units(mono.glyph_id(c)), 600.0, "{c:?}");
        }
        assert_eq!(mono.kern_units(mono.glyph_id('A'), mono.glyph_id('V')), 0.0);
    }

    #[test]
    fn unknown_id_falls_back() {
        let reg = FontRegistry::builtin();
        let r = reg.resolve("nope");
        assert!(r.fell_back);
        assert_eq!(r.id, SANS_ID);
        assert!(!reg.resolve(MONO_TEST_ID).fell_back);
    }

    #[test]
    fn manifest_loading() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x.ttf"), MONO_TEST_TTF).unwrap();
        let manifest = dir.path().join("fonts.json");
        std::fs::write(
            &manifest,
            r#"{"fallback": "disk", "fonts": {"disk": "x.ttf", "alias": "builtin:sans"}}"#,
        )
        .unwrap();
        let reg = FontRegistry::from_manifest(&manifest).unwrap();
        assert_eq!(reg.fallback_id(), "disk");
        assert!(reg.contains("alias") && reg.contains(MONO_TEST_ID));

        std::fs::write(&manifest, r#"{"fallback": "missing"}"#).unwrap();
        assert!(matches!(
            FontRegistry::from_manifest(&manifest),
            Err(RegistryError::MissingFallback(_))
        ));
    }
}
