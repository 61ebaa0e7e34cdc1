//! Font registration for the ab_glyph text backend.
//!
//! Plotters needs explicit font bytes when built without system font
//! discovery. The first call loads a TTF (from `VENATION_FONT` or a list of
//! standard locations), leaks it for the process lifetime, and registers it
//! as the `sans-serif` family.

use std::path::PathBuf;
use std::sync::OnceLock;

use plotters::style::FontStyle;

use crate::error::{ReportError, Result};

const CANDIDATES: &[&str] = &[
    "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
    "/usr/share/fonts/dejavu/DejaVuSans.ttf",
    "/usr/share/fonts/TTF/DejaVuSans.ttf",
    "/usr/share/fonts/truetype/liberation/LiberationSans-Regular.ttf",
    "/Library/Fonts/Arial.ttf",
];

fn find_font() -> Option<PathBuf> {
    if let Ok(path) = std::env::var("VENATION_FONT") {
        let path = PathBuf::from(path);
        if path.is_file() {
            return Some(path);
        }
    }
    CANDIDATES
        .iter()
        .map(PathBuf::from)
        .find(|p| p.is_file())
}

static REGISTERED: OnceLock<std::result::Result<(), String>> = OnceLock::new();

/// Idempotent; fails only when no font file can be located or parsed.
pub fn ensure_fonts() -> Result<()> {
    let outcome = REGISTERED.get_or_init(|| {
        let path = find_font().ok_or("no candidate font file found")?;
        let bytes = std::fs::read(&path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        let bytes: &'static [u8] = Box::leak(bytes.into_boxed_slice());
        plotters::style::register_font("sans-serif", FontStyle::Normal, bytes)
            .map_err(|_| format!("{} is not a valid font", path.display()))?;
        Ok(())
    });
    outcome
        .as_ref()
        .map(|_| ())
        .map_err(|_| ReportError::FontUnavailable)
}
