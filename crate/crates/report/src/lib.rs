//! Reporting: regenerate the comparison table and every figure of a run
//! from its persisted JSON/CSV artifacts alone.

pub mod artifacts;
pub mod error;
pub mod figures;
pub mod font;
pub mod table;

pub use artifacts::RunArtifacts;
pub use error::{ReportError, Result};
pub use figures::{render_figures, OutputFormat, RenderOutcome};
pub use table::SummaryTable;
