//! File formats: binary tensors, CSV predictions, canonical JSON reports and
//! SVG figures.

pub mod csv;
pub mod json;
pub mod report;
pub mod svg;
pub mod tensor;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use self::csv::{read_csv_predictions, write_csv_to};
pub use report::{read_report, write_report, InputDigest, Provenance, Report};
pub use svg::{render_svg, write_svg, Figure, FigureKind, RunSeries};
pub use tensor::{
    predictions_from_tensors, prediction_tensors, read_tensor, write_tensor, Role, Tensor,
};

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::UnreadablePath {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `bytes` to `path`, reporting failures with the path attached.
pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::UnwritablePath {
        path: path.to_path_buf(),
        source,
    })
}
