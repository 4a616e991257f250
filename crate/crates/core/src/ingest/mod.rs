//! Landmark file formats, configuration tables, and batch processing.

mod batch;
mod config;
mod json;
mod ordered;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Calibration, LandmarkId, LandmarkSet};

pub use batch::{
    batch_process, output_stem, recognized_inputs, BatchError, BatchOptions, BatchSummary,
    QuarantineRecord, QUARANTINE_FILE,
};
pub use config::{default_norms, load_norms, load_thresholds};
pub use json::{parse_landmarks_json, write_landmarks_json};
pub use ordered::{
    ISBI19_DEFAULT_MM_PER_PX,
    parse_landmarks_csv, parse_landmarks_ordered_txt, write_landmarks_csv,
    write_landmarks_ordered_txt, OrderProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QuarantineReason {
    MissingLandmark,
    OutOfBounds,
    ParseError,
    Degenerate,
    DuplicateId,
}

impl QuarantineReason {
    pub fn as_str(self) -> &'static str {
        match self {
            QuarantineReason::MissingLandmark => "MISSING_LANDMARK",
            QuarantineReason::OutOfBounds => "OUT_OF_BOUNDS",
            QuarantineReason::ParseError => "PARSE_ERROR",
            QuarantineReason::Degenerate => "DEGENERATE",
            QuarantineReason::DuplicateId => "DUPLICATE_ID",
        }
    }
}

impl fmt::Display for QuarantineReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("{}{detail}", location(*.line, *.column))]
    Parse { detail: String, line: Option<usize>, column: Option<usize>, field: Option<String> },
    #[error("{}unknown landmark {name:?}", location(*.line, None))]
    UnknownLandmark { name: String, line: Option<usize> },
    #[error("landmark {name:?} appears more than once")]
    DuplicateId { name: String },
    #[error("missing landmarks: {detail}")]
    MissingLandmark { detail: String, missing: Vec<LandmarkId> },
    #[error("calibration_mm_per_px is required")]
    MissingCalibration,
    #[error("landmark {landmark} at ({x}, {y}) lies outside the {width}x{height} image")]
    OutOfBounds { landmark: LandmarkId, x: f64, y: f64, width: f64, height: f64 },
    #[error("degenerate geometry: {detail}")]
    Degenerate { detail: String },
    #[error("line {line}: standard deviation for {id} must be positive, got {sd}")]
    NonpositiveSd { id: String, sd: f64, line: usize },
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
}

fn location(line: Option<usize>, column: Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!("line {l}, column {c}: "),
        (Some(l), None) => format!("line {l}: "),
        _ => String::new(),
    }
}

impl IngestError {
    pub(crate) fn parse(detail: impl Into<String>, line: Option<usize>) -> Self {
        IngestError::Parse { detail: detail.into(), line, column: None, field: None }
    }

    /// Stable machine code.
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Parse { .. } | IngestError::UnknownLandmark { .. } => "PARSE_ERROR",
            IngestError::DuplicateId { .. } => "DUPLICATE_ID",
            IngestError::MissingLandmark { .. } => "MISSING_LANDMARK",
            IngestError::MissingCalibration => "MISSING_CALIBRATION",
            IngestError::OutOfBounds { .. } => "OUT_OF_BOUNDS",
            IngestError::Degenerate { .. } => "DEGENERATE",
            IngestError::NonpositiveSd { .. } => "NONPOSITIVE_SD",
            IngestError::Io { .. } => "IO_ERROR",
        }
    }

    /// Reason recorded when a batch input is rejected for this error.
    pub fn quarantine_reason(&self) -> QuarantineReason {
        match self {
            IngestError::DuplicateId { .. } => QuarantineReason::DuplicateId,
            IngestError::MissingLandmark { .. } => QuarantineReason::MissingLandmark,
            IngestError::OutOfBounds { .. } => QuarantineReason::OutOfBounds,
            IngestError::Degenerate { .. } => QuarantineReason::Degenerate,
            IngestError::Parse { .. }
            | IngestError::UnknownLandmark { .. }
            | IngestError::MissingCalibration
            | IngestError::NonpositiveSd { .. }
            | IngestError::Io { .. } => QuarantineReason::ParseError,
        }
    }

    /// Structured context for API error envelopes.
    pub fn details(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            IngestError::Parse { line, column, field, .. } => {
                json!({ "line": line, "column": column, "field": field })
            }
            IngestError::UnknownLandmark { name, line } => json!({ "landmark": name, "line": line }),
            IngestError::DuplicateId { name } => json!({ "landmark": name }),
            IngestError::MissingLandmark { missing, .. } => json!({ "missing": missing }),
            IngestError::OutOfBounds { landmark, x, y, width, height } => {
                json!({ "landmark": landmark, "x": x, "y": y, "width": width, "height": height })
            }
            IngestError::NonpositiveSd { id, line, .. } => json!({ "id": id, "line": line }),
            _ => serde_json::Value::Null,
        }
    }
}

/// A parsed landmark file. The image reference is carried as an opaque path.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseFile {
    pub source: Option<PathBuf>,
    pub case_id: Option<String>,
    pub image: Option<String>,
    pub image_size_px: Option<[f64; 2]>,
    pub landmarks: LandmarkSet,
}

impl CaseFile {
    pub fn new(landmarks: LandmarkSet) -> Self {
        CaseFile { source: None, case_id: None, image: None, image_size_px: None, landmarks }
    }

    /// Explicit case id, else the source file stem, else `"case"`.
    pub fn resolved_case_id(&self) -> String {
        if let Some(id) = &self.case_id {
            return id.clone();
        }
        self.source
            .as_deref()
            .and_then(Path::file_stem)
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "case".to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LandmarkFormat {
    Json,
    Isbi19,
    Csv,
}

impl LandmarkFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(LandmarkFormat::Json),
            "txt" => Some(LandmarkFormat::Isbi19),
            "csv" => Some(LandmarkFormat::Csv),
            _ => None,
        }
    }
}

impl FromStr for LandmarkFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(LandmarkFormat::Json),
            "isbi19" => Ok(LandmarkFormat::Isbi19),
            "csv" => Ok(LandmarkFormat::Csv),
            other => Err(format!("unknown landmark format {other:?}, expected json|isbi19|csv")),
        }
    }
}

/// Parses bytes in the given format. `calibration` overrides the isbi19
/// default and supplies the scale for CSV, which carries none.
pub fn parse_landmarks(
    bytes: &[u8],
    format: LandmarkFormat,
    calibration: Option<Calibration>,
) -> Result<CaseFile, IngestError> {
    match format {
        LandmarkFormat::Json => {
            let mut case = parse_landmarks_json(bytes)?;
            if let Some(c) = calibration {
                case.landmarks.set_calibration(Some(c));
            }
            Ok(case)
        }
        LandmarkFormat::Isbi19 => parse_landmarks_ordered_txt(bytes, OrderProfile::Isbi19, calibration),
        LandmarkFormat::Csv => parse_landmarks_csv(bytes, calibration),
    }
}

/// Reads and parses a landmark file; the format defaults to the one implied by the extension.
pub fn load_case_file(
    path: &Path,
    format: Option<LandmarkFormat>,
    calibration: Option<Calibration>,
) -> Result<CaseFile, IngestError> {
    let format = format.or_else(|| LandmarkFormat::from_path(path)).ok_or_else(|| {
        IngestError::parse(format!("cannot infer landmark format of {}", path.display()), None)
    })?;
    let bytes = std::fs::read(path)
        .map_err(|e| IngestError::Io { path: path.display().to_string(), detail: e.to_string() })?;
    let mut case = parse_landmarks(&bytes, format, calibration)?;
    case.source = Some(path.to_path_buf());
    Ok(case)
}

pub(crate) fn utf8(bytes: &[u8]) -> Result<&str, IngestError> {
    std::str::from_utf8(bytes).map_err(|e| {
        IngestError::parse(format!("input is not valid UTF-8 (byte offset {})", e.valid_up_to()), None)
    })
}
