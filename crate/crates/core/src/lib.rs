//! Cephalometric analysis toolkit.
//!
//! Landmark geometry, the Steiner measurement battery with norm grading and
//! skeletal classification, bilingual diagnostic reports, instruction-tuning
//! prompts, landmark file formats, grounded dialogue sessions and an HTTP API.
//!
//! ```
//! use ceph_core::analysis::{analyze, AnalysisConfig};
//! use ceph_core::ingest::parse_landmarks_json;
//! use ceph_core::steiner::MeasurementId;
//!
//! let doc = br#"{"calibration_mm_per_px": 0.1,
//!   "landmarks": {"S": [100, 100], "N": [300, 90], "A": [290, 250], "B": [280, 400]}}"#;
//! let case = parse_landmarks_json(doc).unwrap();
//! let analysis = analyze(&case, &AnalysisConfig::default()).unwrap();
//! let anb = analysis.value(MeasurementId::Anb).unwrap();
//! let sna = analysis.value(MeasurementId::Sna).unwrap();
//! let snb = analysis.value(MeasurementId::Snb).unwrap();
//! assert_eq!(anb, sna - snb);
//! ```

pub mod analysis;
pub mod dialogue;
pub mod geometry;
pub mod ingest;
pub mod report;
pub mod service;
pub mod steiner;
pub mod store;

pub use analysis::{analyze, validate, Analysis, AnalysisConfig};
