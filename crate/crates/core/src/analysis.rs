//! One-call pipeline: validate, normalize, measure, grade, classify.

use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_orientation, GeometryError, LandmarkId, LandmarkSet};
use crate::ingest::{default_norms, CaseFile, IngestError};
use crate::report::{
    build_prompt, derive_findings, DiagnosticReport, Finding, Language, PromptSample, ReportError,
    Resources,
};
use crate::steiner::{
    classify, compute_all, grade, Deviation, MeasurementId, MeasurementResult, NormTable,
    SkeletalClassification, Skipped, Thresholds,
};

/// Norms and thresholds applied by [`analyze`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub norms: NormTable,
    pub thresholds: Thresholds,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { norms: default_norms(), thresholds: Thresholds::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub case_id: String,
    pub measurements: Vec<MeasurementResult>,
    pub skipped: Vec<Skipped>,
    pub deviations: Vec<Deviation>,
    pub classification: SkeletalClassification,
}

impl Analysis {
    pub fn value(&self, id: MeasurementId) -> Option<f64> {
        self.measurements.iter().find(|m| m.id == id).map(|m| m.value)
    }

    pub fn findings(&self) -> Vec<Finding> {
        derive_findings(&self.deviations, &self.classification)
    }

    pub fn report(&self, lang: Language, resources: &Resources) -> Result<DiagnosticReport, ReportError> {
        DiagnosticReport::compose(
            &self.findings(),
            &self.measurements,
            &self.deviations,
            resources.templates(lang),
        )
    }

    pub fn prompt(
        &self,
        lang: Language,
        resources: &Resources,
        seed: u64,
        image_token: Option<&str>,
    ) -> Result<PromptSample, ReportError> {
        build_prompt(&self.measurements, resources.instructions(lang), seed, image_token)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("analysis serializes");
        s.push('\n');
        s
    }
}

fn degenerate(e: GeometryError) -> IngestError {
    IngestError::Degenerate { detail: e.to_string() }
}

/// Checks a case and returns its landmarks normalized to face right.
///
/// Rejects points outside the declared image, cases where no measurement has
/// all of its landmarks, undeterminable orientation, and coincident points
/// that would leave a computable measurement undefined.
pub fn validate(case: &CaseFile) -> Result<LandmarkSet, IngestError> {
    let set = &case.landmarks;
    if let Some([width, height]) = case.image_size_px {
        for (&landmark, p) in set.points() {
            if p.x < 0.0 || p.y < 0.0 || p.x > width || p.y > height {
                return Err(IngestError::OutOfBounds { landmark, x: p.x, y: p.y, width, height });
            }
        }
    }

    let complete: Vec<MeasurementId> = MeasurementId::ALL
        .into_iter()
        .filter(|id| id.definition().required_landmarks().iter().all(|&l| set.contains(l)))
        .collect();
    if complete.is_empty() {
        let mut missing: Vec<LandmarkId> = Vec::new();
        for id in MeasurementId::ALL {
            for l in id.definition().required_landmarks() {
                if !set.contains(l) && !missing.contains(&l) {
                    missing.push(l);
                }
            }
        }
        missing.sort();
        let names: Vec<&str> = missing.iter().map(|l| l.as_str()).collect();
        return Err(IngestError::MissingLandmark {
            detail: format!("no measurement is computable; absent: {}", names.join(", ")),
            missing,
        });
    }

    for id in &complete {
        for (a, b) in id.definition().critical_pairs() {
            if set.get(a) == set.get(b) {
                return Err(IngestError::Degenerate {
                    detail: format!("{a} and {b} coincide, {id} is undefined"),
                });
            }
        }
    }

    normalize_orientation(set).map_err(degenerate)
}

pub fn analyze(case: &CaseFile, config: &AnalysisConfig) -> Result<Analysis, IngestError> {
    let set = validate(case)?;
    let batch = compute_all(&set, &MeasurementId::ALL);
    let deviations = grade(&batch.results, &config.norms);
    let classification = classify(&batch.results, &config.thresholds);
    Ok(Analysis {
        case_id: case.resolved_case_id(),
        measurements: batch.results,
        skipped: batch.skipped,
        deviations,
        classification,
    })
}
