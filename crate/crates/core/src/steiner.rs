//! The Steiner measurement battery, norm grading, and skeletal classification.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    angle_at_vertex, directed_line_angle, signed_point_line_distance, to_physical, GeometryError,
    LandmarkId, LandmarkSet, Orientation,
};

use LandmarkId as L;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeasurementId {
    #[serde(rename = "SNA")]
    Sna,
    #[serde(rename = "SNB")]
    Snb,
    #[serde(rename = "ANB")]
    Anb,
    #[serde(rename = "SND")]
    Snd,
    #[serde(rename = "YAXIS")]
    YAxis,
    #[serde(rename = "MPFH")]
    MpFh,
    #[serde(rename = "FACIAL")]
    Facial,
    #[serde(rename = "U1NA_DEG")]
    U1NaDeg,
    #[serde(rename = "U1NA_MM")]
    U1NaMm,
    #[serde(rename = "L1NB_DEG")]
    L1NbDeg,
    #[serde(rename = "L1NB_MM")]
    L1NbMm,
    #[serde(rename = "POGNB_MM")]
    PogNbMm,
    #[serde(rename = "INTERINCISAL")]
    Interincisal,
    #[serde(rename = "GOGN_SN")]
    GoGnSn,
    #[serde(rename = "OCC_SN")]
    OccSn,
}

impl MeasurementId {
    /// Declaration order; also the order of batch results.
    pub const ALL: [MeasurementId; 15] = [
        MeasurementId::Sna,
        MeasurementId::Snb,
        MeasurementId::Anb,
        MeasurementId::Snd,
        MeasurementId::YAxis,
        MeasurementId::MpFh,
        MeasurementId::Facial,
        MeasurementId::U1NaDeg,
        MeasurementId::U1NaMm,
        MeasurementId::L1NbDeg,
        MeasurementId::L1NbMm,
        MeasurementId::PogNbMm,
        MeasurementId::Interincisal,
        MeasurementId::GoGnSn,
        MeasurementId::OccSn,
    ];

    /// The nine measurements echoed in training prompts, in prompt order.
    pub const PROMPT_BATTERY: [MeasurementId; 9] = [
        MeasurementId::Sna,
        MeasurementId::Snb,
        MeasurementId::Anb,
        MeasurementId::YAxis,
        MeasurementId::MpFh,
        MeasurementId::Facial,
        MeasurementId::U1NaMm,
        MeasurementId::L1NbMm,
        MeasurementId::PogNbMm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MeasurementId::Sna => "SNA",
            MeasurementId::Snb => "SNB",
            MeasurementId::Anb => "ANB",
            MeasurementId::Snd => "SND",
            MeasurementId::YAxis => "YAXIS",
            MeasurementId::MpFh => "MPFH",
            MeasurementId::Facial => "FACIAL",
            MeasurementId::U1NaDeg => "U1NA_DEG",
            MeasurementId::U1NaMm => "U1NA_MM",
            MeasurementId::L1NbDeg => "L1NB_DEG",
            MeasurementId::L1NbMm => "L1NB_MM",
            MeasurementId::PogNbMm => "POGNB_MM",
            MeasurementId::Interincisal => "INTERINCISAL",
            MeasurementId::GoGnSn => "GOGN_SN",
            MeasurementId::OccSn => "OCC_SN",
        }
    }

    pub fn unit(self) -> Unit {
        match self {
            MeasurementId::U1NaMm | MeasurementId::L1NbMm | MeasurementId::PogNbMm => Unit::Mm,
            _ => Unit::Deg,
        }
    }

    pub fn definition(self) -> MeasurementDefinition {
        let formula = match self {
            MeasurementId::Sna => Formula::VertexAngle { vertex: L::N, p1: L::S, p2: L::A },
            MeasurementId::Snb => Formula::VertexAngle { vertex: L::N, p1: L::S, p2: L::B },
            MeasurementId::Snd => Formula::VertexAngle { vertex: L::N, p1: L::S, p2: L::D },
            MeasurementId::Anb => Formula::Difference {
                minuend: MeasurementId::Sna,
                subtrahend: MeasurementId::Snb,
            },
            MeasurementId::YAxis => Formula::LineAngle { a: (L::S, L::Gn), b: (L::Po, L::Or) },
            MeasurementId::MpFh => Formula::LineAngle { a: (L::Go, L::Me), b: (L::Po, L::Or) },
            MeasurementId::Facial => Formula::LineAngle { a: (L::N, L::Pog), b: (L::Or, L::Po) },
            MeasurementId::GoGnSn => Formula::LineAngle { a: (L::S, L::N), b: (L::Go, L::Gn) },
            MeasurementId::OccSn => Formula::LineAngle { a: (L::S, L::N), b: (L::OcP, L::OcA) },
            MeasurementId::Interincisal => Formula::LineAngle {
                a: (L::U1E, L::U1A),
                b: (L::L1E, L::L1A),
            },
            MeasurementId::U1NaDeg => Formula::LineAngle { a: (L::U1A, L::U1E), b: (L::N, L::A) },
            // Measured against B→N so that a normally proclined incisor reads near 25°
            // rather than its supplement.
            MeasurementId::L1NbDeg => Formula::LineAngle { a: (L::L1A, L::L1E), b: (L::B, L::N) },
            MeasurementId::U1NaMm => Formula::SignedDistance { point: L::U1E, line: (L::N, L::A) },
            MeasurementId::L1NbMm => Formula::SignedDistance { point: L::L1E, line: (L::N, L::B) },
            MeasurementId::PogNbMm => Formula::SignedDistance { point: L::Pog, line: (L::N, L::B) },
        };
        MeasurementDefinition { id: self, formula }
    }
}

impl fmt::Display for MeasurementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasurementId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MeasurementId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown measurement id {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Deg,
    Mm,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Deg => "deg",
            Unit::Mm => "mm",
        }
    }
}

/// How a measurement is derived from landmarks. Directions are written tail→head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Formula {
    VertexAngle { vertex: LandmarkId, p1: LandmarkId, p2: LandmarkId },
    LineAngle { a: (LandmarkId, LandmarkId), b: (LandmarkId, LandmarkId) },
    SignedDistance { point: LandmarkId, line: (LandmarkId, LandmarkId) },
    Difference { minuend: MeasurementId, subtrahend: MeasurementId },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementDefinition {
    pub id: MeasurementId,
    pub formula: Formula,
}

impl MeasurementDefinition {
    /// Landmarks the formula reads, first use first, without repeats.
    pub fn required_landmarks(&self) -> Vec<LandmarkId> {
        let raw: Vec<LandmarkId> = match self.formula {
            Formula::VertexAngle { vertex, p1, p2 } => vec![vertex, p1, p2],
            Formula::LineAngle { a, b } => vec![a.0, a.1, b.0, b.1],
            Formula::SignedDistance { point, line } => vec![point, line.0, line.1],
            Formula::Difference { minuend, subtrahend } => {
                let mut v = minuend.definition().required_landmarks();
                v.extend(subtrahend.definition().required_landmarks());
                v
            }
        };
        let mut out = Vec::with_capacity(raw.len());
        for id in raw {
            if !out.contains(&id) {
                out.push(id);
            }
        }
        out
    }

    /// Landmark pairs that must not coincide for the formula to be defined.
    pub fn critical_pairs(&self) -> Vec<(LandmarkId, LandmarkId)> {
        match self.formula {
            Formula::VertexAngle { vertex, p1, p2 } => vec![(vertex, p1), (vertex, p2)],
            Formula::LineAngle { a, b } => vec![a, b],
            Formula::SignedDistance { line, .. } => vec![line],
            Formula::Difference { minuend, subtrahend } => {
                let mut v = minuend.definition().critical_pairs();
                v.extend(subtrahend.definition().critical_pairs());
                v
            }
        }
    }

    pub fn unit(&self) -> Unit {
        self.id.unit()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("missing landmarks: {}", join_ids(.0))]
    MissingLandmarks(Vec<LandmarkId>),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("calibration required for millimetre measurements")]
    MissingCalibration,
    #[error("landmark set is not normalized to face right")]
    NotNormalized,
}

fn join_ids(ids: &[LandmarkId]) -> String {
    ids.iter().map(|id| id.as_str()).collect::<Vec<_>>().join(", ")
}

impl MeasureError {
    pub fn code(&self) -> &'static str {
        match self {
            MeasureError::MissingLandmarks(_) => "MISSING_LANDMARKS",
            MeasureError::Geometry(_) => "DEGENERATE",
            MeasureError::MissingCalibration => "MISSING_CALIBRATION",
            MeasureError::NotNormalized => "NOT_NORMALIZED",
        }
    }
}

/// Machine-readable reason attached to a skipped measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipReason {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub landmarks: Vec<LandmarkId>,
}

impl From<&MeasureError> for SkipReason {
    fn from(err: &MeasureError) -> Self {
        let landmarks = match err {
            MeasureError::MissingLandmarks(ids) => ids.clone(),
            _ => Vec::new(),
        };
        SkipReason {
            code: err.code().to_string(),
            message: err.to_string(),
            landmarks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementResult {
    pub id: MeasurementId,
    pub value: f64,
    pub unit: Unit,
    pub inputs_used: Vec<LandmarkId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub id: MeasurementId,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementBatch {
    pub results: Vec<MeasurementResult>,
    pub skipped: Vec<Skipped>,
}

impl MeasurementBatch {
    pub fn get(&self, id: MeasurementId) -> Option<&MeasurementResult> {
        self.results.iter().find(|r| r.id == id)
    }

    pub fn value(&self, id: MeasurementId) -> Option<f64> {
        self.get(id).map(|r| r.value)
    }
}

/// Computes one measurement on a normalized set.
pub fn compute(set: &LandmarkSet, id: MeasurementId) -> Result<MeasurementResult, MeasureError> {
    if set.orientation() != Orientation::FacingRight {
        return Err(MeasureError::NotNormalized);
    }
    let def = id.definition();
    let required = def.required_landmarks();
    let missing: Vec<LandmarkId> = required.iter().copied().filter(|&l| !set.contains(l)).collect();
    if !missing.is_empty() {
        return Err(MeasureError::MissingLandmarks(missing));
    }
    let pt = |l: LandmarkId| set.get(l).expect("presence checked above");
    let value = match def.formula {
        Formula::VertexAngle { vertex, p1, p2 } => angle_at_vertex(pt(vertex), pt(p1), pt(p2))?,
        Formula::LineAngle { a, b } => directed_line_angle(pt(a.0), pt(a.1), pt(b.0), pt(b.1))?,
        Formula::SignedDistance { point, line } => {
            let calibration = set.calibration().ok_or(MeasureError::MissingCalibration)?;
            let px = signed_point_line_distance(pt(point), pt(line.0), pt(line.1))?;
            to_physical(px, calibration)
        }
        Formula::Difference { minuend, subtrahend } => {
            compute(set, minuend)?.value - compute(set, subtrahend)?.value
        }
    };
    Ok(MeasurementResult {
        id,
        value,
        unit: id.unit(),
        inputs_used: required,
    })
}

/// Computes every requested measurement, recording failures instead of aborting.
/// Results come back in declaration order regardless of request order.
pub fn compute_all(set: &LandmarkSet, ids: &[MeasurementId]) -> MeasurementBatch {
    let mut batch = MeasurementBatch::default();
    for id in MeasurementId::ALL.iter().copied().filter(|id| ids.contains(id)) {
        match compute(set, id) {
            Ok(r) => batch.results.push(r),
            Err(e) => batch.skipped.push(Skipped { id, reason: SkipReason::from(&e) }),
        }
    }
    batch
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norm {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NormTable {
    pub provenance: String,
    pub entries: BTreeMap<MeasurementId, Norm>,
}

impl NormTable {
    pub fn get(&self, id: MeasurementId) -> Option<Norm> {
        self.entries.get(&id).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Grade {
    Low,
    Normal,
    High,
}

impl Grade {
    pub fn from_z(z: f64) -> Grade {
        if z < -2.0 {
            Grade::Low
        } else if z > 2.0 {
            Grade::High
        } else {
            Grade::Normal
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Grade::Low => "LOW",
            Grade::Normal => "NORMAL",
            Grade::High => "HIGH",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub id: MeasurementId,
    pub z: f64,
    pub grade: Grade,
}

pub fn grade(results: &[MeasurementResult], norms: &NormTable) -> Vec<Deviation> {
    results
        .iter()
        .filter_map(|r| {
            let norm = norms.get(r.id)?;
            let z = (r.value - norm.mean) / norm.sd;
            Some(Deviation { id: r.id, z, grade: Grade::from_z(z) })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub anb_lo: f64,
    pub anb_hi: f64,
    pub mpfh_lo: f64,
    pub mpfh_hi: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { anb_lo: 0.0, anb_hi: 4.0, mpfh_lo: 22.0, mpfh_hi: 32.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SagittalClass {
    #[serde(rename = "CLASS_I")]
    ClassI,
    #[serde(rename = "CLASS_II")]
    ClassII,
    #[serde(rename = "CLASS_III")]
    ClassIII,
}

impl SagittalClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SagittalClass::ClassI => "CLASS_I",
            SagittalClass::ClassII => "CLASS_II",
            SagittalClass::ClassIII => "CLASS_III",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerticalPattern {
    LowAngle,
    Average,
    HighAngle,
}

impl VerticalPattern {
    pub fn as_str(self) -> &'static str {
        match self {
            VerticalPattern::LowAngle => "LOW_ANGLE",
            VerticalPattern::Average => "AVERAGE",
            VerticalPattern::HighAngle => "HIGH_ANGLE",
        }
    }
}

/// `None` on an axis means its driving measurement was unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkeletalClassification {
    pub sagittal: Option<SagittalClass>,
    pub vertical: Option<VerticalPattern>,
    pub thresholds: Thresholds,
}

pub fn classify_anb(anb: f64, t: &Thresholds) -> SagittalClass {
    if anb > t.anb_hi {
        SagittalClass::ClassII
    } else if anb < t.anb_lo {
        SagittalClass::ClassIII
    } else {
        SagittalClass::ClassI
    }
}

pub fn classify_mpfh(mpfh: f64, t: &Thresholds) -> VerticalPattern {
    if mpfh > t.mpfh_hi {
        VerticalPattern::HighAngle
    } else if mpfh < t.mpfh_lo {
        VerticalPattern::LowAngle
    } else {
        VerticalPattern::Average
    }
}

pub fn classify(results: &[MeasurementResult], t: &Thresholds) -> SkeletalClassification {
    let value = |id| results.iter().find(|r| r.id == id).map(|r| r.value);
    SkeletalClassification {
        sagittal: value(MeasurementId::Anb).map(|v| classify_anb(v, t)),
        vertical: value(MeasurementId::MpFh).map(|v| classify_mpfh(v, t)),
        thresholds: *t,
    }
}
