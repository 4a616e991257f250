//! Rule table turning grades and classification into findings.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::steiner::{
    Deviation, Grade, MeasurementId, SagittalClass, SkeletalClassification, VerticalPattern,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingCategory {
    Maxilla,
    Mandible,
    SagittalClass,
    Vertical,
    Chin,
    UpperIncisor,
    LowerIncisor,
    Interincisal,
}

impl FindingCategory {
    pub const ALL: [FindingCategory; 8] = [
        FindingCategory::Maxilla,
        FindingCategory::Mandible,
        FindingCategory::SagittalClass,
        FindingCategory::Vertical,
        FindingCategory::Chin,
        FindingCategory::UpperIncisor,
        FindingCategory::LowerIncisor,
        FindingCategory::Interincisal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FindingCategory::Maxilla => "MAXILLA",
            FindingCategory::Mandible => "MANDIBLE",
            FindingCategory::SagittalClass => "SAGITTAL_CLASS",
            FindingCategory::Vertical => "VERTICAL",
            FindingCategory::Chin => "CHIN",
            FindingCategory::UpperIncisor => "UPPER_INCISOR",
            FindingCategory::LowerIncisor => "LOWER_INCISOR",
            FindingCategory::Interincisal => "INTERINCISAL",
        }
    }

    /// Measurements whose grade drives a graded category.
    pub fn graded_sources(self) -> &'static [MeasurementId] {
        match self {
            FindingCategory::Maxilla => &[MeasurementId::Sna],
            FindingCategory::Mandible => &[MeasurementId::Snb],
            FindingCategory::Chin => &[MeasurementId::PogNbMm],
            FindingCategory::UpperIncisor => &[MeasurementId::U1NaDeg, MeasurementId::U1NaMm],
            FindingCategory::LowerIncisor => &[MeasurementId::L1NbDeg, MeasurementId::L1NbMm],
            FindingCategory::Interincisal => &[MeasurementId::Interincisal],
            FindingCategory::SagittalClass | FindingCategory::Vertical => &[],
        }
    }

    pub fn levels(self) -> &'static [FindingLevel] {
        match self {
            FindingCategory::SagittalClass => {
                &[FindingLevel::ClassI, FindingLevel::ClassIi, FindingLevel::ClassIii]
            }
            FindingCategory::Vertical => {
                &[FindingLevel::LowAngle, FindingLevel::Average, FindingLevel::HighAngle]
            }
            _ => &[FindingLevel::Low, FindingLevel::Normal, FindingLevel::High],
        }
    }

    pub fn is_dental(self) -> bool {
        matches!(
            self,
            FindingCategory::UpperIncisor
                | FindingCategory::LowerIncisor
                | FindingCategory::Interincisal
        )
    }

    /// The finding category a single measurement speaks to, if any.
    pub fn for_measurement(id: MeasurementId) -> Option<FindingCategory> {
        match id {
            MeasurementId::Anb => Some(FindingCategory::SagittalClass),
            MeasurementId::MpFh => Some(FindingCategory::Vertical),
            _ => FindingCategory::ALL
                .into_iter()
                .find(|c| c.graded_sources().contains(&id)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingLevel {
    Low,
    Normal,
    High,
    ClassI,
    ClassIi,
    ClassIii,
    LowAngle,
    Average,
    HighAngle,
}

impl FindingLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingLevel::Low => "LOW",
            FindingLevel::Normal => "NORMAL",
            FindingLevel::High => "HIGH",
            FindingLevel::ClassI => "CLASS_I",
            FindingLevel::ClassIi => "CLASS_II",
            FindingLevel::ClassIii => "CLASS_III",
            FindingLevel::LowAngle => "LOW_ANGLE",
            FindingLevel::Average => "AVERAGE",
            FindingLevel::HighAngle => "HIGH_ANGLE",
        }
    }

    pub fn is_abnormal(self) -> bool {
        !matches!(self, FindingLevel::Normal | FindingLevel::ClassI | FindingLevel::Average)
    }
}

impl From<Grade> for FindingLevel {
    fn from(g: Grade) -> Self {
        match g {
            Grade::Low => FindingLevel::Low,
            Grade::Normal => FindingLevel::Normal,
            Grade::High => FindingLevel::High,
        }
    }
}

impl From<SagittalClass> for FindingLevel {
    fn from(c: SagittalClass) -> Self {
        match c {
            SagittalClass::ClassI => FindingLevel::ClassI,
            SagittalClass::ClassII => FindingLevel::ClassIi,
            SagittalClass::ClassIII => FindingLevel::ClassIii,
        }
    }
}

impl From<VerticalPattern> for FindingLevel {
    fn from(v: VerticalPattern) -> Self {
        match v {
            VerticalPattern::LowAngle => FindingLevel::LowAngle,
            VerticalPattern::Average => FindingLevel::Average,
            VerticalPattern::HighAngle => FindingLevel::HighAngle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub category: FindingCategory,
    pub level: FindingLevel,
    pub sources: Vec<MeasurementId>,
}

impl Finding {
    /// `CATEGORY/LEVEL`, e.g. `MAXILLA/HIGH`.
    pub fn key(&self) -> String {
        format!("{}/{}", self.category.as_str(), self.level.as_str())
    }

    pub(crate) fn template_suffix(&self) -> String {
        format!("{}.{}", self.category.as_str(), self.level.as_str())
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Applies the fixed rule table. Categories whose inputs are unavailable are omitted.
/// When a category has several graded sources the most deviant one (largest |z|,
/// earliest measurement on ties) decides the level.
pub fn derive_findings(
    deviations: &[Deviation],
    classification: &SkeletalClassification,
) -> Vec<Finding> {
    let mut out = Vec::new();
    for category in FindingCategory::ALL {
        match category {
            FindingCategory::SagittalClass => {
                if let Some(class) = classification.sagittal {
                    out.push(Finding {
                        category,
                        level: class.into(),
                        sources: vec![MeasurementId::Anb],
                    });
                }
            }
            FindingCategory::Vertical => {
                if let Some(pattern) = classification.vertical {
                    out.push(Finding {
                        category,
                        level: pattern.into(),
                        sources: vec![MeasurementId::MpFh],
                    });
                }
            }
            _ => {
                let mut graded: Vec<&Deviation> = deviations
                    .iter()
                    .filter(|d| category.graded_sources().contains(&d.id))
                    .collect();
                graded.sort_by_key(|d| d.id);
                let mut decisive: Option<&Deviation> = None;
                for d in &graded {
                    if decisive.is_none_or(|best| d.z.abs() > best.z.abs()) {
                        decisive = Some(d);
                    }
                }
                if let Some(d) = decisive {
                    out.push(Finding {
                        category,
                        level: d.grade.into(),
                        sources: graded.iter().map(|d| d.id).collect(),
                    });
                }
            }
        }
    }
    out
}

/// Every finding the rule table can produce, for template totality checks.
pub fn all_finding_keys() -> Vec<(FindingCategory, FindingLevel)> {
    FindingCategory::ALL
        .iter()
        .flat_map(|&c| c.levels().iter().map(move |&l| (c, l)))
        .collect()
}
