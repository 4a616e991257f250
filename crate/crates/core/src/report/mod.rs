//! Diagnostic reports and instruction-tuning prompts.
//!
//! A report has three sections in fixed order: a narrative of findings, a
//! numbered diagnosis, and numbered recommendations, followed by an echo of
//! every computed measurement. All wording comes from the per-language
//! template tables, so the same findings render identically every time.

mod findings;
mod number;
mod prompt;
mod templates;

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use findings::{all_finding_keys, derive_findings, Finding, FindingCategory, FindingLevel};
pub use number::format_value;
pub use prompt::{
    build_prompt, choose_instruction, format_reference_suffix, PromptSample, DEFAULT_IMAGE_TOKEN,
};
pub use templates::{parse_records, InstructionSet, Language, Resources, TemplateSet};

use crate::steiner::{Deviation, MeasurementId, MeasurementResult, SagittalClass};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("no template {key:?} for language {lang}")]
    MissingTemplate { key: String, lang: Language },
    #[error("measurement {0} is required but was not computed")]
    MissingMeasurement(MeasurementId),
    #[error("instruction set for language {0} is empty")]
    EmptyInstructionSet(Language),
    #[error("line {line}: {detail}")]
    MalformedTable { line: usize, detail: String },
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
}

impl ReportError {
    pub fn code(&self) -> &'static str {
        match self {
            ReportError::MissingTemplate { .. } => "MISSING_TEMPLATE",
            ReportError::MissingMeasurement(_) => "MISSING_MEASUREMENT",
            ReportError::EmptyInstructionSet(_) => "EMPTY_INSTRUCTION_SET",
            ReportError::MalformedTable { .. } => "PARSE_ERROR",
            ReportError::Io { .. } => "IO_ERROR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Markdown,
    Structured,
}

impl ReportFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportFormat::Text => "text",
            ReportFormat::Markdown => "markdown",
            ReportFormat::Structured => "structured",
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            ReportFormat::Text => "text/plain; charset=utf-8",
            ReportFormat::Markdown => "text/markdown; charset=utf-8",
            ReportFormat::Structured => "application/json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "markdown" => Ok(ReportFormat::Markdown),
            "structured" => Ok(ReportFormat::Structured),
            other => Err(format!("unsupported format {other:?}, expected text|markdown|structured")),
        }
    }
}

/// One line of the measurement echo section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementLine {
    pub id: MeasurementId,
    pub label: String,
    pub value: String,
    pub unit: String,
    pub grade: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub language: Language,
    pub title: String,
    pub findings: Vec<Finding>,
    pub narrative: String,
    pub diagnosis_lead: String,
    pub diagnosis_lines: Vec<String>,
    pub recommendations_lead: String,
    pub recommendations: Vec<String>,
    pub measurements: Vec<MeasurementLine>,
    #[serde(skip)]
    headings: [String; 4],
}

const RECOMMENDATION_ORDER: [&str; 8] = [
    "imaging",
    "class2",
    "class3",
    "vertical_high",
    "vertical_low",
    "incisors",
    "myofunctional",
    "routine",
];

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (name, value) in vars {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

impl DiagnosticReport {
    /// Assembles a report from findings plus the measurements to echo.
    pub fn compose(
        findings: &[Finding],
        results: &[MeasurementResult],
        deviations: &[Deviation],
        templates: &TemplateSet,
    ) -> Result<Self, ReportError> {
        let t = |key: &str| templates.get(key).map(str::to_string);
        let end = t("punct.end")?;

        let narrative = if findings.is_empty() {
            t("narrative.empty")?
        } else {
            let sentences = findings
                .iter()
                .map(|f| t(&format!("finding.{}", f.template_suffix())))
                .collect::<Result<Vec<_>, _>>()?;
            fill(&t("narrative.body")?, &[("findings", &sentences.join(&t("punct.list")?))])
        };

        let class = findings
            .iter()
            .find(|f| f.category == FindingCategory::SagittalClass && f.level.is_abnormal());
        let abnormal = |cat: FindingCategory| {
            findings.iter().filter(move |f| f.category == cat && f.level.is_abnormal())
        };

        let mut lines: Vec<String> = Vec::new();
        let mut jaw_lines = 0;
        for cat in [FindingCategory::Maxilla, FindingCategory::Mandible] {
            for f in abnormal(cat) {
                let phrase = t(&format!("diagnosis.{}", f.template_suffix()))?;
                let line = match class {
                    Some(c) => fill(
                        &t("diagnosis.combined")?,
                        &[
                            ("finding", &phrase),
                            ("class", &t(&format!("class_phrase.{}", c.level.as_str()))?),
                        ],
                    ),
                    None => phrase,
                };
                lines.push(line);
                jaw_lines += 1;
            }
        }
        if let (Some(c), 0) = (class, jaw_lines) {
            lines.push(t(&format!("diagnosis.{}", c.template_suffix()))?);
        }
        for cat in [FindingCategory::Vertical, FindingCategory::Chin] {
            for f in abnormal(cat) {
                lines.push(t(&format!("diagnosis.{}", f.template_suffix()))?);
            }
        }
        let mut dental_abnormal = false;
        for f in findings.iter().filter(|f| f.category.is_dental() && f.level.is_abnormal()) {
            lines.push(t(&format!("diagnosis.{}", f.template_suffix()))?);
            dental_abnormal = true;
        }
        let dental_evaluated = findings.iter().any(|f| f.category.is_dental());
        if lines.is_empty() {
            lines.push(t("diagnosis.none")?);
        } else if dental_evaluated && !dental_abnormal {
            lines.push(t("diagnosis.no_dental")?);
        }
        let diagnosis_lines = lines.into_iter().map(|l| l + &end).collect();

        let mut rec_keys: Vec<&str> = Vec::new();
        match class.map(|c| c.level) {
            Some(FindingLevel::ClassIi) => rec_keys.extend(["imaging", "class2", "myofunctional"]),
            Some(FindingLevel::ClassIii) => rec_keys.extend(["imaging", "class3", "myofunctional"]),
            _ => {}
        }
        if jaw_lines > 0 {
            rec_keys.push("imaging");
        }
        for f in abnormal(FindingCategory::Vertical) {
            rec_keys.push(if f.level == FindingLevel::HighAngle { "vertical_high" } else { "vertical_low" });
        }
        if dental_abnormal {
            rec_keys.push("incisors");
        }
        if abnormal(FindingCategory::Chin).next().is_some() {
            rec_keys.push("myofunctional");
        }
        if rec_keys.is_empty() {
            rec_keys.push("routine");
        }
        let recommendations = RECOMMENDATION_ORDER
            .iter()
            .filter(|k| rec_keys.contains(k))
            .map(|k| t(&format!("recommend.{k}")).map(|s| s + &end))
            .collect::<Result<Vec<_>, _>>()?;

        let measurements = results
            .iter()
            .map(|r| {
                let label = t(&format!("label.{}", r.id.as_str()))?;
                let value = format_value(r.value);
                let unit = t(&format!("unit.{}", r.unit.as_str()))?;
                let grade = deviations.iter().find(|d| d.id == r.id).map(|d| d.grade.as_str());
                let grade_text = t(&format!("grade.{}", grade.unwrap_or("UNGRADED")))?;
                let text = fill(
                    &t("echo.line")?,
                    &[("label", &label), ("value", &value), ("unit", &unit), ("grade", &grade_text)],
                );
                Ok(MeasurementLine {
                    id: r.id,
                    label,
                    value,
                    unit: r.unit.as_str().to_string(),
                    grade: grade.map(str::to_string),
                    text,
                })
            })
            .collect::<Result<Vec<_>, ReportError>>()?;

        Ok(DiagnosticReport {
            language: templates.language,
            title: t("title")?,
            findings: findings.to_vec(),
            narrative,
            diagnosis_lead: t("lead.diagnosis")?,
            diagnosis_lines,
            recommendations_lead: t("lead.recommendations")?,
            recommendations,
            measurements,
            headings: [
                t("section.findings")?,
                t("section.diagnosis")?,
                t("section.recommendations")?,
                t("section.measurements")?,
            ],
        })
    }

    /// The narrative paragraph on its own.
    pub fn summary(&self) -> &str {
        &self.narrative
    }

    pub fn has_sagittal_class(&self, class: SagittalClass) -> bool {
        self.findings.iter().any(|f| {
            f.category == FindingCategory::SagittalClass && f.level == FindingLevel::from(class)
        })
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => self.render_text(),
            ReportFormat::Markdown => self.render_markdown(),
            ReportFormat::Structured => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }

    fn render_text(&self) -> String {
        let [h_findings, h_diag, h_rec, h_meas] = &self.headings;
        let mut out = format!("{}\n\n{h_findings}\n{}\n\n{h_diag}\n{}\n", self.title, self.narrative, self.diagnosis_lead);
        for (i, line) in self.diagnosis_lines.iter().enumerate() {
            out.push_str(&format!("{}. {line}\n", i + 1));
        }
        out.push_str(&format!("\n{h_rec}\n{}\n", self.recommendations_lead));
        for (i, line) in self.recommendations.iter().enumerate() {
            out.push_str(&format!("{}. {line}\n", i + 1));
        }
        if !self.measurements.is_empty() {
            out.push_str(&format!("\n{h_meas}\n"));
            for m in &self.measurements {
                out.push_str(&m.text);
                out.push('\n');
            }
        }
        out
    }

    fn render_markdown(&self) -> String {
        let [h_findings, h_diag, h_rec, h_meas] = &self.headings;
        let mut out = format!(
            "# {}\n\n## {h_findings}\n\n{}\n\n## {h_diag}\n\n{}\n\n",
            self.title, self.narrative, self.diagnosis_lead
        );
        for (i, line) in self.diagnosis_lines.iter().enumerate() {
            out.push_str(&format!("{}. {line}\n", i + 1));
        }
        out.push_str(&format!("\n## {h_rec}\n\n{}\n\n", self.recommendations_lead));
        for (i, line) in self.recommendations.iter().enumerate() {
            out.push_str(&format!("{}. {line}\n", i + 1));
        }
        if !self.measurements.is_empty() {
            out.push_str(&format!("\n## {h_meas}\n\n"));
            for m in &self.measurements {
                out.push_str(&format!("- {}\n", m.text));
            }
        }
        out
    }
}

/// Composes and renders in one step.
pub fn render_report(
    findings: &[Finding],
    results: &[MeasurementResult],
    deviations: &[Deviation],
    templates: &TemplateSet,
    format: ReportFormat,
) -> Result<String, ReportError> {
    Ok(DiagnosticReport::compose(findings, results, deviations, templates)?.render(format))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steiner::Grade;

    fn finding(category: FindingCategory, level: FindingLevel, src: MeasurementId) -> Finding {
        Finding { category, level, sources: vec![src] }
    }

    fn compose(findings: &[Finding], lang: Language) -> DiagnosticReport {
        DiagnosticReport::compose(findings, &[], &[], &TemplateSet::builtin(lang)).unwrap()
    }

    #[test]
    fn template_totality() {
        for lang in Language::ALL {
            let t = TemplateSet::builtin(lang);
            for (cat, level) in all_finding_keys() {
                let suffix = format!("{}.{}", cat.as_str(), level.as_str());
                assert!(t.contains(&format!("finding.{suffix}")), "{lang} finding.{suffix}");
                if level.is_abnormal() {
                    assert!(t.contains(&format!("diagnosis.{suffix}")), "{lang} diagnosis.{suffix}");
                }
            }
            for id in MeasurementId::ALL {
                assert!(t.contains(&format!("label.{}", id.as_str())));
            }
            for key in RECOMMENDATION_ORDER {
                assert!(t.contains(&format!("recommend.{key}")));
            }
            for c in ["CLASS_II", "CLASS_III"] {
                assert!(t.contains(&format!("class_phrase.{c}")));
            }
        }
    }

    #[test]
    fn empty_findings_state_normal_limits() {
        let r = compose(&[], Language::En);
        let text = r.render(ReportFormat::Text);
        assert!(text.contains("within normal limits"), "{text}");
        assert_eq!(r.diagnosis_lines.len(), 1);
        assert_eq!(r.recommendations.len(), 1);
    }

    #[test]
    fn class_two_phrasing() {
        let findings = vec![
            finding(FindingCategory::Maxilla, FindingLevel::High, MeasurementId::Sna),
            finding(FindingCategory::Mandible, FindingLevel::Normal, MeasurementId::Snb),
            finding(FindingCategory::SagittalClass, FindingLevel::ClassIi, MeasurementId::Anb),
        ];
        let r = compose(&findings, Language::En);
        assert_eq!(r.diagnosis_lines[0], "Maxillary protrusion, skeletal Class II malocclusion.");
        let text = r.render(ReportFormat::Text);
        assert!(text.contains("skeletal Class II malocclusion"));
        assert!(text.contains("1. Maxillary protrusion"));
        assert!(r.recommendations.len() >= 2);
        assert_eq!(text, r.render(ReportFormat::Text));

        let zh = compose(&findings, Language::Zh);
        assert_eq!(zh.diagnosis_lines[0], "上颌骨前突，骨性II类错颌。");
    }

    #[test]
    fn class_without_jaw_abnormality_and_dental_statement() {
        let findings = vec![
            finding(FindingCategory::Maxilla, FindingLevel::Normal, MeasurementId::Sna),
            finding(FindingCategory::SagittalClass, FindingLevel::ClassIii, MeasurementId::Anb),
            finding(FindingCategory::UpperIncisor, FindingLevel::Normal, MeasurementId::U1NaMm),
        ];
        let r = compose(&findings, Language::En);
        assert_eq!(
            r.diagnosis_lines,
            vec!["Skeletal Class III malocclusion.", "No abnormal dental relationships are observed."]
        );
    }

    #[test]
    fn all_normal_reports_no_abnormality() {
        let findings = vec![
            finding(FindingCategory::Maxilla, FindingLevel::Normal, MeasurementId::Sna),
            finding(FindingCategory::SagittalClass, FindingLevel::ClassI, MeasurementId::Anb),
            finding(FindingCategory::Vertical, FindingLevel::Average, MeasurementId::MpFh),
        ];
        let r = compose(&findings, Language::En);
        assert_eq!(r.diagnosis_lines.len(), 1);
        assert!(r.diagnosis_lines[0].starts_with("No skeletal or dental abnormalities"));
        assert!(r.recommendations[0].contains("routine"));
    }

    #[test]
    fn missing_template_is_reported() {
        let t = TemplateSet::parse(Language::En, "title\tx\n").unwrap();
        let err = DiagnosticReport::compose(&[], &[], &[], &t).unwrap_err();
        assert!(matches!(err, ReportError::MissingTemplate { .. }));
    }

    #[test]
    fn measurement_echo_and_markdown() {
        let results = vec![MeasurementResult {
            id: MeasurementId::L1NbMm,
            value: 6.6,
            unit: MeasurementId::L1NbMm.unit(),
            inputs_used: vec![],
        }];
        let devs = vec![Deviation { id: MeasurementId::L1NbMm, z: 1.3, grade: Grade::Normal }];
        let r = DiagnosticReport::compose(&[], &results, &devs, &TemplateSet::builtin(Language::En))
            .unwrap();
        assert_eq!(r.measurements[0].text, "L1-NB distance: 6.6 mm (within the norm)");
        let md = r.render(ReportFormat::Markdown);
        assert!(md.starts_with("# Cephalometric analysis report\n"));
        assert!(md.contains("- L1-NB distance: 6.6 mm"));
        let structured: serde_json::Value =
            serde_json::from_str(&r.render(ReportFormat::Structured)).unwrap();
        assert_eq!(structured["language"], "en");
    }
}
