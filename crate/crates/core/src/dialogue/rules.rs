//! Offline responder: keyword lookup into the bound analysis.

use crate::analysis::Analysis;
use crate::report::{DiagnosticReport, FindingCategory, ReportError, TemplateSet};
use crate::steiner::MeasurementId;

const DEFAULT_SYNONYMS: &str = include_str!("../../data/synonyms.tsv");

#[derive(Debug, Clone, PartialEq)]
pub struct SynonymTable {
    entries: Vec<(MeasurementId, String)>,
}

impl SynonymTable {
    /// Parses `MEASUREMENT_ID<TAB>phrase` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, phrase) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: expected ID<TAB>phrase", i + 1))?;
            let id: MeasurementId = id.trim().parse().map_err(|e| format!("line {}: {e}", i + 1))?;
            let phrase = phrase.trim();
            if phrase.is_empty() {
                return Err(format!("line {}: empty phrase", i + 1));
            }
            entries.push((id, phrase.to_lowercase()));
        }
        Ok(SynonymTable { entries })
    }

    pub fn builtin() -> Self {
        SynonymTable::parse(DEFAULT_SYNONYMS).expect("shipped synonym table is valid")
    }

    /// Measurements mentioned in `question`, in declaration order. A phrase
    /// found inside a longer matching phrase does not count on its own.
    pub fn lookup(&self, question: &str) -> Vec<MeasurementId> {
        let text = question.to_lowercase();
        let mut spans: Vec<(usize, usize, MeasurementId)> = Vec::new();
        for (id, phrase) in &self.entries {
            for (start, _) in text.match_indices(phrase.as_str()) {
                let end = start + phrase.len();
                if phrase.is_ascii() && !on_word_boundaries(&text, start, end) {
                    continue;
                }
                spans.push((start, end, *id));
            }
        }
        let mut found: Vec<MeasurementId> = spans
            .iter()
            .filter(|&&(s, e, _)| {
                !spans.iter().any(|&(s2, e2, _)| s2 <= s && e <= e2 && (e2 - s2) > (e - s))
            })
            .map(|&(_, _, id)| id)
            .collect();
        found.sort();
        found.dedup();
        found
    }
}

fn on_word_boundaries(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    let is_word = |c: Option<char>| c.is_some_and(|c| c.is_ascii_alphanumeric());
    !is_word(before) && !is_word(after)
}

/// Answers from the analysis alone. Every number in the reply is a formatted
/// measurement value also present in the report.
pub fn rule_based_reply(
    question: &str,
    analysis: &Analysis,
    report: &DiagnosticReport,
    templates: &TemplateSet,
    synonyms: &SynonymTable,
) -> Result<String, ReportError> {
    let ids = synonyms.lookup(question);
    if ids.is_empty() {
        return Ok(report.summary().to_string());
    }
    let findings = analysis.findings();
    let mut lines = Vec::with_capacity(ids.len());
    for id in ids {
        let Some(line) = report.measurements.iter().find(|m| m.id == id) else {
            let label = templates.get(&format!("label.{}", id.as_str()))?;
            lines.push(templates.get("dialogue.unavailable")?.replace("{label}", label) + templates.get("punct.end")?);
            continue;
        };
        let mut reply = line.text.clone();
        let finding = FindingCategory::for_measurement(id)
            .and_then(|cat| findings.iter().find(|f| f.category == cat));
        if let Some(f) = finding {
            let key = format!("finding.{}.{}", f.category.as_str(), f.level.as_str());
            reply.push_str(templates.get("punct.list")?);
            reply.push_str(templates.get(&key)?);
        }
        reply.push_str(templates.get("punct.end")?);
        lines.push(reply);
    }
    Ok(lines.join("\n"))
}
