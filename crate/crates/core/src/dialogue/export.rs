//! Instruction-tuning pairs: a prompt and the report it should elicit.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::Analysis;
use crate::report::{Language, ReportError, ReportFormat, Resources};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub case_id: String,
    pub prompt: String,
    pub response: String,
}

/// One pair per analysis. Each analysis gets its own prompt seed, drawn in
/// order from a generator seeded with `seed`.
pub fn export_training_pairs(
    analyses: &[Analysis],
    seed: u64,
    lang: Language,
    resources: &Resources,
) -> Result<Vec<TrainingPair>, ReportError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    analyses
        .iter()
        .map(|a| {
            let prompt = a.prompt(lang, resources, rng.next_u64(), None)?;
            let response = a.report(lang, resources)?.render(ReportFormat::Text);
            Ok(TrainingPair { case_id: a.case_id.clone(), prompt: prompt.text, response })
        })
        .collect()
}

pub fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_field(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            other => return Err(format!("invalid escape \\{}", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

/// `prompt<TAB>response` per line with `\\`, `\n`, `\t`, `\r` escaped.
pub fn pairs_to_tsv(pairs: &[TrainingPair]) -> String {
    pairs
        .iter()
        .map(|p| format!("{}\t{}\n", escape_field(&p.prompt), escape_field(&p.response)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escaping_round_trips() {
        for s in ["plain", "a\tb\nc\\n\r", "\\", "", "参考指标:SNA 角"] {
            let e = escape_field(s);
            assert!(!e.contains('\n') && !e.contains('\t'));
            assert_eq!(unescape_field(&e).unwrap(), s);
        }
        assert!(unescape_field("bad\\x").is_err());
        assert!(unescape_field("trailing\\").is_err());
    }
}
