//! Tab-separated template and instruction tables.
//!
//! Each non-empty line that does not start with `#` is `key<TAB>text`. The
//! text is taken verbatim up to the line ending, so leading or trailing
//! spaces are significant. Files are picked per language: `templates.en`,
//! `templates.zh`, `instructions.en`, `instructions.zh`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ReportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Zh,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::En, Language::Zh];

    pub fn as_str(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Zh => "zh",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "en" => Ok(Language::En),
            "zh" => Ok(Language::Zh),
            other => Err(format!("unsupported language {other:?}, expected en|zh")),
        }
    }
}

const DEFAULT_TEMPLATES_EN: &str = include_str!("../../data/templates.en");
const DEFAULT_TEMPLATES_ZH: &str = include_str!("../../data/templates.zh");
const DEFAULT_INSTRUCTIONS_EN: &str = include_str!("../../data/instructions.en");
const DEFAULT_INSTRUCTIONS_ZH: &str = include_str!("../../data/instructions.zh");

/// Parses `key<TAB>text` records, keeping file order.
pub fn parse_records(text: &str) -> Result<Vec<(String, String)>, ReportError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('\t').ok_or_else(|| ReportError::MalformedTable {
            line: idx + 1,
            detail: "expected key<TAB>text".to_string(),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ReportError::MalformedTable { line: idx + 1, detail: "empty key".to_string() });
        }
        if out.iter().any(|(k, _)| k == key) {
            return Err(ReportError::MalformedTable {
                line: idx + 1,
                detail: format!("duplicate key {key:?}"),
            });
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    pub language: Language,
    entries: BTreeMap<String, String>,
}

impl TemplateSet {
    pub fn parse(language: Language, text: &str) -> Result<Self, ReportError> {
        Ok(TemplateSet { language, entries: parse_records(text)?.into_iter().collect() })
    }

    pub fn builtin(language: Language) -> Self {
        let text = match language {
            Language::En => DEFAULT_TEMPLATES_EN,
            Language::Zh => DEFAULT_TEMPLATES_ZH,
        };
        TemplateSet::parse(language, text).expect("built-in templates are well formed")
    }

    pub fn get(&self, key: &str) -> Result<&str, ReportError> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| ReportError::MissingTemplate { key: key.to_string(), lang: self.language })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Instructions for one language, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct InstructionSet {
    pub language: Language,
    pub instructions: Vec<String>,
}

impl InstructionSet {
    pub fn new(language: Language, instructions: Vec<String>) -> Self {
        InstructionSet { language, instructions }
    }

    pub fn parse(language: Language, text: &str) -> Result<Self, ReportError> {
        let instructions = parse_records(text)?.into_iter().map(|(_, v)| v).collect();
        Ok(InstructionSet { language, instructions })
    }

    pub fn builtin(language: Language) -> Self {
        let text = match language {
            Language::En => DEFAULT_INSTRUCTIONS_EN,
            Language::Zh => DEFAULT_INSTRUCTIONS_ZH,
        };
        InstructionSet::parse(language, text).expect("built-in instructions are well formed")
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }
}

/// Templates and instruction sets for every supported language.
#[derive(Debug, Clone, PartialEq)]
pub struct Resources {
    templates_en: TemplateSet,
    templates_zh: TemplateSet,
    instructions_en: InstructionSet,
    instructions_zh: InstructionSet,
}

impl Default for Resources {
    fn default() -> Self {
        Resources::builtin()
    }
}

impl Resources {
    pub fn builtin() -> Self {
        Resources {
            templates_en: TemplateSet::builtin(Language::En),
            templates_zh: TemplateSet::builtin(Language::Zh),
            instructions_en: InstructionSet::builtin(Language::En),
            instructions_zh: InstructionSet::builtin(Language::Zh),
        }
    }

    /// Loads tables from `dir`; any file that is absent falls back to the built-in copy.
    pub fn load_dir(dir: &Path) -> Result<Self, ReportError> {
        let read = |name: &str| -> Result<Option<String>, ReportError> {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(s) => Ok(Some(s)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(ReportError::Io { path: path.display().to_string(), detail: e.to_string() }),
            }
        };
        let mut res = Resources::builtin();
        for lang in Language::ALL {
            if let Some(text) = read(&format!("templates.{lang}"))? {
                *res.templates_mut(lang) = TemplateSet::parse(lang, &text)?;
            }
            if let Some(text) = read(&format!("instructions.{lang}"))? {
                *res.instructions_mut(lang) = InstructionSet::parse(lang, &text)?;
            }
        }
        Ok(res)
    }

    pub fn templates(&self, lang: Language) -> &TemplateSet {
        match lang {
            Language::En => &self.templates_en,
            Language::Zh => &self.templates_zh,
        }
    }

    pub fn instructions(&self, lang: Language) -> &InstructionSet {
        match lang {
            Language::En => &self.instructions_en,
            Language::Zh => &self.instructions_zh,
        }
    }

    pub fn templates_mut(&mut self, lang: Language) -> &mut TemplateSet {
        match lang {
            Language::En => &mut self.templates_en,
            Language::Zh => &mut self.templates_zh,
        }
    }

    pub fn instructions_mut(&mut self, lang: Language) -> &mut InstructionSet {
        match lang {
            Language::En => &mut self.instructions_en,
            Language::Zh => &mut self.instructions_zh,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_keep_whitespace_in_values() {
        let recs = parse_records("# c\n\nk1\t, \nk2\tvalue\r\n").unwrap();
        assert_eq!(recs, vec![("k1".into(), ", ".into()), ("k2".into(), "value".into())]);
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        assert!(matches!(
            parse_records("novalue\n"),
            Err(ReportError::MalformedTable { line: 1, .. })
        ));
        assert!(matches!(
            parse_records("a\tx\na\ty\n"),
            Err(ReportError::MalformedTable { line: 2, .. })
        ));
    }

    #[test]
    fn builtin_instruction_sets() {
        let en = InstructionSet::builtin(Language::En);
        assert!(en
            .instructions
            .iter()
            .any(|i| i == "What diagnosis can you provide based on this cephalometric X-ray image?"));
        assert!(en.len() >= 3);
        assert_eq!(InstructionSet::builtin(Language::Zh).len(), 3);
    }

    #[test]
    fn load_dir_overrides_only_present_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("instructions.en"), "only\tSingle instruction\n").unwrap();
        let res = Resources::load_dir(dir.path()).unwrap();
        assert_eq!(res.instructions(Language::En).instructions, vec!["Single instruction"]);
        assert_eq!(res.instructions(Language::Zh), &InstructionSet::builtin(Language::Zh));
        assert_eq!(res.templates(Language::En), &TemplateSet::builtin(Language::En));
    }
}
