//! Instruction-tuning prompts of the form
//! `###Doctor: <image token><instruction><reference suffix>###Assistant: `.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::number::format_value;
use super::templates::{InstructionSet, Language};
use super::ReportError;
use crate::steiner::{MeasurementId, MeasurementResult};

pub const DEFAULT_IMAGE_TOKEN: &str = "<ImageFeature>";

const DOCTOR_TAG: &str = "###Doctor: ";
const ASSISTANT_TAG: &str = "###Assistant: ";

const SUFFIX_LABELS_EN: [&str; 9] = [
    "SNA angle",
    "SNB angle",
    "ANB angle",
    "Y-axis angle",
    "MP-FH angle",
    "facial angle",
    "U1-NA distance",
    "L1-NB distance",
    "Po-NB distance",
];

const SUFFIX_LABELS_ZH: [&str; 9] = [
    "SNA 角",
    "SNB 角",
    "ANB 角",
    "Y 轴角",
    "MP-FH 角",
    "面 角",
    "U1-NA 距离",
    "L1-NB 距离",
    "Po-NB 距离",
];

/// The measurement echo appended to every instruction:
/// `\nReference measurements: SNA angle: 84.41, ...` or
/// `\n 参考指标:SNA 角:84.41,...`.
pub fn format_reference_suffix(
    results: &[MeasurementResult],
    lang: Language,
) -> Result<String, ReportError> {
    let mut values = Vec::with_capacity(9);
    for id in MeasurementId::PROMPT_BATTERY {
        let r = results
            .iter()
            .find(|r| r.id == id)
            .ok_or(ReportError::MissingMeasurement(id))?;
        values.push(format_value(r.value));
    }
    let (head, labels, item_sep, kv_sep) = match lang {
        Language::En => ("\nReference measurements: ", SUFFIX_LABELS_EN, ", ", ": "),
        Language::Zh => ("\n 参考指标:", SUFFIX_LABELS_ZH, ",", ":"),
    };
    let items: Vec<String> = labels
        .iter()
        .zip(&values)
        .map(|(label, v)| format!("{label}{kv_sep}{v}"))
        .collect();
    Ok(format!("{head}{}", items.join(item_sep)))
}

/// Seeded uniform pick of an instruction index in `0..len`.
pub fn choose_instruction(seed: u64, len: usize) -> usize {
    assert!(len > 0, "cannot choose from an empty instruction set");
    ChaCha8Rng::seed_from_u64(seed).random_range(0..len)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSample {
    pub text: String,
    pub language: Language,
    pub instruction_index: usize,
    pub seed: u64,
}

pub fn build_prompt(
    results: &[MeasurementResult],
    instructions: &InstructionSet,
    seed: u64,
    image_token: Option<&str>,
) -> Result<PromptSample, ReportError> {
    let lang = instructions.language;
    if instructions.is_empty() {
        return Err(ReportError::EmptyInstructionSet(lang));
    }
    let suffix = format_reference_suffix(results, lang)?;
    let index = choose_instruction(seed, instructions.len());
    let token = image_token.unwrap_or(DEFAULT_IMAGE_TOKEN);
    let text = format!(
        "{DOCTOR_TAG}{token}{}{suffix}{ASSISTANT_TAG}",
        instructions.instructions[index]
    );
    Ok(PromptSample { text, language: lang, instruction_index: index, seed })
}
