//! Norm and threshold tables.
//!
//! Norm file grammar, one record per line:
//!
//! ```text
//! # provenance: <free text>      (repeatable, joined with newlines)
//! # any other comment
//! <MEASUREMENT_ID> <mean> <sd>   (whitespace separated, sd > 0)
//! ```
//!
//! Threshold file: `anb_lo`, `anb_hi`, `mpfh_lo`, `mpfh_hi` as `key value` or
//! `key = value` lines. Absent keys keep their defaults.

use std::collections::BTreeSet;

use super::IngestError;
use crate::steiner::{MeasurementId, Norm, NormTable, Thresholds};

const DEFAULT_NORMS: &str = include_str!("../../data/norms.default");

fn parse_number(token: &str, what: &str, line: usize) -> Result<f64, IngestError> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::parse(format!("invalid {what} {token:?}"), Some(line))),
    }
}

pub fn load_norms(bytes: &[u8]) -> Result<NormTable, IngestError> {
    let text = super::utf8(bytes)?;
    let mut table = NormTable::default();
    let mut provenance = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        if let Some(comment) = content.strip_prefix('#') {
            if let Some(p) = comment.trim_start().strip_prefix("provenance:") {
                provenance.push(p.trim().to_string());
            }
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let [id, mean, sd] = tokens[..] else {
            return Err(IngestError::parse(
                format!("expected `ID MEAN SD`, got {} fields", tokens.len()),
                Some(line),
            ));
        };
        let mid: MeasurementId = id
            .parse()
            .map_err(|_| IngestError::parse(format!("unknown measurement id {id:?}"), Some(line)))?;
        let mean = parse_number(mean, "mean", line)?;
        let sd_value = parse_number(sd, "standard deviation", line)?;
        if sd_value <= 0.0 {
            return Err(IngestError::NonpositiveSd { id: id.to_string(), sd: sd_value, line });
        }
        if table.entries.insert(mid, Norm { mean, sd: sd_value }).is_some() {
            return Err(IngestError::parse(format!("duplicate entry for {id}"), Some(line)));
        }
    }
    table.provenance = provenance.join("\n");
    Ok(table)
}

pub fn load_thresholds(bytes: &[u8]) -> Result<Thresholds, IngestError> {
    let text = super::utf8(bytes)?;
    let mut t = Thresholds::default();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let (key, value) = match content.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => {
                let tokens: Vec<&str> = content.split_whitespace().collect();
                match tokens[..] {
                    [k, v] => (k, v),
                    _ => {
                        return Err(IngestError::parse(
                            format!("expected `key value`, got {content:?}"),
                            Some(line),
                        ))
                    }
                }
            }
        };
        let v = parse_number(value, key, line)?;
        let slot = match key {
            "anb_lo" => &mut t.anb_lo,
            "anb_hi" => &mut t.anb_hi,
            "mpfh_lo" => &mut t.mpfh_lo,
            "mpfh_hi" => &mut t.mpfh_hi,
            other => {
                return Err(IngestError::parse(format!("unknown threshold key {other:?}"), Some(line)))
            }
        };
        if !seen.insert(key.to_string()) {
            return Err(IngestError::parse(format!("duplicate threshold key {key}"), Some(line)));
        }
        *slot = v;
    }
    if t.anb_lo > t.anb_hi || t.mpfh_lo > t.mpfh_hi {
        return Err(IngestError::parse("lower threshold exceeds upper threshold", None));
    }
    Ok(t)
}

/// The shipped norm table.
pub fn default_norms() -> NormTable {
    load_norms(DEFAULT_NORMS.as_bytes()).expect("shipped norm table is valid")
}
