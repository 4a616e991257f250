//! Directory-level processing with quarantine of unusable inputs.
//!
//! Files are parsed and analyzed in parallel, then reported in path order, so
//! the outputs and summary never depend on scheduling.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{load_case_file, IngestError, LandmarkFormat, QuarantineReason};
use crate::analysis::{analyze, AnalysisConfig};
use crate::geometry::Calibration;
use crate::report::{Language, ReportError, ReportFormat, Resources};

pub const QUARANTINE_FILE: &str = "quarantine.tsv";
const ANALYSIS_SUFFIX: &str = ".analysis.json";

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub out_dir: PathBuf,
    pub quarantine_dir: Option<PathBuf>,
    pub languages: Vec<Language>,
    pub config: AnalysisConfig,
    pub resources: Resources,
    /// Scale for inputs that carry none (CSV) or that should override the isbi19 default.
    pub calibration: Option<Calibration>,
}

impl BatchOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        BatchOptions {
            out_dir: out_dir.into(),
            quarantine_dir: None,
            languages: vec![Language::En, Language::Zh],
            config: AnalysisConfig::default(),
            resources: Resources::builtin(),
            calibration: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarantineRecord {
    /// Path relative to the input directory.
    pub path: String,
    pub reason: QuarantineReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BatchSummary {
    pub inputs: usize,
    pub outputs: usize,
    pub case_ids: Vec<String>,
    pub quarantined: Vec<QuarantineRecord>,
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
    #[error(transparent)]
    Report(#[from] ReportError),
}

fn io_err(path: &Path, e: std::io::Error) -> BatchError {
    BatchError::Io { path: path.display().to_string(), detail: e.to_string() }
}

/// Landmark files directly inside `dir`, sorted by path.
pub fn recognized_inputs(dir: &Path) -> Result<Vec<PathBuf>, BatchError> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        let path = entry.path();
        if !path.is_file() || LandmarkFormat::from_path(&path).is_none() {
            continue;
        }
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if name.ends_with(ANALYSIS_SUFFIX) {
            continue;
        }
        paths.push(path);
    }
    paths.sort();
    Ok(paths)
}

/// Case ids become file names; path separators and control characters are replaced.
pub fn output_stem(case_id: &str) -> String {
    let s: String = case_id
        .chars()
        .map(|c| if matches!(c, '/' | '\\' | ':' | '\0') || c.is_control() { '_' } else { c })
        .collect();
    match s.as_str() {
        "" | "." | ".." => format!("_{s}"),
        _ => s,
    }
}

fn one_line(s: &str) -> String {
    s.chars().map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c }).collect()
}

struct Rendered {
    case_id: String,
    analysis_json: String,
    reports: Vec<(Language, String)>,
}

fn process_one(path: &Path, opts: &BatchOptions) -> Result<Result<Rendered, IngestError>, ReportError> {
    let analysis = match load_case_file(path, None, opts.calibration)
        .and_then(|case| analyze(&case, &opts.config))
    {
        Ok(a) => a,
        Err(e) => return Ok(Err(e)),
    };
    let mut reports = Vec::with_capacity(opts.languages.len());
    for &lang in &opts.languages {
        let report = analysis.report(lang, &opts.resources)?;
        reports.push((lang, report.render(ReportFormat::Markdown)));
    }
    Ok(Ok(Rendered { case_id: analysis.case_id.clone(), analysis_json: analysis.to_json(), reports }))
}

pub fn batch_process(input_dir: &Path, opts: &BatchOptions) -> Result<BatchSummary, BatchError> {
    let inputs = recognized_inputs(input_dir)?;
    let processed: Vec<_> = inputs
        .par_iter()
        .map(|p| process_one(p, opts))
        .collect::<Result<Vec<_>, ReportError>>()?;

    fs::create_dir_all(&opts.out_dir).map_err(|e| io_err(&opts.out_dir, e))?;
    if let Some(q) = &opts.quarantine_dir {
        fs::create_dir_all(q).map_err(|e| io_err(q, e))?;
    }

    let mut summary = BatchSummary { inputs: inputs.len(), ..BatchSummary::default() };
    let mut stems = BTreeSet::new();
    for (path, result) in inputs.iter().zip(processed) {
        let rel = path.strip_prefix(input_dir).unwrap_or(path).to_string_lossy().into_owned();
        let rejection = match result {
            Ok(r) => {
                let stem = output_stem(&r.case_id);
                if stems.insert(stem.clone()) {
                    let target = opts.out_dir.join(format!("{stem}{ANALYSIS_SUFFIX}"));
                    fs::write(&target, &r.analysis_json).map_err(|e| io_err(&target, e))?;
                    for (lang, text) in &r.reports {
                        let target = opts.out_dir.join(format!("{stem}.report.{lang}.md"));
                        fs::write(&target, text).map_err(|e| io_err(&target, e))?;
                    }
                    summary.outputs += 1;
                    summary.case_ids.push(r.case_id);
                    None
                } else {
                    Some((QuarantineReason::DuplicateId, format!("case id {:?} already produced", r.case_id)))
                }
            }
            Err(e) => Some((e.quarantine_reason(), e.to_string())),
        };
        if let Some((reason, detail)) = rejection {
            if let Some(q) = &opts.quarantine_dir {
                let target = q.join(path.file_name().expect("files have names"));
                fs::copy(path, &target).map_err(|e| io_err(&target, e))?;
            }
            summary.quarantined.push(QuarantineRecord { path: rel, reason, detail: one_line(&detail) });
        }
    }

    let mut tsv = String::from("path\treason\tdetail\n");
    for r in &summary.quarantined {
        tsv.push_str(&format!("{}\t{}\t{}\n", one_line(&r.path), r.reason, r.detail));
    }
    let target = opts.out_dir.join(QUARANTINE_FILE);
    fs::write(&target, tsv).map_err(|e| io_err(&target, e))?;
    Ok(summary)
}
