//! In-memory registry of immutable analyses.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::analysis::Analysis;
use crate::ingest::CaseFile;
use crate::report::{DiagnosticReport, Language, ReportError, Resources};

/// A stored analysis. Never mutated after insertion; editing landmarks means
/// creating a new record.
#[derive(Debug)]
pub struct AnalysisRecord {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub case: CaseFile,
    pub analysis: Analysis,
    json: String,
    reports: [OnceLock<Result<DiagnosticReport, ReportError>>; 2],
}

#[derive(Serialize)]
struct RecordView<'a> {
    id: &'a str,
    created_at: String,
    #[serde(flatten)]
    analysis: &'a Analysis,
}

impl AnalysisRecord {
    pub fn new(case: CaseFile, analysis: Analysis) -> Self {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let created_at = Utc::now();
        let view = RecordView {
            id: &id,
            created_at: created_at.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            analysis: &analysis,
        };
        let json = serde_json::to_string(&view).expect("record serializes");
        AnalysisRecord { id, created_at, case, analysis, json, reports: [OnceLock::new(), OnceLock::new()] }
    }

    /// Composed report for `lang`, built on first use.
    pub fn report(&self, lang: Language, resources: &Resources) -> Result<&DiagnosticReport, ReportError> {
        let slot = &self.reports[lang as usize];
        slot.get_or_init(|| self.analysis.report(lang, resources)).as_ref().map_err(Clone::clone)
    }

    /// JSON body: id, creation time and the analysis fields. Computed once.
    pub fn json(&self) -> &str {
        &self.json
    }
}

#[derive(Debug, Default)]
pub struct AnalysisStore {
    records: RwLock<HashMap<String, Arc<AnalysisRecord>>>,
}

impl AnalysisStore {
    pub fn new() -> Self {
        AnalysisStore::default()
    }

    pub fn insert(&self, record: AnalysisRecord) -> Arc<AnalysisRecord> {
        let record = Arc::new(record);
        self.records
            .write()
            .expect("store lock poisoned")
            .insert(record.id.clone(), Arc::clone(&record));
        record
    }

    pub fn get(&self, id: &str) -> Option<Arc<AnalysisRecord>> {
        self.records.read().expect("store lock poisoned").get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
