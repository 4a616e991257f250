//! Question answering about a completed analysis.
//!
//! A session opens with a system message holding the rendered report and the
//! measurement list. Each question goes to the configured completion backend,
//! or to the offline keyword responder when no backend is configured or the
//! backend fails under the `rule` fallback policy.

mod backend;
mod export;
mod rules;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Mutex;

pub use backend::{
    BackendError, CompletionBackend, CompletionBackendConfig, FallbackPolicy, HttpBackend, Secret,
    ENV_API_KEY, ENV_ENDPOINT, ENV_FALLBACK, ENV_MODEL, ENV_TIMEOUT_S,
};
pub use export::{escape_field, export_training_pairs, pairs_to_tsv, unescape_field, TrainingPair};
pub use rules::{rule_based_reply, SynonymTable};

use crate::analysis::Analysis;
use crate::report::{format_value, Language, ReportError, ReportFormat, Resources};
use crate::store::AnalysisStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    pub timestamp: DateTime<Utc>,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        ChatMessage { role, content: content.into(), timestamp: Utc::now() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub analysis_id: String,
    pub language: Language,
    pub created_at: DateTime<Utc>,
    pub history: Vec<ChatMessage>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DialogueError {
    #[error("unknown analysis {0:?}")]
    UnknownAnalysis(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("message content is empty")]
    EmptyMessage,
    #[error("completion backend unreachable: {0}")]
    BackendUnreachable(BackendError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl DialogueError {
    pub fn code(&self) -> &'static str {
        match self {
            DialogueError::UnknownAnalysis(_) => "UNKNOWN_ANALYSIS",
            DialogueError::UnknownSession(_) => "UNKNOWN_SESSION",
            DialogueError::EmptyMessage => "EMPTY_MESSAGE",
            DialogueError::BackendUnreachable(_) => "BACKEND_UNREACHABLE",
            DialogueError::Report(e) => e.code(),
        }
    }
}

/// System message content: the text report followed by one line per measurement.
pub fn grounding_text(analysis: &Analysis, lang: Language, resources: &Resources) -> Result<String, ReportError> {
    let mut out = analysis.report(lang, resources)?.render(ReportFormat::Text);
    out.push_str("\nmeasurements:\n");
    for m in &analysis.measurements {
        let _ = writeln!(out, "{} = {} {}", m.id.as_str(), format_value(m.value), m.unit.as_str());
    }
    Ok(out)
}

pub struct DialogueGateway {
    store: Arc<AnalysisStore>,
    resources: Arc<Resources>,
    synonyms: SynonymTable,
    backend: Option<Arc<dyn CompletionBackend>>,
    fallback: FallbackPolicy,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl DialogueGateway {
    /// A gateway answering offline only.
    pub fn offline(store: Arc<AnalysisStore>, resources: Arc<Resources>) -> Self {
        DialogueGateway {
            store,
            resources,
            synonyms: SynonymTable::builtin(),
            backend: None,
            fallback: FallbackPolicy::Rule,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    /// Builds the HTTP backend when `config` enables one.
    pub fn from_config(
        store: Arc<AnalysisStore>,
        resources: Arc<Resources>,
        config: &CompletionBackendConfig,
    ) -> Result<Self, BackendError> {
        let mut gw = DialogueGateway::offline(store, resources);
        gw.fallback = config.fallback;
        if config.enabled() {
            gw.backend = Some(Arc::new(HttpBackend::new(config)?));
        }
        Ok(gw)
    }

    pub fn with_backend(mut self, backend: Arc<dyn CompletionBackend>, fallback: FallbackPolicy) -> Self {
        self.backend = Some(backend);
        self.fallback = fallback;
        self
    }

    pub fn with_synonyms(mut self, synonyms: SynonymTable) -> Self {
        self.synonyms = synonyms;
        self
    }

    pub fn backend_enabled(&self) -> bool {
        self.backend.is_some()
    }

    pub fn open_session(&self, analysis_id: &str, lang: Language) -> Result<Session, DialogueError> {
        let record = self
            .store
            .get(analysis_id)
            .ok_or_else(|| DialogueError::UnknownAnalysis(analysis_id.to_string()))?;
        let grounding = grounding_text(&record.analysis, lang, &self.resources)?;
        let session = Session {
            id: uuid::Uuid::new_v4().simple().to_string(),
            analysis_id: analysis_id.to_string(),
            language: lang,
            created_at: Utc::now(),
            history: vec![ChatMessage::new(Role::System, grounding)],
        };
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(session.id.clone(), Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    fn handle(&self, session_id: &str) -> Result<Arc<Mutex<Session>>, DialogueError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(session_id)
            .cloned()
            .ok_or_else(|| DialogueError::UnknownSession(session_id.to_string()))
    }

    pub async fn session(&self, session_id: &str) -> Result<Session, DialogueError> {
        Ok(self.handle(session_id)?.lock().await.clone())
    }

    /// Appends the question and its answer. On error the history is unchanged.
    pub async fn ask(&self, session_id: &str, text: &str) -> Result<ChatMessage, DialogueError> {
        if text.trim().is_empty() {
            return Err(DialogueError::EmptyMessage);
        }
        let handle = self.handle(session_id)?;
        let mut session = handle.lock().await;
        let record = self
            .store
            .get(&session.analysis_id)
            .ok_or_else(|| DialogueError::UnknownAnalysis(session.analysis_id.clone()))?;
        let question = ChatMessage::new(Role::User, text);

        let mut reply = None;
        if let Some(backend) = &self.backend {
            let mut outgoing = session.history.clone();
            outgoing.push(question.clone());
            match backend.complete(&outgoing).await {
                Ok(content) => reply = Some(content),
                Err(e) => {
                    tracing::warn!(error = %e, "completion backend failed");
                    if self.fallback == FallbackPolicy::Error {
                        return Err(DialogueError::BackendUnreachable(e));
                    }
                }
            }
        }
        let content = match reply {
            Some(c) => c,
            None => {
                let lang = session.language;
                let report = record.report(lang, &self.resources)?;
                rule_based_reply(text, &record.analysis, report, self.resources.templates(lang), &self.synonyms)?
            }
        };
        let answer = ChatMessage::new(Role::Assistant, content);
        session.history.push(question);
        session.history.push(answer.clone());
        Ok(answer)
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }
}
