//! Session operations, independent of the HTTP layer.

use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;
use sleec_core::checker::{analyze, is_conflict_free, Budget, CheckConfig, CheckError, Verdict};
use sleec_core::explain::{
    validate_suggestion_within, ExplainError, Explainer, Suggestion, SuggestionError,
};
use sleec_core::language::{parse, Category, Diagnostic, Span};
use thiserror::Error;

use crate::session::{ExplanationRecord, Record, Revision, Session, SessionMetrics};
use crate::store::{StoreError, Store};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    NotFound(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error("worker failed: {0}")]
    Worker(String),
}

impl ServiceError {
    pub fn category(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Store(StoreError::NotFound(_)) => "not_found",
            ServiceError::Store(_) => "storage",
            ServiceError::Explain(e) => e.category(),
            ServiceError::Worker(_) => "internal",
        }
    }
}

/// Outcome of a submission or an applied suggestion. `revision` is absent
/// when nothing was appended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Submission {
    pub revision: Option<usize>,
    pub diagnostics: Vec<Diagnostic>,
    pub verdicts: Vec<Verdict>,
    pub partial: bool,
    pub conflict_free: bool,
}

impl Submission {
    fn rejected(diagnostics: Vec<Diagnostic>) -> Self {
        Submission {
            revision: None,
            diagnostics,
            verdicts: Vec::new(),
            partial: false,
            conflict_free: false,
        }
    }
}

pub struct Service {
    store: Store,
    explainer: Arc<Explainer>,
    check: CheckConfig,
    budget: Duration,
}

impl Service {
    pub fn new(store: Store, explainer: Explainer, check: CheckConfig, budget: Duration) -> Self {
        Service {
            store,
            explainer: Arc::new(explainer),
            check,
            budget,
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn create_session(&self) -> Result<String, ServiceError> {
        Ok(self.store.create()?)
    }

    pub async fn session(&self, id: &str) -> Result<Session, ServiceError> {
        Ok(self.store.session(id)?.lock().await.clone())
    }

    pub async fn metrics(&self, id: &str) -> Result<SessionMetrics, ServiceError> {
        Ok(self.store.session(id)?.lock().await.metrics())
    }

    /// Checks `text` and records it as the session's next revision. Blank
    /// text is rejected without a revision.
    pub async fn submit_ruleset(&self, id: &str, text: String) -> Result<Submission, ServiceError> {
        let handle = self.store.session(id)?;
        let mut session = handle.lock().await;
        if text.trim().is_empty() {
            return Ok(Submission::rejected(vec![Diagnostic::error(
                Category::Syntax,
                Span::default(),
                "the ruleset is empty",
            )]));
        }
        self.record(&mut session, text, None).await
    }

    /// Applies `suggestion` to revision `revision` (the latest by default).
    /// An invalid edit yields diagnostics and leaves the history unchanged.
    pub async fn apply_suggestion(
        &self,
        id: &str,
        revision: Option<usize>,
        suggestion: Suggestion,
    ) -> Result<Submission, ServiceError> {
        let handle = self.store.session(id)?;
        let mut session = handle.lock().await;
        let index = match revision {
            Some(i) => i,
            None => session.revisions.len().checked_sub(1).ok_or_else(|| {
                ServiceError::NotFound("the session has no revision to apply a suggestion to".into())
            })?,
        };
        let base = session
            .revisions
            .get(index)
            .ok_or_else(|| ServiceError::NotFound(format!("no revision {index}")))?
            .ruleset_text
            .clone();

        let (cfg, budget) = (self.check, self.budget);
        let attempt = suggestion.clone();
        let validated = blocking(move || {
            let spec = parse(&base)?;
            match validate_suggestion_within(&spec, &attempt, &cfg, &Budget::within(budget)) {
                Ok(applied) => Ok(applied.text),
                Err(SuggestionError::Invalid(d)) => Err(d),
                Err(SuggestionError::Check(e)) => Err(vec![check_failure(&e)]),
            }
        })
        .await?;
        match validated {
            Ok(text) => self.record(&mut session, text, Some(suggestion)).await,
            Err(diags) => Ok(Submission::rejected(diags)),
        }
    }

    async fn record(
        &self,
        session: &mut Session,
        text: String,
        applied: Option<Suggestion>,
    ) -> Result<Submission, ServiceError> {
        let (cfg, budget) = (self.check, self.budget);
        let checked = text.clone();
        let analysis = blocking(move || analyze(&checked, &cfg, &Budget::within(budget))).await?;
        let conflict_free = is_conflict_free(&analysis);
        let revision = Revision {
            index: session.revisions.len(),
            ruleset_text: text,
            submitted_at: self.store.now(),
            diagnostics: analysis.diagnostics,
            verdicts: analysis.verdicts,
            partial: analysis.partial,
            conflict_free,
            applied,
        };
        let out = Submission {
            revision: Some(revision.index),
            diagnostics: revision.diagnostics.clone(),
            verdicts: revision.verdicts.clone(),
            partial: revision.partial,
            conflict_free,
        };
        self.store.append(session, Record::Revision(revision))?;
        Ok(out)
    }

    /// Explains one verdict of one revision and records the report.
    pub async fn request_explanation(
        &self,
        id: &str,
        revision: usize,
        verdict: usize,
        system_description: Option<String>,
    ) -> Result<ExplanationRecord, ServiceError> {
        let handle = self.store.session(id)?;
        let mut session = handle.lock().await;
        let rev = session
            .revisions
            .get(revision)
            .ok_or_else(|| ServiceError::NotFound(format!("no revision {revision}")))?;
        let v = rev
            .verdicts
            .get(verdict)
            .ok_or_else(|| ServiceError::NotFound(format!("revision {revision} has no verdict {verdict}")))?
            .clone();
        let text = rev.ruleset_text.clone();

        let (cfg, explainer) = (self.check, self.explainer.clone());
        let description = system_description.unwrap_or_default();
        let explanation = blocking(move || {
            // Verdicts only exist for texts that parsed.
            let spec = parse(&text).map_err(|d| {
                ExplainError::Format {
                    problems: d.into_iter().map(|d| d.message).collect(),
                    excerpt: String::new(),
                }
            })?;
            explainer.explain(&spec, &v, &description, &cfg)
        })
        .await??;

        let record = ExplanationRecord {
            revision_index: revision,
            verdict_index: verdict,
            report: explanation.report,
            requested_at: self.store.now(),
            prompt_hash: explanation.prompt_hash,
            cached: explanation.cached,
        };
        self.store.append(&mut session, Record::Explanation(record.clone()))?;
        Ok(record)
    }
}

fn check_failure(e: &CheckError) -> Diagnostic {
    Diagnostic::error(Category::Config, Span::default(), format!("re-check failed: {e}"))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Worker(e.to_string()))
}
