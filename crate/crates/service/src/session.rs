//! Session history and the metrics derived from it.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sleec_core::checker::{Verdict, VerdictKind};
use sleec_core::explain::{ExplanationReport, Suggestion};
use sleec_core::language::Diagnostic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Revision {
    pub index: usize,
    pub ruleset_text: String,
    pub submitted_at: DateTime<Utc>,
    pub diagnostics: Vec<Diagnostic>,
    pub verdicts: Vec<Verdict>,
    pub partial: bool,
    /// No errors and no verdicts other than redundancy.
    pub conflict_free: bool,
    /// The suggestion this revision was produced from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applied: Option<Suggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub revision_index: usize,
    pub verdict_index: usize,
    pub report: ExplanationReport,
    pub requested_at: DateTime<Utc>,
    pub prompt_hash: String,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub revisions: Vec<Revision>,
    pub explanations: Vec<ExplanationRecord>,
    /// Submission time of the first conflict-free revision.
    pub resolved_at: Option<DateTime<Utc>>,
}

/// One line of a session log.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Created { id: String, created_at: DateTime<Utc> },
    Revision(Revision),
    Explanation(ExplanationRecord),
}

impl Session {
    pub fn new(id: String, created_at: DateTime<Utc>) -> Self {
        Session {
            id,
            created_at,
            revisions: Vec::new(),
            explanations: Vec::new(),
            resolved_at: None,
        }
    }

    /// Folds one log record into the session, rejecting records that would
    /// break the history's invariants.
    pub fn apply(&mut self, record: Record) -> Result<(), String> {
        match record {
            Record::Created { .. } => return Err("duplicate creation record".into()),
            Record::Revision(r) => {
                if r.index != self.revisions.len() {
                    return Err(format!("revision {} out of sequence", r.index));
                }
                if r.conflict_free && self.resolved_at.is_none() {
                    self.resolved_at = Some(r.submitted_at);
                }
                self.revisions.push(r);
            }
            Record::Explanation(e) => {
                let Some(rev) = self.revisions.get(e.revision_index) else {
                    return Err(format!("explanation for missing revision {}", e.revision_index));
                };
                if e.verdict_index >= rev.verdicts.len() {
                    return Err(format!("explanation for missing verdict {}", e.verdict_index));
                }
                self.explanations.push(e);
            }
        }
        Ok(())
    }

    pub fn metrics(&self) -> SessionMetrics {
        let resolved_index = self.revisions.iter().position(|r| r.conflict_free);
        let first_conflict = self.revisions.iter().position(|r| conflicts(r).next().is_some());

        let elapsed_secs = resolved_index.map(|end| match first_conflict {
            Some(start) if start < end => {
                let d = self.revisions[end].submitted_at - self.revisions[start].submitted_at;
                d.num_milliseconds() as f64 / 1000.0
            }
            _ => 0.0,
        });

        // Verdicts seen up to the current revision but absent from it.
        let resolved_rules = match resolved_index.or(self.revisions.len().checked_sub(1)) {
            Some(end) => {
                let now: BTreeSet<_> = conflicts(&self.revisions[end]).collect();
                let seen: BTreeSet<_> = self.revisions[..end].iter().flat_map(conflicts).collect();
                seen.difference(&now).count()
            }
            None => 0,
        };

        SessionMetrics {
            revisions: self.revisions.len(),
            resolved: resolved_index.is_some(),
            iterations: resolved_index.map_or(self.revisions.len(), |i| i + 1),
            elapsed_secs,
            resolved_rules,
            first_conflict_at: first_conflict.map(|i| self.revisions[i].submitted_at),
            resolved_at: self.resolved_at,
        }
    }
}

/// Identity of each conflict in a revision: its kind and the rules it names.
fn conflicts(r: &Revision) -> impl Iterator<Item = (VerdictKind, Vec<String>)> + '_ {
    r.verdicts.iter().filter(|v| v.kind != VerdictKind::Redundancy).map(|v| {
        let mut rules = v.rules.clone();
        rules.sort();
        (v.kind, rules)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub revisions: usize,
    pub resolved: bool,
    /// Submissions up to and including the first conflict-free one; while
    /// unresolved, the submissions so far.
    pub iterations: usize,
    /// Seconds from the first revision with a conflict to the first
    /// conflict-free one. Absent until resolved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_secs: Option<f64>,
    /// Distinct conflicts that were present earlier and are gone now.
    pub resolved_rules: usize,
    pub first_conflict_at: Option<DateTime<Utc>>,
    pub resolved_at: Option<DateTime<Utc>>,
}
