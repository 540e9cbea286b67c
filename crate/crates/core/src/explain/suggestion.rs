//! Applying a proposed edit to a spec and re-checking it.

use serde::{Deserialize, Serialize};

use super::report::{ExplanationReport, ResolutionKind};
use crate::checker::{
    check_consistency_within, detect_divergence_within, Budget, CheckConfig, CheckError, Verdict,
};
use crate::language::{
    analyze_names, format, has_errors, parse, parse_rules, typecheck, Category, Diagnostic, Rule, Span, Spec,
};

/// An edit to a spec: add, remove, replace, or merge two rules into one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub kind: ResolutionKind,
    /// The rule removed or replaced; for a combination, the first rule merged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_rule_id: Option<String>,
    /// The second rule merged by a combination.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_rule_id: Option<String>,
    /// The new rule's source; empty for a removal.
    #[serde(default)]
    pub sleec_text: String,
    #[serde(skip)]
    pub parsed: Option<Rule>,
}

impl Suggestion {
    pub fn remove(rule: &str) -> Self {
        Self::new(ResolutionKind::Remove, Some(rule), None, "")
    }

    pub fn modify(rule: &str, text: &str) -> Self {
        Self::new(ResolutionKind::Modify, Some(rule), None, text)
    }

    pub fn add(text: &str) -> Self {
        Self::new(ResolutionKind::Add, None, None, text)
    }

    pub fn combine(first: &str, second: &str, text: &str) -> Self {
        Self::new(ResolutionKind::Combine, Some(first), Some(second), text)
    }

    fn new(kind: ResolutionKind, target: Option<&str>, second: Option<&str>, text: &str) -> Self {
        Suggestion {
            kind,
            target_rule_id: target.map(str::to_string),
            second_rule_id: second.map(str::to_string),
            sleec_text: text.to_string(),
            parsed: None,
        }
    }
}

/// First identifier of a rule text, i.e. its id.
fn leading_id(text: &str) -> Option<&str> {
    let t = text.trim_start();
    let end = t.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(t.len());
    (end > 0).then(|| &t[..end])
}

impl ExplanationReport {
    /// The two proposals as edits. A removal names its rule in the `Rule`
    /// field; a modification replaces the rule its text names; a combination
    /// merges the two rules the report blames.
    pub fn suggestions(&self) -> [Suggestion; 2] {
        let make = |text: &str| {
            let text = text.trim();
            match self.resolution.kind {
                ResolutionKind::Remove => Suggestion::remove(leading_id(text).unwrap_or(text)),
                ResolutionKind::Modify => Suggestion::modify(leading_id(text).unwrap_or(""), text),
                ResolutionKind::Add => Suggestion::add(text),
                ResolutionKind::Combine => Suggestion {
                    second_rule_id: self.error.rule2.clone(),
                    ..Suggestion::new(ResolutionKind::Combine, Some(&self.error.rule1), None, text)
                },
            }
        };
        [
            make(&self.resolution.suggestion1.rule),
            make(&self.resolution.suggestion2.rule),
        ]
    }
}

/// The re-checked result of a suggestion.
#[derive(Debug, Clone, Serialize)]
pub struct Applied {
    /// Canonical text of the edited spec.
    pub text: String,
    #[serde(skip)]
    pub spec: Spec,
    /// Deadlock and divergence verdicts of the edited spec.
    pub verdicts: Vec<Verdict>,
    pub suggestion: Suggestion,
}

fn problem(category: Category, message: impl Into<String>) -> Vec<Diagnostic> {
    vec![Diagnostic::error(category, Span::default(), message)]
}

fn position(spec: &Spec, id: Option<&str>, role: &str) -> Result<usize, Vec<Diagnostic>> {
    let id = id.filter(|s| !s.is_empty()).ok_or_else(|| problem(Category::Naming, format!("the suggestion names no {role}")))?;
    spec.rules
        .iter()
        .position(|r| r.id.as_str() == id)
        .ok_or_else(|| problem(Category::Naming, format!("rule `{id}` does not exist")))
}

fn new_rule(text: &str) -> Result<Rule, Vec<Diagnostic>> {
    let mut rules = parse_rules(text)?;
    match rules.len() {
        1 => Ok(rules.remove(0)),
        n => Err(problem(Category::Syntax, format!("expected exactly one rule, found {n}"))),
    }
}

/// Applies `s` to a copy of `spec`, then re-parses, re-checks names and
/// types, and re-runs the deadlock and divergence checks. `spec` itself is
/// never modified; an invalid suggestion yields its diagnostics.
pub fn validate_suggestion(spec: &Spec, s: &Suggestion, cfg: &CheckConfig) -> Result<Applied, Vec<Diagnostic>> {
    match validate_suggestion_within(spec, s, cfg, &Budget::unlimited()) {
        Ok(a) => Ok(a),
        Err(SuggestionError::Invalid(d)) => Err(d),
        Err(SuggestionError::Check(e)) => Err(problem(Category::Config, e.to_string())),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SuggestionError {
    #[error("the suggestion is not a valid edit")]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Check(#[from] CheckError),
}

pub fn validate_suggestion_within(
    spec: &Spec,
    s: &Suggestion,
    cfg: &CheckConfig,
    budget: &Budget,
) -> Result<Applied, SuggestionError> {
    let invalid = SuggestionError::Invalid;
    let mut edited = spec.clone();
    let mut parsed = None;
    match s.kind {
        ResolutionKind::Remove => {
            if !s.sleec_text.trim().is_empty() {
                return Err(invalid(problem(Category::Syntax, "a removal carries no rule text")));
            }
            let at = position(spec, s.target_rule_id.as_deref(), "rule to remove").map_err(invalid)?;
            edited.rules.remove(at);
        }
        ResolutionKind::Modify => {
            let rule = new_rule(&s.sleec_text).map_err(invalid)?;
            let target = s.target_rule_id.as_deref().or(Some(rule.id.as_str()));
            let at = position(spec, target, "rule to modify").map_err(invalid)?;
            edited.rules[at] = rule.clone();
            parsed = Some(rule);
        }
        ResolutionKind::Add => {
            let rule = new_rule(&s.sleec_text).map_err(invalid)?;
            edited.rules.push(rule.clone());
            parsed = Some(rule);
        }
        ResolutionKind::Combine => {
            let rule = new_rule(&s.sleec_text).map_err(invalid)?;
            let a = position(spec, s.target_rule_id.as_deref(), "first rule to combine").map_err(invalid)?;
            let b = position(spec, s.second_rule_id.as_deref(), "second rule to combine").map_err(invalid)?;
            if a == b {
                return Err(invalid(problem(Category::Naming, "a combination needs two different rules")));
            }
            edited.rules[a.min(b)] = rule.clone();
            edited.rules.remove(a.max(b));
            parsed = Some(rule);
        }
    }

    // Round-trip through the canonical text so spans refer to it.
    let text = format(&edited);
    let edited = parse(&text).map_err(invalid)?;
    let mut diags = analyze_names(&edited);
    if !has_errors(&diags) {
        diags.extend(typecheck(&edited));
    }
    if has_errors(&diags) {
        return Err(invalid(diags));
    }
    let mut verdicts = check_consistency_within(&edited, cfg, budget)?;
    verdicts.extend(detect_divergence_within(&edited, cfg, budget)?);
    Ok(Applied {
        text,
        spec: edited,
        verdicts,
        suggestion: Suggestion {
            parsed,
            ..s.clone()
        },
    })
}
