//! The structured answer expected from the model, and its validation.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::language::Spec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportCategory {
    Deadlock,
    Divergence,
    Naming,
    /// Only produced from the redundancy template; never a valid `Category`
    /// value in a conflict answer.
    Redundancy,
}

impl ReportCategory {
    const CONFLICT: [(&'static str, ReportCategory); 3] = [
        ("deadlock", ReportCategory::Deadlock),
        ("divergence", ReportCategory::Divergence),
        ("naming", ReportCategory::Naming),
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportCategory::Deadlock => "deadlock",
            ReportCategory::Divergence => "divergence",
            ReportCategory::Naming => "naming",
            ReportCategory::Redundancy => "redundancy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResolutionKind {
    #[serde(rename = "add rule")]
    Add,
    #[serde(rename = "combine rule")]
    Combine,
    #[serde(rename = "remove rule")]
    Remove,
    #[serde(rename = "modify rule")]
    Modify,
}

impl ResolutionKind {
    pub const ALL: [ResolutionKind; 4] = [
        ResolutionKind::Add,
        ResolutionKind::Combine,
        ResolutionKind::Remove,
        ResolutionKind::Modify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResolutionKind::Add => "add rule",
            ResolutionKind::Combine => "combine rule",
            ResolutionKind::Remove => "remove rule",
            ResolutionKind::Modify => "modify rule",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub rule1: String,
    pub rule2: Option<String>,
    pub scenario: String,
    pub category: ReportCategory,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposedRule {
    #[serde(rename = "Rule")]
    pub rule: String,
    #[serde(rename = "Justification")]
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub kind: ResolutionKind,
    pub suggestion1: ProposedRule,
    pub suggestion2: ProposedRule,
}

/// A validated answer. Serializes to the template's own shape, so a
/// serialized report is itself a valid answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Wire", into = "Wire")]
pub struct ExplanationReport {
    pub error: Finding,
    pub resolution: Resolution,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportError {
    #[error("no JSON object found in the answer")]
    NoJson { excerpt: String },
    #[error("the answer does not follow the template: {message}")]
    Shape { message: String, excerpt: String },
    #[error("{field} `{value}` is not one of: {allowed}")]
    Enumeration { field: String, value: String, allowed: String },
    #[error("rule `{0}` named in the answer is not in the specification")]
    UnknownRule(String),
}

impl ReportError {
    /// The part of the answer to quote back when asking for a correction.
    pub fn excerpt(&self) -> &str {
        match self {
            ReportError::NoJson { excerpt } | ReportError::Shape { excerpt, .. } => excerpt,
            ReportError::Enumeration { value, .. } => value,
            ReportError::UnknownRule(id) => id,
        }
    }
}

const EXCERPT_CHARS: usize = 300;

fn excerpt(s: &str) -> String {
    let s = s.trim();
    match s.char_indices().nth(EXCERPT_CHARS) {
        Some((i, _)) => format!("{}…", &s[..i]),
        None => s.to_string(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Wire {
    #[serde(rename = "Conflicting Rules", default, skip_serializing_if = "Option::is_none")]
    conflicting: Option<WireBody>,
    #[serde(rename = "Redundant Rules", default, skip_serializing_if = "Option::is_none")]
    redundant: Option<WireBody>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WireBody {
    #[serde(rename = "Error")]
    error: WireError,
    #[serde(rename = "Resolution")]
    resolution: WireResolution,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WireError {
    #[serde(rename = "Rule1")]
    rule1: String,
    #[serde(rename = "Rule2", default)]
    rule2: Option<String>,
    #[serde(rename = "Scenario")]
    scenario: String,
    #[serde(rename = "Category", default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
    #[serde(rename = "Justification")]
    justification: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WireResolution {
    #[serde(rename = "Kind")]
    kind: String,
    #[serde(rename = "Suggestion1")]
    suggestion1: ProposedRule,
    #[serde(rename = "Suggestion2")]
    suggestion2: ProposedRule,
}

fn enumeration<T: Copy>(field: &str, value: &str, allowed: &[(&str, T)]) -> Result<T, ReportError> {
    allowed
        .iter()
        .find(|(name, _)| *name == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| ReportError::Enumeration {
            field: field.to_string(),
            value: excerpt(value),
            allowed: allowed.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
        })
}

impl TryFrom<Wire> for ExplanationReport {
    type Error = ReportError;

    fn try_from(w: Wire) -> Result<Self, ReportError> {
        let (body, redundancy) = match (w.conflicting, w.redundant) {
            (Some(b), None) => (b, false),
            (None, Some(b)) => (b, true),
            _ => {
                return Err(ReportError::Shape {
                    message: "expected exactly one of \"Conflicting Rules\" or \"Redundant Rules\"".into(),
                    excerpt: String::new(),
                })
            }
        };
        let category = if redundancy {
            ReportCategory::Redundancy
        } else {
            let raw = body.error.category.as_deref().ok_or_else(|| ReportError::Shape {
                message: "missing field `Category`".into(),
                excerpt: String::new(),
            })?;
            enumeration("Category", raw, &ReportCategory::CONFLICT)?
        };
        let kinds: Vec<(&str, ResolutionKind)> = ResolutionKind::ALL.iter().map(|k| (k.as_str(), *k)).collect();
        let kind = enumeration("Kind", &body.resolution.kind, &kinds)?;
        let rule2 = body.error.rule2.map(|r| r.trim().to_string()).filter(|r| !r.is_empty());
        Ok(ExplanationReport {
            error: Finding {
                rule1: body.error.rule1.trim().to_string(),
                rule2,
                scenario: body.error.scenario,
                category,
                justification: body.error.justification,
            },
            resolution: Resolution {
                kind,
                suggestion1: body.resolution.suggestion1,
                suggestion2: body.resolution.suggestion2,
            },
        })
    }
}

impl From<ExplanationReport> for Wire {
    fn from(r: ExplanationReport) -> Wire {
        let redundancy = r.error.category == ReportCategory::Redundancy;
        let body = WireBody {
            error: WireError {
                rule1: r.error.rule1,
                rule2: r.error.rule2,
                scenario: r.error.scenario,
                category: (!redundancy).then(|| r.error.category.as_str().to_string()),
                justification: r.error.justification,
            },
            resolution: WireResolution {
                kind: r.resolution.kind.as_str().to_string(),
                suggestion1: r.resolution.suggestion1,
                suggestion2: r.resolution.suggestion2,
            },
        };
        if redundancy {
            Wire {
                conflicting: None,
                redundant: Some(body),
            }
        } else {
            Wire {
                conflicting: Some(body),
                redundant: None,
            }
        }
    }
}

const ROOTS: [&str; 2] = ["\"Conflicting Rules\"", "\"Redundant Rules\""];

/// JSON objects embedded in `raw`, in order of their opening brace. Text
/// around them (prose, code fences) is ignored.
fn embedded_objects(raw: &str) -> impl Iterator<Item = serde_json::Map<String, Value>> + '_ {
    raw.char_indices().filter(|(_, c)| *c == '{').filter_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(m))) => Some(m),
            _ => None,
        }
    })
}

/// Extracts and validates the first report in a model answer. Accepts
/// surrounding prose and markdown fences, and a template body written
/// without its outer braces.
pub fn parse_report(raw: &str) -> Result<ExplanationReport, ReportError> {
    let is_report = |m: &serde_json::Map<String, Value>| m.contains_key("Conflicting Rules") || m.contains_key("Redundant Rules");
    let mut first = None;
    let mut found = None;
    for obj in embedded_objects(raw) {
        if is_report(&obj) {
            found = Some(obj);
            break;
        }
        first.get_or_insert(obj);
    }
    if found.is_none() {
        // `"Conflicting Rules": { … }` copied without the enclosing object.
        if let Some(at) = ROOTS.iter().filter_map(|r| raw.find(r)).min() {
            let body = raw[at..].trim_end().trim_end_matches('`').trim_end();
            let wrapped = format!("{{{body}}}");
            found = embedded_objects(&wrapped).next().filter(is_report);
        }
    }
    let Some(obj) = found.or(first) else {
        return Err(ReportError::NoJson { excerpt: excerpt(raw) });
    };
    let text = Value::Object(obj);
    let wire: Wire = serde_json::from_value(text.clone()).map_err(|e| ReportError::Shape {
        message: e.to_string(),
        excerpt: excerpt(&text.to_string()),
    })?;
    ExplanationReport::try_from(wire).map_err(|e| match e {
        ReportError::Shape { message, .. } => ReportError::Shape {
            message,
            excerpt: excerpt(&text.to_string()),
        },
        other => other,
    })
}

/// Checks that the rules the report blames exist in `spec`.
pub fn check_report(report: &ExplanationReport, spec: &Spec) -> Result<(), ReportError> {
    for id in std::iter::once(&report.error.rule1).chain(&report.error.rule2) {
        if spec.rule(id).is_none() {
            return Err(ReportError::UnknownRule(id.clone()));
        }
    }
    Ok(())
}
