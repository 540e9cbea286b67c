//! Natural-language explanations of verdicts. A prompt is assembled from
//! the relevant rules, their process semantics, the counterexample and a
//! system description; the model's answer must follow a fixed JSON template
//! and its proposed edits are re-checked before they are offered.

mod context;
mod pipeline;
mod prompt;
mod provider;
mod report;
mod suggestion;

pub use context::{render_pseudo_csp, select_context};
pub use pipeline::{repair_prompt, ExplainError, Explainer, Explanation, ResponseCache};
pub use prompt::{
    build_prompt, prompt_hash, PromptBundle, CONFLICT_TEMPLATE, NO_DESCRIPTION, REDUNDANCY_TEMPLATE, REPORT_SCHEMA,
};
pub use provider::{provider, LlmConfig, LlmError, LlmProvider, MockProvider, ProviderKind, RemoteProvider, Secret};
pub use report::{
    check_report, parse_report, ExplanationReport, Finding, ProposedRule, ReportCategory, ReportError, Resolution,
    ResolutionKind,
};
pub use suggestion::{validate_suggestion, validate_suggestion_within, Applied, Suggestion, SuggestionError};
