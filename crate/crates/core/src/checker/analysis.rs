//! The full pipeline from source text to diagnostics and verdicts.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    check_consistency_within, detect_divergence_within, detect_redundancy_within, horizon_warning, Budget,
    CheckConfig, CheckError, Verdict, VerdictKind,
};
use crate::language::{
    analyze_names, has_errors, parse_partial, typecheck, Category, Diagnostic, NodeId, Span, Spec,
};

#[derive(Debug, Clone, Default, Serialize)]
pub struct Analysis {
    pub diagnostics: Vec<Diagnostic>,
    pub verdicts: Vec<Verdict>,
    /// The budget ran out before every check finished.
    pub partial: bool,
    #[serde(skip)]
    pub spec: Option<Spec>,
}

/// No errors and no deadlock, divergence or naming verdicts. Redundancy
/// does not count as a conflict.
pub fn is_conflict_free(a: &Analysis) -> bool {
    !has_errors(&a.diagnostics)
        && !a.partial
        && a.verdicts.iter().all(|v| v.kind == VerdictKind::Redundancy)
}

fn naming_verdicts(spec: &Spec, diags: &[Diagnostic]) -> Vec<Verdict> {
    diags
        .iter()
        .filter(|d| d.is_error() && d.category == Category::Naming)
        .filter_map(|d| {
            let rule = spec.rules.iter().enumerate().find(|(i, _)| {
                spec.source_spans
                    .get(&NodeId::Rule(*i))
                    .is_some_and(|s| s.start <= d.span.start && d.span.start < s.end.max(s.start + 1))
            })?;
            let mut message = d.message.clone();
            if let Some(s) = &d.suggestion {
                message.push_str(&format!(" (did you mean `{s}`?)"));
            }
            Some(Verdict {
                kind: VerdictKind::Naming,
                rules: vec![rule.1.id.name.clone()],
                trace: None,
                witness: None,
                scenario: BTreeMap::new(),
                message,
            })
        })
        .collect()
}

/// Parses, resolves names, type-checks and, if all of that is clean, runs
/// the deadlock and divergence checks, then the redundancy check when no
/// conflict was found.
pub fn analyze(text: &str, cfg: &CheckConfig, budget: &Budget) -> Analysis {
    let mut out = Analysis::default();
    let (spec, syntax) = parse_partial(text);
    if !syntax.is_empty() {
        out.diagnostics = syntax;
        return out;
    }
    let names = analyze_names(&spec);
    if has_errors(&names) {
        out.verdicts = naming_verdicts(&spec, &names);
        out.diagnostics = names;
        out.spec = Some(spec);
        return out;
    }
    let types = typecheck(&spec);
    if has_errors(&types) {
        out.diagnostics = types;
        out.spec = Some(spec);
        return out;
    }
    match run_checks(&spec, cfg, budget, &mut out) {
        Ok(()) => {}
        Err(CheckError::Interrupted(_)) => out.partial = true,
        Err(CheckError::Semantics(e)) => {
            out.diagnostics
                .push(Diagnostic::error(Category::Config, Span::default(), e.to_string()));
        }
    }
    out.spec = Some(spec);
    out
}

fn run_checks(spec: &Spec, cfg: &CheckConfig, budget: &Budget, out: &mut Analysis) -> Result<(), CheckError> {
    if let Some(w) = horizon_warning(spec, cfg)? {
        out.diagnostics.push(w);
    }
    out.verdicts.extend(check_consistency_within(spec, cfg, budget)?);
    out.verdicts.extend(detect_divergence_within(spec, cfg, budget)?);
    if out.verdicts.is_empty() {
        out.verdicts.extend(detect_redundancy_within(spec, cfg, budget)?);
    }
    Ok(())
}
