//! Which part of a spec an explanation needs, and its process-style rendering.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::checker::{TraceEntry, Verdict};
use crate::language::format::{format_condition_compact, format_response};
use crate::language::{Condition, Operand, Polarity, Response, Rule, Spec};
use crate::semantics::TickScale;

/// Identifiers a rule mentions: its trigger, response events and measures.
fn mentions(rule: &Rule) -> BTreeSet<&str> {
    let mut out = BTreeSet::new();
    out.insert(rule.trigger_event.as_str());
    for r in rule.responses() {
        out.insert(r.event.as_str());
    }
    for c in rule.conditions() {
        out.extend(c.measures().into_iter().map(|m| m.as_str()));
    }
    out
}

fn operand_names(rule: &Rule) -> BTreeSet<&str> {
    rule.conditions()
        .flat_map(Condition::comparisons)
        .filter_map(|(_, _, v)| match v {
            Operand::Name(n) => Some(n.as_str()),
            Operand::Int(_) => None,
        })
        .collect()
}

/// The verdict's rules, every rule sharing an event or measure with them or
/// with the verdict's trace, and the definitions those rules use. Rules and
/// definitions keep their order in `spec`.
pub fn select_context(spec: &Spec, verdict: &Verdict) -> Spec {
    let named: Vec<&Rule> = spec
        .rules
        .iter()
        .filter(|r| verdict.rules.iter().any(|id| id == r.id.as_str()))
        .collect();
    let mut seeds: BTreeSet<&str> = named.iter().flat_map(|r| mentions(r)).collect();
    if let Some(w) = &verdict.witness {
        for e in &w.entries {
            match e {
                TraceEntry::Event { name, .. } => seeds.insert(name.as_str()),
                TraceEntry::MeasureObs { measure, .. } => seeds.insert(measure.as_str()),
                TraceEntry::Tock => false,
            };
        }
    }
    let rules: Vec<Rule> = spec
        .rules
        .iter()
        .filter(|r| {
            verdict.rules.iter().any(|id| id == r.id.as_str()) || mentions(r).iter().any(|m| seeds.contains(m))
        })
        .cloned()
        .collect();

    let used: BTreeSet<&str> = rules.iter().flat_map(|r| mentions(r).into_iter().chain(operand_names(r))).collect();
    Spec {
        events: spec.events.iter().filter(|e| used.contains(e.name.as_str())).cloned().collect(),
        measures: spec.measures.iter().filter(|m| used.contains(m.name.as_str())).cloned().collect(),
        constants: spec.constants.iter().filter(|c| used.contains(c.name.as_str())).cloned().collect(),
        rules,
        source_spans: Default::default(),
    }
}

/// One process line per rule:
///
/// ```text
/// Id = Trigger -> [guard & (]alternatives[)]
/// ```
///
/// where the alternatives are the defeaters, latest (strongest) first, each
/// as `(condition & response)`, then the default response, separated by
/// `[]`. Responses read `Event` or `not Event`, followed by `within n tock`
/// when they have a deadline; a cancelling defeater responds `SKIP`.
/// Without a tick scale, deadlines keep their written unit.
pub fn render_pseudo_csp(rules: &[Rule], ticks: Option<&TickScale>) -> String {
    let response = |r: &Response| -> String {
        let Some(d) = r.deadline else {
            return format_response(r);
        };
        let head = match r.polarity {
            Polarity::Must => r.event.name.clone(),
            Polarity::MustNot => format!("not {}", r.event),
        };
        match ticks.map(|t| t.ticks(d)) {
            Some(Ok(n)) => format!("{head} within {n} tock"),
            _ => format!("{head} within {d}"),
        }
    };
    let mut out = String::new();
    for rule in rules {
        let mut alts: Vec<String> = rule
            .defeaters
            .iter()
            .rev()
            .map(|d| {
                let resp = d.response.as_ref().map_or_else(|| "SKIP".to_string(), response);
                format!("({} & {resp})", format_condition_compact(&d.condition))
            })
            .collect();
        alts.push(response(&rule.response));
        let body = alts.join(" [] ");
        let _ = match &rule.trigger_condition {
            Some(g) => writeln!(out, "{} = {} -> {} & ({body})", rule.id, rule.trigger_event, format_condition_compact(g)),
            None => writeln!(out, "{} = {} -> {body}", rule.id, rule.trigger_event),
        };
    }
    out
}
