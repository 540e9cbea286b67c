//! Canonical pretty-printer.

use std::fmt::Write;

use super::ast::{Condition, MeasureType, Polarity, Response, Rule, Spec};

const INDENT: &str = "  ";

/// Renders `spec` in canonical layout: events, then measures, then
/// constants, then one rule per line with each defeater on its own
/// continuation line.
pub fn format(spec: &Spec) -> String {
    let mut out = String::new();
    out.push_str("def_start\n");
    for e in &spec.events {
        let _ = writeln!(out, "{INDENT}event {}", e.name);
    }
    for m in &spec.measures {
        let ty = match &m.mtype {
            MeasureType::Boolean => "boolean".to_string(),
            MeasureType::Numeric => "numeric".to_string(),
            MeasureType::Scale(lits) => {
                let lits: Vec<&str> = lits.iter().map(|l| l.as_str()).collect();
                format!("scale({})", lits.join(", "))
            }
        };
        let _ = writeln!(out, "{INDENT}measure {}: {ty}", m.name);
    }
    for c in &spec.constants {
        let _ = writeln!(out, "{INDENT}constant {} = {}", c.name, c.value);
    }
    out.push_str("def_end\nrule_start\n");
    for rule in &spec.rules {
        out.push_str(&format_rule(rule, INDENT));
    }
    out.push_str("rule_end\n");
    out
}

/// One rule, newline-terminated, each line prefixed with `indent`.
pub fn format_rule(rule: &Rule, indent: &str) -> String {
    let mut out = format!("{indent}{} when {}", rule.id, rule.trigger_event);
    if let Some(c) = &rule.trigger_condition {
        // Parenthesize a top-level `or` so it does not read as binding the event.
        out.push_str(" and ");
        write_condition(&mut out, c, Prec::And, " ");
    }
    let _ = writeln!(out, " then {}", format_response(&rule.response));
    for d in &rule.defeaters {
        let _ = write!(out, "{indent}{INDENT}unless {}", format_condition(&d.condition));
        if let Some(r) = &d.response {
            let _ = write!(out, " then {}", format_response(r));
        }
        out.push('\n');
    }
    out
}

pub fn format_response(r: &Response) -> String {
    let mut out = String::new();
    if r.polarity == Polarity::MustNot {
        out.push_str("not ");
    }
    out.push_str(r.event.as_str());
    if let Some(d) = &r.deadline {
        let _ = write!(out, " within {d}");
    }
    out
}

pub fn format_condition(c: &Condition) -> String {
    let mut out = String::new();
    write_condition(&mut out, c, Prec::Or, " ");
    out
}

/// Compact form without spaces around comparison operators, e.g.
/// `emergencyLevel>L4`.
pub fn format_condition_compact(c: &Condition) -> String {
    let mut out = String::new();
    write_condition(&mut out, c, Prec::Or, "");
    out
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Prec {
    Or,
    And,
    Unary,
}

fn write_condition(out: &mut String, c: &Condition, ctx: Prec, op_space: &str) {
    let own = match c {
        Condition::Or(..) => Prec::Or,
        Condition::And(..) => Prec::And,
        _ => Prec::Unary,
    };
    let paren = own < ctx;
    if paren {
        out.push('(');
    }
    match c {
        Condition::Atom(m) => out.push_str(m.as_str()),
        Condition::Compare { measure, op, value } => {
            let _ = write!(out, "{measure}{op_space}{}{op_space}{value}", op.symbol());
        }
        Condition::Not(inner) => {
            out.push_str("not ");
            write_condition(out, inner, Prec::Unary, op_space);
        }
        // Both connectives are left-associative: the right operand needs
        // parentheses when it has the same precedence.
        Condition::Or(a, b) => {
            write_condition(out, a, Prec::Or, op_space);
            out.push_str(" or ");
            write_condition(out, b, Prec::And, op_space);
        }
        Condition::And(a, b) => {
            write_condition(out, a, Prec::And, op_space);
            out.push_str(" and ");
            write_condition(out, b, Prec::Unary, op_space);
        }
    }
    if paren {
        out.push(')');
    }
}
