use std::collections::BTreeSet;

use super::ast::{Condition, MeasureType, Operand, Spec};
use super::diagnostic::{Category, Diagnostic};

/// Checks measure declarations and every rule condition for type
/// correctness. Expects a name-clean document; unresolved names are skipped.
pub fn typecheck(spec: &Spec) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for m in &spec.measures {
        if let MeasureType::Scale(lits) = &m.mtype {
            let distinct: BTreeSet<&str> = lits.iter().map(|l| l.as_str()).collect();
            if distinct.len() != lits.len() {
                diags.push(Diagnostic::error(
                    Category::Type,
                    m.name.span,
                    format!("scale `{}` repeats a literal", m.name.name),
                ));
            } else if lits.len() < 2 {
                diags.push(Diagnostic::error(
                    Category::Type,
                    m.name.span,
                    format!("scale `{}` needs at least two literals", m.name.name),
                ));
            }
        }
    }

    for rule in &spec.rules {
        for cond in rule.conditions() {
            check_condition(spec, cond, &rule.id.name, &mut diags);
        }
    }
    diags.sort_by(|a, b| (a.span, &a.message).cmp(&(b.span, &b.message)));
    diags
}

fn check_condition(spec: &Spec, cond: &Condition, rule: &str, diags: &mut Vec<Diagnostic>) {
    match cond {
        Condition::Atom(m) => {
            if let Some(def) = spec.measure(m.as_str()) {
                if def.mtype != MeasureType::Boolean {
                    diags.push(Diagnostic::error(
                        Category::Type,
                        m.span,
                        format!(
                            "measure `{}` in rule {rule} is not boolean and needs a comparison",
                            m.name
                        ),
                    ));
                }
            }
        }
        Condition::Compare { measure, op, value } => {
            let Some(def) = spec.measure(measure.as_str()) else {
                return;
            };
            let bad = |msg: String| Diagnostic::error(Category::Type, measure.span, msg);
            match (&def.mtype, value) {
                (MeasureType::Boolean, _) => diags.push(bad(format!(
                    "boolean measure `{}` in rule {rule} cannot be compared with `{}`",
                    measure.name,
                    op.symbol()
                ))),
                (MeasureType::Numeric, Operand::Int(_)) => {}
                (MeasureType::Numeric, Operand::Name(n)) => {
                    if spec.constant(n.as_str()).is_none() {
                        diags.push(bad(format!(
                            "numeric measure `{}` in rule {rule} compared with non-numeric `{}`",
                            measure.name, n.name
                        )));
                    }
                }
                (MeasureType::Scale(_), Operand::Int(v)) => diags.push(bad(format!(
                    "scale measure `{}` in rule {rule} compared with integer {v}",
                    measure.name
                ))),
                (MeasureType::Scale(lits), Operand::Name(n)) => {
                    if !lits.iter().any(|l| l == n) {
                        diags.push(bad(format!(
                            "`{}` is not a literal of the scale of `{}` in rule {rule}",
                            n.name, measure.name
                        )));
                    }
                }
            }
        }
        Condition::Not(c) => check_condition(spec, c, rule, diags),
        Condition::And(a, b) | Condition::Or(a, b) => {
            check_condition(spec, a, rule, diags);
            check_condition(spec, b, rule, diags);
        }
    }
}
