//! Name resolution: undefined, duplicated and misspelled identifiers.

use std::collections::BTreeMap;

use super::ast::{Condition, Ident, MeasureType, Operand, Spec};
use super::diagnostic::{Category, Diagnostic, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Event,
    Measure,
    Constant,
}

impl Kind {
    fn noun(self) -> &'static str {
        match self {
            Kind::Event => "event",
            Kind::Measure => "measure",
            Kind::Constant => "constant",
        }
    }

    fn with_article(self) -> &'static str {
        match self {
            Kind::Event => "an event",
            Kind::Measure => "a measure",
            Kind::Constant => "a constant",
        }
    }
}

struct Scope<'a> {
    kinds: BTreeMap<&'a str, Kind>,
    scale_literals: BTreeMap<&'a str, ()>,
}

impl<'a> Scope<'a> {
    fn of(spec: &'a Spec) -> Self {
        let mut kinds = BTreeMap::new();
        for e in &spec.events {
            kinds.entry(e.name.as_str()).or_insert(Kind::Event);
        }
        for m in &spec.measures {
            kinds.entry(m.name.as_str()).or_insert(Kind::Measure);
        }
        for c in &spec.constants {
            kinds.entry(c.name.as_str()).or_insert(Kind::Constant);
        }
        let mut scale_literals = BTreeMap::new();
        for m in &spec.measures {
            if let MeasureType::Scale(lits) = &m.mtype {
                for l in lits {
                    scale_literals.insert(l.as_str(), ());
                }
            }
        }
        Self {
            kinds,
            scale_literals,
        }
    }

    /// Closest defined name of the wanted kinds: an exact case-insensitive
    /// match first, otherwise the smallest name at edit distance 1.
    fn near_miss(&self, name: &str, wanted: &[Kind]) -> Option<&'a str> {
        let candidates = self
            .kinds
            .iter()
            .filter(|(_, k)| wanted.contains(k))
            .map(|(n, _)| *n);
        let mut best: Option<(u8, &'a str)> = None;
        for cand in candidates {
            let rank = if cand.eq_ignore_ascii_case(name) {
                0
            } else if strsim::levenshtein(cand, name) == 1 {
                1
            } else {
                continue;
            };
            // Candidates iterate in sorted order, so the first of a rank wins.
            if best.is_none_or(|(r, _)| rank < r) {
                best = Some((rank, cand));
            }
        }
        best.map(|(_, n)| n)
    }
}

struct Checker<'a> {
    scope: Scope<'a>,
    diags: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn reference(&mut self, ident: &Ident, wanted: Kind, context: &str) {
        match self.scope.kinds.get(ident.as_str()) {
            Some(k) if *k == wanted => {}
            Some(k) => self.diags.push(Diagnostic::error(
                Category::Naming,
                ident.span,
                format!(
                    "`{}` in {context} is {}, expected {}",
                    ident.name,
                    k.with_article(),
                    wanted.with_article()
                ),
            )),
            None => {
                let mut d = Diagnostic::error(
                    Category::Naming,
                    ident.span,
                    format!("undefined {} `{}` in {context}", wanted.noun(), ident.name),
                );
                if let Some(s) = self.scope.near_miss(&ident.name, &[wanted]) {
                    d = d.with_suggestion(s);
                }
                self.diags.push(d);
            }
        }
    }

    fn condition(&mut self, cond: &Condition, context: &str) {
        match cond {
            Condition::Atom(m) => self.reference(m, Kind::Measure, context),
            Condition::Compare { measure, value, .. } => {
                self.reference(measure, Kind::Measure, context);
                if let Operand::Name(n) = value {
                    let known = matches!(self.scope.kinds.get(n.as_str()), Some(Kind::Constant))
                        || self.scope.scale_literals.contains_key(n.as_str());
                    if !known {
                        let mut d = Diagnostic::error(
                            Category::Naming,
                            n.span,
                            format!("undefined constant or scale literal `{}` in {context}", n.name),
                        );
                        let lit = self
                            .scope
                            .scale_literals
                            .keys()
                            .find(|l| l.eq_ignore_ascii_case(n.as_str()))
                            .or_else(|| {
                                self.scope
                                    .scale_literals
                                    .keys()
                                    .find(|l| strsim::levenshtein(l, n.as_str()) == 1)
                            })
                            .copied();
                        if let Some(s) = lit.or_else(|| self.scope.near_miss(&n.name, &[Kind::Constant])) {
                            d = d.with_suggestion(s);
                        }
                        self.diags.push(d);
                    }
                }
            }
            Condition::Not(c) => self.condition(c, context),
            Condition::And(a, b) | Condition::Or(a, b) => {
                self.condition(a, context);
                self.condition(b, context);
            }
        }
    }
}

/// Reports undefined references, duplicate definitions and duplicate rule
/// identifiers. An empty result means the document is name-clean.
///
/// Output is sorted by source position, so it does not depend on the order in
/// which definitions were declared.
pub fn analyze_names(spec: &Spec) -> Vec<Diagnostic> {
    let mut checker = Checker {
        scope: Scope::of(spec),
        diags: Vec::new(),
    };

    let defs = spec
        .events
        .iter()
        .map(|e| &e.name)
        .chain(spec.measures.iter().map(|m| &m.name))
        .chain(spec.constants.iter().map(|c| &c.name));
    let mut seen: BTreeMap<&str, Span> = BTreeMap::new();
    for name in defs {
        if let Some(first) = seen.get(name.as_str()) {
            let dup = (*first).max(name.span);
            checker.diags.push(Diagnostic::error(
                Category::Naming,
                dup,
                format!("duplicate definition of `{}`", name.name),
            ));
        } else {
            seen.insert(name.as_str(), name.span);
        }
    }

    let mut rule_ids: BTreeMap<&str, Span> = BTreeMap::new();
    for rule in &spec.rules {
        if let Some(first) = rule_ids.get(rule.id.as_str()) {
            checker.diags.push(Diagnostic::error(
                Category::Naming,
                rule.id.span,
                format!(
                    "duplicate rule identifier `{}` (first used at line {})",
                    rule.id.name, first.line
                ),
            ));
        } else {
            rule_ids.insert(rule.id.as_str(), rule.id.span);
        }
    }

    for rule in &spec.rules {
        let ctx = format!("rule {}", rule.id.name);
        checker.reference(&rule.trigger_event, Kind::Event, &ctx);
        for cond in rule.conditions() {
            checker.condition(cond, &ctx);
        }
        for resp in rule.responses() {
            checker.reference(&resp.event, Kind::Event, &ctx);
        }
    }

    let mut diags = checker.diags;
    diags.sort_by(|a, b| (a.span, &a.message).cmp(&(b.span, &b.message)));
    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::parse;

    fn names(text: &str) -> Vec<Diagnostic> {
        analyze_names(&parse(text).unwrap())
    }

    /// Every string at edit distance exactly one from `name` over the
    /// identifier alphabet.
    fn distance_one_variants(name: &str) -> Vec<String> {
        let alphabet: Vec<char> = ('a'..='z').chain('A'..='Z').chain('0'..='9').collect();
        let chars: Vec<char> = name.chars().collect();
        let mut out = Vec::new();
        for i in 0..chars.len() {
            let mut del = chars.clone();
            del.remove(i);
            out.push(del.iter().collect());
            for &c in &alphabet {
                if c != chars[i] {
                    let mut sub = chars.clone();
                    sub[i] = c;
                    out.push(sub.iter().collect());
                }
            }
        }
        for i in 0..=chars.len() {
            for &c in &alphabet {
                let mut ins = chars.clone();
                ins.insert(i, c);
                out.push(ins.iter().collect());
            }
        }
        out.retain(|s: &String| s != name && s.chars().next().is_some_and(|c| c.is_ascii_alphabetic()));
        out
    }

    #[test]
    fn misspelled_trigger_suggests_defined_event() {
        let diags = names(
            "def_start event DetectUserFallen event CallEmergencySupport def_end
             rule_start R1 when DetectUserFalen then CallEmergencySupport rule_end",
        );
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].category, Category::Naming);
        assert!(diags[0].message.contains("DetectUserFalen"));
        assert_eq!(diags[0].suggestion.as_deref(), Some("DetectUserFallen"));
    }

    #[test]
    fn every_distance_one_typo_gets_a_suggestion() {
        let target = "MedDue";
        let variants = distance_one_variants(target);
        assert!(variants.len() > 100);
        for typo in variants {
            let text = format!(
                "def_start event {target} event Other def_end rule_start R when {typo} then Other rule_end"
            );
            let diags = names(&text);
            assert_eq!(diags.len(), 1, "{typo}");
            assert_eq!(diags[0].suggestion.as_deref(), Some(target), "{typo}");
        }
    }

    #[test]
    fn case_insensitive_match_is_preferred() {
        let diags = names(
            "def_start event Alarm event alarms event Go def_end rule_start R when alarm then Go rule_end",
        );
        assert_eq!(diags[0].suggestion.as_deref(), Some("Alarm"));
    }

    #[test]
    fn clean_spec_has_no_diagnostics() {
        let diags = names(
            "def_start event A event B measure m: scale(L1, L2) constant k = 3 measure n: numeric def_end
             rule_start R when A and m > L1 and n < k then B within 1 minute unless n = 2 rule_end",
        );
        assert!(diags.is_empty(), "{diags:?}");
    }

    #[test]
    fn duplicate_definitions() {
        let diags = names("def_start event MedicationDue event MedicationDue def_end rule_start rule_end");
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.starts_with("duplicate definition"));
        assert!(diags[0].message.contains("MedicationDue"));
        assert_eq!(diags[0].span.col, 37);
    }

    #[test]
    fn duplicate_across_kinds_and_rule_ids() {
        let diags = names(
            "def_start event x measure x: boolean def_end rule_start R when x then x R when x then x rule_end",
        );
        assert!(diags.iter().any(|d| d.message.starts_with("duplicate definition of `x`")));
        assert!(diags.iter().any(|d| d.message.starts_with("duplicate rule identifier `R`")));
    }

    #[test]
    fn wrong_kind_and_unknown_literal() {
        let diags = names(
            "def_start event A measure m: scale(L1, L2) def_end rule_start R when m and m > L9 then A rule_end",
        );
        assert_eq!(diags.len(), 2, "{diags:?}");
        assert!(diags[0].message.contains("is a measure, expected an event"));
        assert!(diags[1].message.contains("`L9`"));
        assert_eq!(diags[1].suggestion.as_deref(), Some("L1"));
    }

    #[test]
    fn order_independent() {
        let a = names(
            "def_start event Alpha event Beta measure gamma: boolean def_end
             rule_start R when Alpah and gama then Beat rule_end",
        );
        let b = names(
            "def_start measure gamma: boolean event Beta event Alpha def_end
             rule_start R when Alpah and gama then Beat rule_end",
        );
        let strip = |v: Vec<Diagnostic>| -> Vec<(String, Option<String>)> {
            let mut v: Vec<_> = v.into_iter().map(|d| (d.message, d.suggestion)).collect();
            v.sort();
            v
        };
        assert_eq!(strip(a), strip(b));
    }
}
