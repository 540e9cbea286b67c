//! Finite measure domains and condition evaluation.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::language::{CompareOp, Condition, MeasureType, Operand, Spec};

/// Numeric representatives are clamped to this magnitude.
pub const NUMERIC_CLAMP: i64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    /// Position of a scale literal in its declaration.
    Level(usize),
}

/// One value per measure of the spec, indexed like [`Spec::measures`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Valuation(pub Vec<Value>);

impl Valuation {
    pub fn get(&self, measure: usize) -> Value {
        self.0[measure]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeasureDomain {
    pub name: String,
    #[serde(skip)]
    pub values: Vec<Value>,
    /// Display names of `values`.
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbstractDomain {
    pub measures: Vec<MeasureDomain>,
}

impl AbstractDomain {
    pub fn label(&self, measure: usize, value: Value) -> &str {
        let d = &self.measures[measure];
        let i = d.values.iter().position(|v| *v == value).expect("value outside the abstract domain");
        &d.labels[i]
    }

    /// Looks a value up by its display name.
    pub fn parse_value(&self, measure: usize, label: &str) -> Option<Value> {
        let d = &self.measures[measure];
        d.labels.iter().position(|l| l == label).map(|i| d.values[i])
    }

    /// All valuations over `measures` (other measures keep their first
    /// value), in odometer order with the last listed measure varying fastest.
    pub fn valuations(&self, measures: &[usize]) -> Vec<Valuation> {
        let base: Vec<Value> = self.measures.iter().map(|d| d.values[0]).collect();
        let mut out = vec![Valuation(base)];
        for &m in measures {
            let mut next = Vec::with_capacity(out.len() * self.measures[m].values.len());
            for v in &out {
                for &x in &self.measures[m].values {
                    let mut w = v.clone();
                    w.0[m] = x;
                    next.push(w);
                }
            }
            out = next;
        }
        out
    }
}

fn threshold(spec: &Spec, v: &Operand) -> Option<i64> {
    match v {
        Operand::Int(n) => Some(*n),
        Operand::Name(n) => spec.constant(n.as_str()),
    }
}

/// One representative per maximal interval on which every threshold
/// comparison is constant.
pub fn numeric_representatives(thresholds: &BTreeSet<i64>) -> Vec<i64> {
    let ts: Vec<i64> = thresholds.iter().copied().collect();
    let Some((&first, &last)) = ts.first().zip(ts.last()) else {
        return vec![0];
    };
    let mut reps = vec![first.saturating_sub(1)];
    for (i, &t) in ts.iter().enumerate() {
        reps.push(t);
        if let Some(&next) = ts.get(i + 1) {
            if t + 1 < next {
                reps.push(t + 1);
            }
        }
    }
    reps.push(last.saturating_add(1));
    let mut clamped: Vec<i64> = reps.into_iter().map(|r| r.clamp(-NUMERIC_CLAMP, NUMERIC_CLAMP)).collect();
    clamped.dedup();
    clamped
}

/// Finite domain for every measure of `spec`: booleans and scales as
/// declared, numerics by threshold-interval representatives.
pub fn abstract_domains(spec: &Spec) -> AbstractDomain {
    let measures = spec
        .measures
        .iter()
        .map(|m| {
            let (values, labels): (Vec<Value>, Vec<String>) = match &m.mtype {
                MeasureType::Boolean => [false, true].iter().map(|&b| (Value::Bool(b), b.to_string())).unzip(),
                MeasureType::Scale(lits) => lits
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (Value::Level(i), l.name.clone()))
                    .unzip(),
                MeasureType::Numeric => {
                    let thresholds: BTreeSet<i64> = spec
                        .rules
                        .iter()
                        .flat_map(|r| r.conditions())
                        .flat_map(|c| c.comparisons())
                        .filter(|(name, _, _)| *name == &m.name)
                        .filter_map(|(_, _, v)| threshold(spec, v))
                        .collect();
                    numeric_representatives(&thresholds)
                        .into_iter()
                        .map(|n| (Value::Int(n), n.to_string()))
                        .unzip()
                }
            };
            MeasureDomain {
                name: m.name.name.clone(),
                values,
                labels,
            }
        })
        .collect();
    AbstractDomain { measures }
}

/// Truth of `cond` under `valuation`. Scale comparisons follow declaration
/// order. Names are assumed to resolve (the spec is type-checked).
pub fn evaluate_condition(spec: &Spec, cond: &Condition, valuation: &Valuation) -> bool {
    match cond {
        Condition::Atom(m) => {
            let i = spec.measure_index(m.as_str()).expect("unresolved measure");
            valuation.get(i) == Value::Bool(true)
        }
        Condition::Compare { measure, op, value } => {
            let i = spec.measure_index(measure.as_str()).expect("unresolved measure");
            compare(spec, i, *op, value, valuation.get(i))
        }
        Condition::Not(c) => !evaluate_condition(spec, c, valuation),
        Condition::And(a, b) => evaluate_condition(spec, a, valuation) && evaluate_condition(spec, b, valuation),
        Condition::Or(a, b) => evaluate_condition(spec, a, valuation) || evaluate_condition(spec, b, valuation),
    }
}

fn compare(spec: &Spec, measure: usize, op: CompareOp, rhs: &Operand, lhs: Value) -> bool {
    match (lhs, &spec.measures[measure].mtype) {
        (Value::Int(x), _) => threshold(spec, rhs).is_some_and(|t| op.apply(x, t)),
        (Value::Level(x), MeasureType::Scale(lits)) => {
            let Operand::Name(lit) = rhs else { return false };
            lits.iter().position(|l| l == lit).is_some_and(|t| op.apply(x, t))
        }
        _ => false,
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Level(i) => write!(f, "#{i}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::parse;
    use proptest::prelude::*;

    fn spec_with(defs: &str, cond: &str) -> Spec {
        parse(&format!(
            "def_start event A {defs} def_end rule_start R when A and {cond} then A rule_end"
        ))
        .unwrap()
    }

    #[test]
    fn scale_domain_is_declaration_order() {
        let s = spec_with("measure emergencyLevel: scale(L1, L2, L3, L4, L5)", "emergencyLevel > L4");
        let d = abstract_domains(&s);
        assert_eq!(d.measures[0].labels, ["L1", "L2", "L3", "L4", "L5"]);
    }

    #[test]
    fn boolean_domain() {
        let s = spec_with("measure b: boolean", "b");
        assert_eq!(abstract_domains(&s).measures[0].values, [Value::Bool(false), Value::Bool(true)]);
    }

    #[test]
    fn numeric_against_constant() {
        let s = spec_with("measure n: numeric constant k = 5", "n > k");
        let reps = &abstract_domains(&s).measures[0].values;
        assert_eq!(reps, &[Value::Int(4), Value::Int(5), Value::Int(6)]);
        // Each comparison against 5 is constant on (-inf,5), {5}, (5,inf).
        for op in [CompareOp::Lt, CompareOp::Gt, CompareOp::Le, CompareOp::Ge, CompareOp::Eq, CompareOp::Ne] {
            for (lo, hi, rep) in [(-20, 4, 4), (5, 5, 5), (6, 30, 6)] {
                for x in lo..=hi {
                    assert_eq!(op.apply(x, 5), op.apply(rep, 5));
                }
            }
        }
    }

    #[test]
    fn unconstrained_numeric() {
        let s = spec_with("measure n: numeric measure b: boolean", "b");
        assert_eq!(abstract_domains(&s).measures[0].values, [Value::Int(0)]);
    }

    #[test]
    fn strict_scale_comparison() {
        let s = spec_with("measure emergencyLevel: scale(L1, L2, L3)", "emergencyLevel < L2");
        let c = s.rules[0].trigger_condition.as_ref().unwrap();
        assert!(evaluate_condition(&s, c, &Valuation(vec![Value::Level(0)])));
        assert!(!evaluate_condition(&s, c, &Valuation(vec![Value::Level(1)])));
    }

    #[test]
    fn truth_table() {
        let s = spec_with("measure a: boolean measure b: boolean", "a and not b");
        let c = s.rules[0].trigger_condition.as_ref().unwrap();
        for (a, b, expected) in [(false, false, false), (false, true, false), (true, false, true), (true, true, false)] {
            let v = Valuation(vec![Value::Bool(a), Value::Bool(b)]);
            assert_eq!(evaluate_condition(&s, c, &v), expected, "a={a} b={b}");
        }
    }

    #[test]
    fn odometer_order() {
        let s = spec_with("measure a: boolean measure l: scale(X, Y, Z)", "a and l = X");
        let d = abstract_domains(&s);
        let vals = d.valuations(&[0, 1]);
        assert_eq!(vals.len(), 6);
        assert_eq!(vals[1].0, vec![Value::Bool(false), Value::Level(1)]);
        assert_eq!(vals[3].0, vec![Value::Bool(true), Value::Level(0)]);
        assert_eq!(d.valuations(&[]).len(), 1);
    }

    fn ops() -> impl Strategy<Value = CompareOp> {
        prop::sample::select(vec![
            CompareOp::Lt,
            CompareOp::Gt,
            CompareOp::Le,
            CompareOp::Ge,
            CompareOp::Eq,
            CompareOp::Ne,
        ])
    }

    proptest! {
        /// Every concrete integer agrees with some representative on all
        /// comparisons, and every representative's truth vector is realised
        /// by the integers of its own interval.
        #[test]
        fn numeric_abstraction_is_exact(
            cmps in prop::collection::vec((ops(), -50i64..50), 1..5)
        ) {
            let thresholds: BTreeSet<i64> = cmps.iter().map(|(_, t)| *t).collect();
            let reps = numeric_representatives(&thresholds);
            let truth = |x: i64| cmps.iter().map(|(op, t)| op.apply(x, *t)).collect::<Vec<_>>();
            let rep_truths: Vec<_> = reps.iter().map(|&r| truth(r)).collect();
            for x in -60..60 {
                prop_assert!(rep_truths.contains(&truth(x)), "x={x} reps={reps:?}");
            }
            // Distinct intervals are separated by a threshold, so no two
            // representatives share an interval.
            for w in reps.windows(2) {
                prop_assert!(thresholds.range(w[0]..=w[1]).next().is_some());
            }
        }
    }
}
