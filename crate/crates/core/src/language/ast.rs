//! Typed syntax tree for SLEEC documents.
//!
//! Identifiers carry their source span, but equality ignores spans so that a
//! re-parsed document compares equal to the original.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::diagnostic::Span;

/// An identifier together with the place it was written.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Ident {
    pub name: String,
    #[serde(skip)]
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            span: Span::default(),
        }
    }

    pub fn spanned(name: impl Into<String>, span: Span) -> Self {
        Self {
            name: name.into(),
            span,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.name
    }
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for Ident {}

impl Hash for Ident {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A parsed SLEEC document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Spec {
    pub events: Vec<EventDef>,
    pub measures: Vec<MeasureDef>,
    pub constants: Vec<ConstantDef>,
    pub rules: Vec<Rule>,
    /// Locations of definitions and rules, keyed by [`NodeId`].
    #[serde(skip)]
    pub source_spans: BTreeMap<NodeId, Span>,
}

impl PartialEq for Spec {
    fn eq(&self, other: &Self) -> bool {
        self.events == other.events
            && self.measures == other.measures
            && self.constants == other.constants
            && self.rules == other.rules
    }
}

impl Eq for Spec {}

/// Key into [`Spec::source_spans`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Event(usize),
    Measure(usize),
    Constant(usize),
    Rule(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDef {
    pub name: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureDef {
    pub name: Ident,
    pub mtype: MeasureType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureType {
    Boolean,
    Numeric,
    /// Ordered literals; declaration order is the comparison order.
    Scale(Vec<Ident>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantDef {
    pub name: Ident,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: Ident,
    pub trigger_event: Ident,
    pub trigger_condition: Option<Condition>,
    pub response: Response,
    pub defeaters: Vec<Defeater>,
}

impl Rule {
    /// Every condition attached to the rule: the trigger guard first, then
    /// defeater conditions in source order.
    pub fn conditions(&self) -> impl Iterator<Item = &Condition> {
        self.trigger_condition
            .iter()
            .chain(self.defeaters.iter().map(|d| &d.condition))
    }

    /// Every response the rule can produce.
    pub fn responses(&self) -> impl Iterator<Item = &Response> {
        std::iter::once(&self.response).chain(self.defeaters.iter().filter_map(|d| d.response.as_ref()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Must,
    MustNot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub polarity: Polarity,
    pub event: Ident,
    pub deadline: Option<TimeValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Defeater {
    pub condition: Condition,
    /// `None` cancels the obligation altogether.
    pub response: Option<Response>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<>")]
    Ne,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
            CompareOp::Le => "<=",
            CompareOp::Ge => ">=",
            CompareOp::Eq => "=",
            CompareOp::Ne => "<>",
        }
    }

    pub fn apply<T: Ord>(self, lhs: T, rhs: T) -> bool {
        match self {
            CompareOp::Lt => lhs < rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::Le => lhs <= rhs,
            CompareOp::Ge => lhs >= rhs,
            CompareOp::Eq => lhs == rhs,
            CompareOp::Ne => lhs != rhs,
        }
    }
}

/// Right-hand side of a comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operand {
    Int(i64),
    /// A constant name or a scale literal; resolved during type checking.
    Name(Ident),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Int(v) => write!(f, "{v}"),
            Operand::Name(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// A boolean measure used as a proposition.
    Atom(Ident),
    Compare {
        measure: Ident,
        op: CompareOp,
        value: Operand,
    },
    Not(Box<Condition>),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
}

impl Condition {
    /// Measure names referenced by the condition, in left-to-right order.
    pub fn measures(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        self.collect_measures(&mut out);
        out
    }

    fn collect_measures<'a>(&'a self, out: &mut Vec<&'a Ident>) {
        match self {
            Condition::Atom(m) => out.push(m),
            Condition::Compare { measure, .. } => out.push(measure),
            Condition::Not(c) => c.collect_measures(out),
            Condition::And(a, b) | Condition::Or(a, b) => {
                a.collect_measures(out);
                b.collect_measures(out);
            }
        }
    }

    /// All comparisons in the condition.
    pub fn comparisons(&self) -> Vec<(&Ident, CompareOp, &Operand)> {
        let mut out = Vec::new();
        self.visit(&mut |c| {
            if let Condition::Compare { measure, op, value } = c {
                out.push((measure, *op, value));
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Condition)) {
        f(self);
        match self {
            Condition::Not(c) => c.visit(f),
            Condition::And(a, b) | Condition::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Seconds,
    Minutes,
    Hours,
    Days,
}

impl TimeUnit {
    pub fn seconds(self) -> u64 {
        match self {
            TimeUnit::Seconds => 1,
            TimeUnit::Minutes => 60,
            TimeUnit::Hours => 3_600,
            TimeUnit::Days => 86_400,
        }
    }

    pub fn keyword(self, amount: u64) -> &'static str {
        match (self, amount == 1) {
            (TimeUnit::Seconds, true) => "second",
            (TimeUnit::Seconds, false) => "seconds",
            (TimeUnit::Minutes, true) => "minute",
            (TimeUnit::Minutes, false) => "minutes",
            (TimeUnit::Hours, true) => "hour",
            (TimeUnit::Hours, false) => "hours",
            (TimeUnit::Days, true) => "day",
            (TimeUnit::Days, false) => "days",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeValue {
    pub amount: u64,
    pub unit: TimeUnit,
}

impl fmt::Display for TimeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.amount, self.unit.keyword(self.amount))
    }
}

impl Spec {
    pub fn event(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.name.name == name)
    }

    pub fn measure(&self, name: &str) -> Option<&MeasureDef> {
        self.measures.iter().find(|m| m.name.name == name)
    }

    pub fn measure_index(&self, name: &str) -> Option<usize> {
        self.measures.iter().position(|m| m.name.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<i64> {
        self.constants.iter().find(|c| c.name.name == name).map(|c| c.value)
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id.name == id)
    }

    /// A copy of the document keeping only the rules selected by `keep`.
    /// Definitions are preserved unchanged.
    pub fn with_rules(&self, keep: impl Fn(usize, &Rule) -> bool) -> Spec {
        let mut out = Spec {
            events: self.events.clone(),
            measures: self.measures.clone(),
            constants: self.constants.clone(),
            rules: Vec::new(),
            source_spans: BTreeMap::new(),
        };
        for (i, r) in self.rules.iter().enumerate() {
            if keep(i, r) {
                out.rules.push(r.clone());
            }
        }
        out
    }
}
