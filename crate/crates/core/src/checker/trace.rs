use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::semantics::{IdSet, Model, RoundLog, Valuation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEntry {
    /// `round` 0 is the environment; later rounds are the agent's responses.
    Event { name: String, round: u32 },
    MeasureObs { measure: String, value: String },
    Tock,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn tocks(&self) -> usize {
        self.entries.iter().filter(|e| **e == TraceEntry::Tock).count()
    }
}

/// Renders `<e1, e2, …>`. With `elide_tocks`, runs of more than three
/// tocks collapse to `tock, ..., tock`.
pub fn format_trace(trace: &Trace, elide_tocks: bool) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < trace.entries.len() {
        match &trace.entries[i] {
            TraceEntry::Tock => {
                let run = trace.entries[i..].iter().take_while(|e| **e == TraceEntry::Tock).count();
                if elide_tocks && run > 3 {
                    parts.extend(["tock", "...", "tock"].map(String::from));
                } else {
                    parts.extend(std::iter::repeat_n("tock".to_string(), run));
                }
                i += run;
            }
            TraceEntry::Event { name, .. } => {
                parts.push(name.clone());
                i += 1;
            }
            TraceEntry::MeasureObs { measure, value } => {
                parts.push(format!("{measure}.{value}"));
                i += 1;
            }
        }
    }
    format!("<{}>", parts.join(", "))
}

/// Accumulates a witness instant by instant. Each measure read by a
/// triggered rule is reported once per instant, right after the events of
/// the round that first read it.
pub(crate) struct TraceBuilder<'m> {
    model: &'m Model<'m>,
    pub trace: Trace,
    pub scenario: BTreeMap<String, String>,
    observed: Vec<usize>,
}

impl<'m> TraceBuilder<'m> {
    pub fn new(model: &'m Model<'m>) -> Self {
        TraceBuilder {
            model,
            trace: Trace::default(),
            scenario: BTreeMap::new(),
            observed: Vec::new(),
        }
    }

    pub fn round(&mut self, log: &RoundLog, valuation: &Valuation) {
        for e in log.events.iter() {
            self.trace.entries.push(TraceEntry::Event {
                name: self.model.event_name(e).to_string(),
                round: log.round,
            });
        }
        for m in self.model.measures_read(log.triggered) {
            if self.observed.contains(&m) {
                continue;
            }
            self.observed.push(m);
            let measure = self.model.measure_name(m).to_string();
            let value = self.model.domain.label(m, valuation.get(m)).to_string();
            self.scenario.entry(measure.clone()).or_insert_with(|| value.clone());
            self.trace.entries.push(TraceEntry::MeasureObs { measure, value });
        }
    }

    pub fn tock(&mut self) {
        self.observed.clear();
        self.trace.entries.push(TraceEntry::Tock);
    }
}

/// Keeps rounds up to and including the first one that repeats the event
/// set of an earlier round: one unrolled cycle of a cascade.
pub(crate) fn first_cycle(logs: &[RoundLog]) -> &[RoundLog] {
    let mut seen: Vec<IdSet> = Vec::new();
    for (i, l) in logs.iter().enumerate() {
        if seen.contains(&l.events) {
            return &logs[..=i];
        }
        seen.push(l.events);
    }
    logs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(name: &str) -> TraceEntry {
        TraceEntry::Event {
            name: name.into(),
            round: 0,
        }
    }

    #[test]
    fn golden_r1_r2_trace() {
        let t = Trace {
            entries: vec![
                ev("DetectUserFallen"),
                TraceEntry::MeasureObs {
                    measure: "emergencyLevel".into(),
                    value: "L1".into(),
                },
                TraceEntry::Tock,
                TraceEntry::Tock,
            ],
        };
        assert_eq!(format_trace(&t, true), "<DetectUserFallen, emergencyLevel.L1, tock, tock>");
    }

    #[test]
    fn empty_trace() {
        assert_eq!(format_trace(&Trace::default(), true), "<>");
    }

    #[test]
    fn tock_elision() {
        let five = Trace {
            entries: vec![TraceEntry::Tock; 5],
        };
        assert_eq!(format_trace(&five, true), "<tock, ..., tock>");
        assert_eq!(format_trace(&five, false), "<tock, tock, tock, tock, tock>");
        let three = Trace {
            entries: vec![TraceEntry::Tock; 3],
        };
        assert_eq!(format_trace(&three, true), "<tock, tock, tock>");
        let mixed = Trace {
            entries: [vec![ev("A")], vec![TraceEntry::Tock; 4], vec![ev("B")]].concat(),
        };
        assert_eq!(format_trace(&mixed, true), "<A, tock, ..., tock, B>");
    }

    #[test]
    fn entries_serialize_tagged() {
        let t = Trace {
            entries: vec![ev("A"), TraceEntry::Tock],
        };
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"[{"event":{"name":"A","round":0}},"tock"]"#);
        assert_eq!(serde_json::from_str::<Trace>(&json).unwrap(), t);
    }
}
