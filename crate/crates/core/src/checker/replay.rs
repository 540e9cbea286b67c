//! Re-executes a deadlock witness on the semantic model, independently of
//! the search that produced it.

use serde::Serialize;
use thiserror::Error;

use super::trace::{Trace, TraceEntry};
use crate::language::Spec;
use crate::semantics::{Configuration, IdSet, Model, SemanticsError, Tick};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("unknown {0} `{1}`")]
    Unknown(&'static str, String),
    #[error("tick {tick}: rounds out of order at `{event}`")]
    RoundOrder { tick: Tick, event: String },
    #[error("tick {tick} round {round}: occurrences do not comply with the rules")]
    NonCompliant { tick: Tick, round: u32 },
    #[error("tick {tick}: responses still demanded before the next tock")]
    Unsettled { tick: Tick },
    #[error("the trace ends in a satisfiable state")]
    NoClash,
}

/// The jointly unsatisfiable state a witness leads to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayOutcome {
    pub tick: Tick,
    pub round: u32,
    pub events: Vec<String>,
    pub rules: Vec<String>,
}

struct Instant {
    rounds: Vec<(u32, IdSet)>,
    observed: Vec<(usize, String)>,
}

fn split(model: &Model, trace: &Trace) -> Result<Vec<Instant>, ReplayError> {
    let mut instants = vec![Instant {
        rounds: Vec::new(),
        observed: Vec::new(),
    }];
    for entry in &trace.entries {
        let current = instants.last_mut().expect("never empty");
        match entry {
            TraceEntry::Tock => instants.push(Instant {
                rounds: Vec::new(),
                observed: Vec::new(),
            }),
            TraceEntry::Event { name, round } => {
                let e = model
                    .spec
                    .event(name)
                    .ok_or_else(|| ReplayError::Unknown("event", name.clone()))?;
                match current.rounds.last_mut() {
                    Some((r, set)) if r == round => set.insert(e),
                    Some((r, _)) if *r > *round => {
                        return Err(ReplayError::RoundOrder {
                            tick: (instants.len() - 1) as Tick,
                            event: name.clone(),
                        })
                    }
                    _ => current.rounds.push((*round, IdSet::single(e))),
                }
            }
            TraceEntry::MeasureObs { measure, value } => {
                let m = model
                    .spec
                    .measure_index(measure)
                    .ok_or_else(|| ReplayError::Unknown("measure", measure.clone()))?;
                current.observed.push((m, value.clone()));
            }
        }
    }
    Ok(instants)
}

/// Replays `trace` against the rules `rule_ids` of `spec`, checking that
/// every recorded round complies with them, and returns the clash reached
/// by the round right after the trace ends.
pub fn replay_deadlock(
    spec: &Spec,
    rule_ids: &[String],
    trace: &Trace,
    cascade_cap: u32,
) -> Result<ReplayOutcome, ReplayError> {
    let model = Model::new(spec)?;
    let mut rules = IdSet::empty();
    for id in rule_ids {
        let i = spec
            .rules
            .iter()
            .position(|r| r.id.as_str() == id)
            .ok_or_else(|| ReplayError::Unknown("rule", id.clone()))?;
        rules.insert(i);
    }
    let instants = split(&model, trace)?;
    let last = instants.len() - 1;
    let mut config = Configuration::new();
    for (t, instant) in instants.iter().enumerate() {
        let tick = t as Tick;
        let mut valuation = model.valuation(&[]).expect("default valuation");
        for (m, label) in &instant.observed {
            valuation.0[*m] = model
                .domain
                .parse_value(*m, label)
                .ok_or_else(|| ReplayError::Unknown("value", label.clone()))?;
        }
        let act = |r: usize| model.resolve(r, &valuation);
        config.begin_instant(tick);
        let mut next_round = 0;
        for &(round, events) in &instant.rounds {
            if round != next_round && !(next_round == 0 && round == 1) {
                return Err(ReplayError::NonCompliant { tick, round });
            }
            if round > 0 {
                let forced = config.forced(round, rules);
                let allowed = if round == 1 {
                    config.deferrable(rules).union(forced)
                } else {
                    forced
                };
                let ok = forced.is_subset(events)
                    && events.is_subset(allowed)
                    && config.clash(events, round, rules).is_none()
                    && round <= cascade_cap;
                if !ok {
                    return Err(ReplayError::NonCompliant { tick, round });
                }
            }
            config.occur(&model, events, round, rules, &act);
            next_round = round + 1;
        }
        let pending_round = next_round.max(1);
        let due = config.forced(pending_round, rules);
        if t < last {
            if !due.is_empty() {
                return Err(ReplayError::Unsettled { tick });
            }
            continue;
        }
        let clash = config.clash(due, pending_round, rules).ok_or(ReplayError::NoClash)?;
        return Ok(ReplayOutcome {
            tick,
            round: pending_round,
            events: clash.events.iter().map(|e| model.event_name(e).to_string()).collect(),
            rules: clash.rules.iter().map(|r| model.rule_id(r).to_string()).collect(),
        });
    }
    unreachable!("split yields at least one instant")
}
