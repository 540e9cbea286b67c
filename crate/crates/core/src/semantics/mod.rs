//! Discrete-time obligation model compiled from a checked [`Spec`].
//!
//! Time advances in ticks. Within one tick (an *instant*) events happen in
//! rounds: round 0 holds the environment's trigger events, round 1 the
//! agent's responses that are due or that it chooses to perform early, and
//! every later round the immediate responses demanded by the round before.
//! An occurrence discharges `Must` obligations created in earlier rounds; a
//! `MustNot` applies from the round after its creation up to and including
//! its deadline tick.
//!
//! Each rule behaves as a sequential process: while it still owns an active
//! obligation it ignores further occurrences of its trigger.

mod config;
mod domain;
mod idset;
mod ticks;

pub use config::{Clash, Configuration, InstantEnd, Obligation, RoundLog, StateKey};
pub use domain::{
    abstract_domains, evaluate_condition, numeric_representatives, AbstractDomain, MeasureDomain, Valuation,
    Value, NUMERIC_CLAMP,
};
pub use idset::IdSet;
pub use ticks::{tick_scale, TickScale, MAX_DEADLINE_TICKS};

use thiserror::Error;

use crate::language::{Polarity, Response, Rule, Spec, TimeUnit, TimeValue};

/// A tick index.
pub type Tick = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error(
        "deadline `{deadline}` is more than {max} {unit}; use a coarser unit",
        max = MAX_DEADLINE_TICKS,
        unit = base_unit.keyword(2)
    )]
    DeadlineOverflow { deadline: TimeValue, base_unit: TimeUnit },
    #[error("too many {what} ({count}); at most {max} are supported", max = IdSet::CAPACITY)]
    TooLarge { what: &'static str, count: usize },
    #[error("unresolved name `{0}`")]
    Unresolved(String),
}

/// A response resolved to indices and ticks. `ticks == 0` is immediate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Demand {
    pub polarity: Polarity,
    pub event: usize,
    pub ticks: Tick,
}

/// What a triggered rule requires under a given valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    /// The trigger condition is false.
    Inactive,
    /// A response-less defeater holds.
    Cancelled,
    Respond(Demand),
}

/// Events and measure values observed at one instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldStep {
    pub fired_events: IdSet,
    pub valuation: Valuation,
}

#[derive(Debug, Clone)]
struct CompiledRule {
    trigger: usize,
    base: Demand,
    defeaters: Vec<Option<Demand>>,
    reads: Vec<usize>,
}

/// A spec compiled for exploration: tick scale, domains, and rules resolved
/// to event and measure indices.
#[derive(Debug, Clone)]
pub struct Model<'s> {
    pub spec: &'s Spec,
    pub ticks: TickScale,
    pub domain: AbstractDomain,
    rules: Vec<CompiledRule>,
    triggered_by: Vec<Vec<usize>>,
}

impl<'s> Model<'s> {
    pub fn new(spec: &'s Spec) -> Result<Self, SemanticsError> {
        if spec.events.len() > IdSet::CAPACITY {
            return Err(SemanticsError::TooLarge {
                what: "events",
                count: spec.events.len(),
            });
        }
        if spec.rules.len() > IdSet::CAPACITY {
            return Err(SemanticsError::TooLarge {
                what: "rules",
                count: spec.rules.len(),
            });
        }
        let ticks = tick_scale(spec)?;
        let domain = abstract_domains(spec);
        let event = |name: &str| spec.event(name).ok_or_else(|| SemanticsError::Unresolved(name.to_string()));
        let demand = |r: &Response| -> Result<Demand, SemanticsError> {
            Ok(Demand {
                polarity: r.polarity,
                event: event(r.event.as_str())?,
                ticks: r.deadline.map(|d| ticks.ticks(d)).transpose()?.unwrap_or(0),
            })
        };
        let mut rules = Vec::with_capacity(spec.rules.len());
        let mut triggered_by = vec![Vec::new(); spec.events.len()];
        for (i, rule) in spec.rules.iter().enumerate() {
            let trigger = event(rule.trigger_event.as_str())?;
            triggered_by[trigger].push(i);
            let mut reads = Vec::new();
            for cond in rule.conditions() {
                for m in cond.measures() {
                    let idx = spec
                        .measure_index(m.as_str())
                        .ok_or_else(|| SemanticsError::Unresolved(m.name.clone()))?;
                    if !reads.contains(&idx) {
                        reads.push(idx);
                    }
                }
            }
            reads.sort_unstable();
            rules.push(CompiledRule {
                trigger,
                base: demand(&rule.response)?,
                defeaters: rule
                    .defeaters
                    .iter()
                    .map(|d| d.response.as_ref().map(demand).transpose())
                    .collect::<Result<_, _>>()?,
                reads,
            });
        }
        Ok(Model {
            spec,
            ticks,
            domain,
            rules,
            triggered_by,
        })
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn trigger(&self, rule: usize) -> usize {
        self.rules[rule].trigger
    }

    /// Rules whose trigger is `event`, in definition order.
    pub fn triggered_by(&self, event: usize) -> &[usize] {
        &self.triggered_by[event]
    }

    /// Measures read by the rule's trigger condition and defeaters.
    pub fn reads(&self, rule: usize) -> &[usize] {
        &self.rules[rule].reads
    }

    /// Every response the rule can demand: the base response then defeaters'.
    pub fn demands(&self, rule: usize) -> impl Iterator<Item = Demand> + '_ {
        let r = &self.rules[rule];
        std::iter::once(r.base).chain(r.defeaters.iter().flatten().copied())
    }

    /// Measures read by any rule in `rules`, ascending.
    pub fn measures_read(&self, rules: IdSet) -> Vec<usize> {
        let mut out: Vec<usize> = rules.iter().flat_map(|r| self.rules[r].reads.iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Trigger events of `rules`.
    pub fn triggers(&self, rules: IdSet) -> IdSet {
        rules.iter().map(|r| self.rules[r].trigger).collect()
    }

    /// Outcome of triggering `rule` under `valuation`: the last defeater
    /// whose condition holds decides, otherwise the base response.
    pub fn resolve(&self, rule: usize, valuation: &Valuation) -> Activation {
        let ast = &self.spec.rules[rule];
        let compiled = &self.rules[rule];
        if let Some(c) = &ast.trigger_condition {
            if !evaluate_condition(self.spec, c, valuation) {
                return Activation::Inactive;
            }
        }
        let winner = ast
            .defeaters
            .iter()
            .zip(&compiled.defeaters)
            .rev()
            .find(|(d, _)| evaluate_condition(self.spec, &d.condition, valuation));
        match winner {
            Some((_, None)) => Activation::Cancelled,
            Some((_, Some(d))) => Activation::Respond(*d),
            None => Activation::Respond(compiled.base),
        }
    }

    /// The obligation `rule` creates at `clock` given what happened in
    /// `step`, if any.
    pub fn activate(&self, rule: &Rule, step: &WorldStep, clock: Tick) -> Option<Obligation> {
        let idx = self.spec.rules.iter().position(|r| r.id == rule.id)?;
        if !step.fired_events.contains(self.rules[idx].trigger) {
            return None;
        }
        match self.resolve(idx, &step.valuation) {
            Activation::Respond(d) => Some(Obligation::new(idx, d, clock, 0)),
            Activation::Inactive | Activation::Cancelled => None,
        }
    }

    pub fn event_name(&self, event: usize) -> &str {
        self.spec.events[event].name.as_str()
    }

    pub fn rule_id(&self, rule: usize) -> &str {
        self.spec.rules[rule].id.as_str()
    }

    pub fn measure_name(&self, measure: usize) -> &str {
        self.spec.measures[measure].name.as_str()
    }

    /// Builds a valuation from `(measure, label)` pairs; unlisted measures
    /// take their first abstract value.
    pub fn valuation(&self, values: &[(&str, &str)]) -> Option<Valuation> {
        let mut v = self.domain.valuations(&[]).pop()?;
        for (m, label) in values {
            let i = self.spec.measure_index(m)?;
            v.0[i] = self.domain.parse_value(i, label)?;
        }
        Some(v)
    }

    /// Convenience constructor for a [`WorldStep`] by names.
    pub fn step(&self, events: &[&str], values: &[(&str, &str)]) -> Option<WorldStep> {
        let fired_events = events.iter().map(|e| self.spec.event(e)).collect::<Option<IdSet>>()?;
        Some(WorldStep {
            fired_events,
            valuation: self.valuation(values)?,
        })
    }
}
