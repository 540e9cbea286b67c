use std::collections::BTreeSet;

use super::{Activation, Demand, IdSet, Model, Tick};
use crate::language::Polarity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Obligation {
    /// Index into the spec's rules.
    pub rule: usize,
    pub polarity: Polarity,
    /// Index into the spec's events.
    pub event: usize,
    pub activated_at: Tick,
    pub deadline_at: Tick,
    /// Round of `activated_at` in which the obligation was created.
    pub round: u32,
}

impl Obligation {
    pub fn new(rule: usize, d: Demand, clock: Tick, round: u32) -> Self {
        Obligation {
            rule,
            polarity: d.polarity,
            event: d.event,
            activated_at: clock,
            deadline_at: clock + d.ticks,
            round,
        }
    }
}

/// Events that are simultaneously due and prohibited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clash {
    pub round: u32,
    pub events: IdSet,
    /// Owners of the clashing `Must` and `MustNot` obligations.
    pub rules: IdSet,
}

/// Occurrences of one round and the rules they triggered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundLog {
    pub round: u32,
    pub events: IdSet,
    pub triggered: IdSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstantEnd {
    /// No further occurrences are demanded this instant.
    Quiescent,
    Deadlock(Clash),
    /// The cascade of immediate responses exceeded the cap.
    Divergence { round: u32 },
}

/// Active obligations at a point in time.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub clock: Tick,
    pub active: BTreeSet<Obligation>,
    /// Last round reached in the current instant.
    pub instantaneous_depth: u32,
}

/// Clock plus obligations without creation details, which stop mattering
/// once their instant has passed.
pub type StateKey = (Tick, Vec<(usize, Polarity, usize, Tick)>);

impl Configuration {
    pub fn new() -> Self {
        Self::default()
    }

    /// Whether an occurrence in `round` of the current instant sees `o`.
    fn live(&self, o: &Obligation, round: u32) -> bool {
        o.activated_at < self.clock || o.round < round
    }

    /// Moves to `clock` and drops obligations whose window has closed.
    pub fn begin_instant(&mut self, clock: Tick) {
        debug_assert!(clock >= self.clock);
        self.clock = clock;
        self.instantaneous_depth = 0;
        self.active.retain(|o| o.deadline_at >= clock);
    }

    fn select(&self, round: u32, rules: IdSet, pred: impl Fn(&Obligation) -> bool) -> IdSet {
        self.active
            .iter()
            .filter(|o| rules.contains(o.rule) && self.live(o, round) && pred(o))
            .map(|o| o.event)
            .collect()
    }

    /// `Must` events due now that an occurrence in `round` would discharge.
    pub fn forced(&self, round: u32, rules: IdSet) -> IdSet {
        self.select(round, rules, |o| o.polarity == Polarity::Must && o.deadline_at == self.clock)
    }

    /// Events the agent may not perform in `round`.
    pub fn prohibited(&self, round: u32, rules: IdSet) -> IdSet {
        self.select(round, rules, |o| o.polarity == Polarity::MustNot)
    }

    /// `Must` events of earlier instants or round 0 that are not yet due.
    pub fn deferrable(&self, rules: IdSet) -> IdSet {
        self.select(1, rules, |o| o.polarity == Polarity::Must && o.deadline_at > self.clock)
    }

    /// Clash between the occurrences demanded in `round` and the
    /// prohibitions in force.
    pub fn clash(&self, occurring: IdSet, round: u32, rules: IdSet) -> Option<Clash> {
        let events = occurring.intersection(self.prohibited(round, rules));
        if events.is_empty() {
            return None;
        }
        let owners = self
            .active
            .iter()
            .filter(|o| rules.contains(o.rule) && self.live(o, round) && events.contains(o.event))
            .filter(|o| o.polarity == Polarity::MustNot || o.deadline_at == self.clock)
            .map(|o| o.rule)
            .collect();
        Some(Clash {
            round,
            events,
            rules: owners,
        })
    }

    /// Performs `events` in `round`: discharges the `Must` obligations they
    /// meet, then triggers the rules in `rules` listening to them, except
    /// rules still owning an obligation. Returns the triggered rules.
    pub fn occur(
        &mut self,
        model: &Model,
        events: IdSet,
        round: u32,
        rules: IdSet,
        activation: &impl Fn(usize) -> Activation,
    ) -> IdSet {
        let clock = self.clock;
        self.active.retain(|o| {
            let live = o.activated_at < clock || o.round < round;
            !(o.polarity == Polarity::Must && live && events.contains(o.event))
        });
        let busy: IdSet = self.active.iter().map(|o| o.rule).collect();
        let mut triggered = IdSet::empty();
        for e in events.iter() {
            for &r in model.triggered_by(e) {
                if !rules.contains(r) || busy.contains(r) {
                    continue;
                }
                triggered.insert(r);
                if let Activation::Respond(d) = activation(r) {
                    self.active.insert(Obligation::new(r, d, clock, round));
                }
            }
        }
        self.instantaneous_depth = round;
        triggered
    }

    /// Runs rounds 1, 2, … of the current instant. Round 1 performs the
    /// due events plus `choice`; each later round performs the immediate
    /// responses of the one before. Stops when nothing more is demanded, on
    /// a clash, or when a round beyond `cascade_cap` would be needed.
    pub fn settle(
        &mut self,
        model: &Model,
        choice: IdSet,
        rules: IdSet,
        cascade_cap: u32,
        activation: &impl Fn(usize) -> Activation,
        mut log: Option<&mut Vec<RoundLog>>,
    ) -> InstantEnd {
        let mut round = 1;
        let mut occurring = self.forced(1, rules).union(choice);
        loop {
            if occurring.is_empty() {
                return InstantEnd::Quiescent;
            }
            if let Some(c) = self.clash(occurring, round, rules) {
                return InstantEnd::Deadlock(c);
            }
            if round > cascade_cap {
                return InstantEnd::Divergence { round };
            }
            let triggered = self.occur(model, occurring, round, rules, activation);
            if let Some(log) = log.as_deref_mut() {
                log.push(RoundLog {
                    round,
                    events: occurring,
                    triggered,
                });
            }
            round += 1;
            occurring = self.forced(round, rules);
        }
    }

    pub fn key(&self) -> StateKey {
        (
            self.clock,
            self.active.iter().map(|o| (o.rule, o.polarity, o.event, o.deadline_at)).collect(),
        )
    }
}
