//! Environment choices and instant execution shared by the searches.

use super::trace::{first_cycle, TraceBuilder};
use super::CheckConfig;
use crate::semantics::{Activation, Clash, Configuration, IdSet, InstantEnd, Model, RoundLog, Tick, Valuation};

/// Valuations that make every rule in scope behave the same way.
/// The representative is the first such valuation in odometer order.
pub(crate) struct Class {
    pub valuation: Valuation,
    acts: Vec<Activation>,
}

impl Class {
    pub fn act(&self, rule: usize) -> Activation {
        self.acts[rule]
    }
}

/// The rules under analysis together with the environment's options.
pub(crate) struct Scope<'m> {
    pub model: &'m Model<'m>,
    pub rules: IdSet,
    pub env_events: Vec<IdSet>,
    pub classes: Vec<Class>,
    pub horizon: Tick,
    pub cascade_cap: u32,
}

/// One instant's choices: environment events, measure class, agent choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Move {
    pub events: IdSet,
    pub class: usize,
    pub choice: IdSet,
}

impl<'m> Scope<'m> {
    pub fn new(model: &'m Model<'m>, rules: IdSet, cfg: &CheckConfig) -> Self {
        Self::with_triggers(model, rules, model.triggers(rules), cfg)
    }

    /// Like [`Scope::new`] but lets the environment fire `triggers`, which
    /// may include events no rule in `rules` listens to.
    pub fn with_triggers(model: &'m Model<'m>, rules: IdSet, triggers: IdSet, cfg: &CheckConfig) -> Self {
        let measures = model.measures_read(rules);
        let mut classes: Vec<Class> = Vec::new();
        for valuation in model.domain.valuations(&measures) {
            let acts: Vec<Activation> = (0..model.rule_count())
                .map(|r| {
                    if rules.contains(r) {
                        model.resolve(r, &valuation)
                    } else {
                        Activation::Inactive
                    }
                })
                .collect();
            if !classes.iter().any(|c| c.acts == acts) {
                classes.push(Class { valuation, acts });
            }
        }
        Scope {
            model,
            rules,
            env_events: triggers.subsets_up_to(cfg.max_env_events_per_instant),
            classes,
            horizon: cfg.horizon_ticks,
            cascade_cap: cfg.cascade_cap,
        }
    }

    pub fn env_choices(&self) -> impl Iterator<Item = (IdSet, usize)> + '_ {
        self.env_events
            .iter()
            .flat_map(move |&e| (0..self.classes.len()).map(move |c| (e, c)))
    }

    /// Starts instant `t` from `state` and performs the environment's round.
    pub fn open(&self, state: &Configuration, t: Tick, events: IdSet, class: usize) -> (Configuration, IdSet) {
        let mut c = state.clone();
        c.begin_instant(t);
        let cl = &self.classes[class];
        let triggered = c.occur(self.model, events, 0, self.rules, &|r| cl.act(r));
        (c, triggered)
    }

    /// What the agent may add in round 1, or the clash that makes every
    /// choice fail.
    pub fn agent_options(&self, c: &Configuration) -> Result<Vec<IdSet>, Clash> {
        let forced = c.forced(1, self.rules);
        if let Some(clash) = c.clash(forced, 1, self.rules) {
            return Err(clash);
        }
        let free = c
            .deferrable(self.rules)
            .difference(c.prohibited(1, self.rules))
            .difference(forced);
        Ok(free.subsets())
    }

    pub fn settle(&self, c: &mut Configuration, class: usize, choice: IdSet, log: Option<&mut Vec<RoundLog>>) -> InstantEnd {
        let cl = &self.classes[class];
        c.settle(self.model, choice, self.rules, self.cascade_cap, &|r| cl.act(r), log)
    }

    /// Replays `moves` from the empty configuration, recording the trace.
    /// The last move's instant is recorded up to (not including) the round
    /// that fails, or through one cycle if it diverges.
    pub fn record(&self, moves: &[Move]) -> (TraceBuilder<'m>, InstantEnd) {
        let mut tb = TraceBuilder::new(self.model);
        let mut state = Configuration::new();
        let mut end = InstantEnd::Quiescent;
        for (t, mv) in moves.iter().enumerate() {
            if t > 0 {
                tb.tock();
            }
            let (mut c, triggered) = self.open(&state, t as Tick, mv.events, mv.class);
            let valuation = &self.classes[mv.class].valuation;
            let mut logs = vec![RoundLog {
                round: 0,
                events: mv.events,
                triggered,
            }];
            end = self.settle(&mut c, mv.class, mv.choice, Some(&mut logs));
            let shown = match end {
                InstantEnd::Divergence { .. } => first_cycle(&logs),
                _ => &logs[..],
            };
            for l in shown {
                tb.round(l, valuation);
            }
            state = c;
        }
        (tb, end)
    }
}
