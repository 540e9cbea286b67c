//! Whether a rule can be violated by some behaviour the other rules allow.

use std::collections::HashMap;

use super::explore::Scope;
use super::{Budget, CheckConfig, Interrupted};
use crate::language::Polarity;
use crate::semantics::{Configuration, IdSet, Model, Tick};

/// Searches for a bounded behaviour that complies with every rule in `main`
/// but violates `watched`. The environment fires any trigger of the spec and
/// the agent may perform any subset of the spec's response events in round 1
/// of an instant, beyond what `main` forces.
pub(crate) fn violable(
    model: &Model,
    watched: usize,
    main: IdSet,
    cfg: &CheckConfig,
    budget: &Budget,
) -> Result<bool, Interrupted> {
    let all = IdSet::first(model.rule_count());
    let rules = main.union(IdSet::single(watched));
    let scope = Scope::with_triggers(model, rules, model.triggers(all), cfg);
    let alphabet: IdSet = all.iter().flat_map(|r| model.demands(r)).map(|d| d.event).collect();
    let listened = model.triggers(rules);
    let mut search = Search {
        scope: &scope,
        main,
        watched: IdSet::single(watched),
        alphabet,
        listened,
        budget,
        earliest: HashMap::new(),
    };
    search.from(&Configuration::new(), 0)
}

struct Search<'a, 'm> {
    scope: &'a Scope<'m>,
    main: IdSet,
    watched: IdSet,
    alphabet: IdSet,
    listened: IdSet,
    budget: &'a Budget,
    /// Obligations with deadlines relative to the clock, mapped to the
    /// earliest instant they were explored from. Behaviour is invariant
    /// under shifting time, so a later visit has strictly fewer options.
    earliest: HashMap<Vec<(usize, Polarity, usize, i64)>, Tick>,
}

enum Round {
    Violation,
    /// `main` itself deadlocks or diverges: no compliant continuation.
    Dead,
    Settled(Configuration),
}

impl Search<'_, '_> {
    fn violates(&self, c: &Configuration, occurring: IdSet, round: u32) -> bool {
        !occurring.intersection(c.prohibited(round, self.watched)).is_empty()
            || !c.forced(round, self.watched).is_subset(occurring)
    }

    fn from(&mut self, state: &Configuration, t: Tick) -> Result<bool, Interrupted> {
        if t > self.scope.horizon {
            return Ok(false);
        }
        let relative = state
            .active
            .iter()
            .map(|o| (o.rule, o.polarity, o.event, o.deadline_at as i64 - t as i64))
            .collect();
        match self.earliest.get(&relative) {
            Some(&seen) if seen <= t => return Ok(false),
            _ => {
                self.earliest.insert(relative, t);
            }
        }
        self.budget.check()?;
        for (events, class) in self.scope.env_choices() {
            let (opened, _) = self.scope.open(state, t, events, class);
            let forced = opened.forced(1, self.main);
            let prohibited = opened.prohibited(1, self.main);
            if !forced.intersection(prohibited).is_empty() {
                continue;
            }
            // An event nobody listens to and no obligation mentions changes
            // nothing, so the agent's only interesting extras are these.
            let mentioned: IdSet = opened.active.iter().map(|o| o.event).collect();
            let relevant = self.alphabet.intersection(mentioned.union(self.listened));
            for extra in relevant.difference(prohibited).difference(forced).subsets() {
                match self.instant(opened.clone(), class, forced.union(extra)) {
                    Round::Violation => return Ok(true),
                    Round::Dead => {}
                    Round::Settled(next) => {
                        if self.from(&next, t + 1)? {
                            return Ok(true);
                        }
                    }
                }
            }
        }
        Ok(false)
    }

    fn instant(&self, mut c: Configuration, class: usize, first: IdSet) -> Round {
        let cl = &self.scope.classes[class];
        let (mut round, mut occurring) = (1, first);
        loop {
            if self.violates(&c, occurring, round) {
                return Round::Violation;
            }
            if occurring.is_empty() {
                return Round::Settled(c);
            }
            if c.clash(occurring, round, self.main).is_some() || round > self.scope.cascade_cap {
                return Round::Dead;
            }
            c.occur(self.scope.model, occurring, round, self.scope.rules, &|r| cl.act(r));
            round += 1;
            occurring = c.forced(round, self.main);
        }
    }
}
