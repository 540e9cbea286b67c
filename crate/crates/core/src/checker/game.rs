//! Deadlock as a two-player game over a bounded horizon.
//!
//! The environment picks trigger events and measure values each instant;
//! the agent picks which pending obligations to discharge early. The value
//! of a state is the earliest instant at which the environment can force a
//! clash whatever the agent does, or [`NEVER`].

use std::collections::HashMap;

use super::explore::{Move, Scope};
use super::{Budget, Interrupted};
use crate::semantics::{Clash, Configuration, IdSet, InstantEnd, StateKey, Tick};

pub(crate) const NEVER: Tick = Tick::MAX;

pub(crate) struct Game<'s, 'm> {
    scope: &'s Scope<'m>,
    budget: &'s Budget,
    memo: HashMap<StateKey, Tick>,
}

impl<'s, 'm> Game<'s, 'm> {
    pub fn new(scope: &'s Scope<'m>, budget: &'s Budget) -> Self {
        Game {
            scope,
            budget,
            memo: HashMap::new(),
        }
    }

    /// The configuration's own clock is the previous instant (or 0 before
    /// the first), so key on the instant about to start instead.
    fn key(state: &Configuration, t: Tick) -> StateKey {
        (t, state.key().1)
    }

    /// Earliest forced clash from `state` at the start of instant `t`.
    pub fn value(&mut self, state: &Configuration, t: Tick) -> Result<Tick, Interrupted> {
        if t > self.scope.horizon {
            return Ok(NEVER);
        }
        let key = Self::key(state, t);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        self.budget.check()?;
        let mut best = NEVER;
        for (events, class) in self.scope.env_choices() {
            let (v, _) = self.respond(state, t, events, class)?;
            best = best.min(v);
            if best == t {
                break;
            }
        }
        self.memo.insert(key, best);
        Ok(best)
    }

    /// The agent's best outcome against one environment move, with the
    /// first choice achieving it (`None` if a clash is unavoidable).
    fn respond(
        &mut self,
        state: &Configuration,
        t: Tick,
        events: IdSet,
        class: usize,
    ) -> Result<(Tick, Option<IdSet>), Interrupted> {
        let (opened, _) = self.scope.open(state, t, events, class);
        let options = match self.scope.agent_options(&opened) {
            Ok(o) => o,
            Err(_) => return Ok((t, None)),
        };
        let mut best: Option<(Tick, IdSet)> = None;
        for choice in options {
            let mut c = opened.clone();
            let v = match self.scope.settle(&mut c, class, choice, None) {
                InstantEnd::Deadlock(_) => t,
                InstantEnd::Divergence { .. } => NEVER,
                InstantEnd::Quiescent => self.value(&c, t + 1)?,
            };
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, choice));
            }
            if v == NEVER {
                break;
            }
        }
        let (v, choice) = best.expect("the empty choice is always available");
        Ok((v, Some(choice)))
    }

    /// A shortest forced-deadlock play: the environment's first minimising
    /// move and the agent's first maximising reply at every instant.
    pub fn witness(&mut self) -> Result<Option<(Vec<Move>, Clash)>, Interrupted> {
        let mut state = Configuration::new();
        let target = self.value(&state, 0)?;
        if target == NEVER {
            return Ok(None);
        }
        let mut moves = Vec::new();
        for t in 0..=target {
            let mut picked = None;
            for (events, class) in self.scope.env_choices() {
                let (v, choice) = self.respond(&state, t, events, class)?;
                if v == target {
                    picked = Some(Move {
                        events,
                        class,
                        choice: choice.unwrap_or_default(),
                    });
                    break;
                }
            }
            let mv = picked.expect("the game value is attained by some move");
            moves.push(mv);
            let (mut c, _) = self.scope.open(&state, t, mv.events, mv.class);
            match self.scope.settle(&mut c, mv.class, mv.choice, None) {
                InstantEnd::Deadlock(clash) if t == target => return Ok(Some((moves, clash))),
                InstantEnd::Quiescent if t < target => state = c,
                other => unreachable!("witness left the optimal play at {t}: {other:?}"),
            }
        }
        unreachable!("the play reaches its value")
    }
}
