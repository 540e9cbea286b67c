//! Exhaustive reference checker for tiny specs.
//!
//! Deliberately shares no exploration code with the game engine: it walks
//! the syntax tree directly, keeps obligations as plain records, enumerates
//! every concrete value of every measure, and expands every environment
//! and agent choice without memoisation.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{CheckConfig, Verdict, VerdictKind};
use crate::language::{Condition, MeasureType, Operand, Polarity, Response, Spec};

pub const MAX_EVENTS: usize = 4;
pub const MAX_MEASURES: usize = 2;
pub const MAX_HORIZON: u64 = 6;
const MAX_NUMERIC_VALUES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance exceeds the oracle guard: {0}")]
    TooLarge(String),
    #[error("unresolved name `{0}`")]
    Unresolved(String),
}

/// Deadlock and divergence verdicts (kinds and minimal rule sets only) by
/// full enumeration. Refuses instances beyond the guard.
pub fn brute_force_oracle(spec: &Spec, cfg: &CheckConfig) -> Result<Vec<Verdict>, OracleError> {
    if spec.events.len() > MAX_EVENTS {
        return Err(OracleError::TooLarge(format!("{} events (max {MAX_EVENTS})", spec.events.len())));
    }
    if spec.measures.len() > MAX_MEASURES {
        return Err(OracleError::TooLarge(format!("{} measures (max {MAX_MEASURES})", spec.measures.len())));
    }
    if cfg.horizon_ticks > MAX_HORIZON {
        return Err(OracleError::TooLarge(format!("horizon {} (max {MAX_HORIZON})", cfg.horizon_ticks)));
    }
    let n = spec.rules.len();
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));

    let mut verdicts = Vec::new();
    for kind in [VerdictKind::Deadlock, VerdictKind::Divergence] {
        let mut found: Vec<Vec<usize>> = Vec::new();
        for subset in &subsets {
            if found.iter().any(|f| f.iter().all(|r| subset.contains(r))) {
                continue;
            }
            let world = World::new(spec, subset, cfg)?;
            let hit = match kind {
                VerdictKind::Deadlock => world.forced_deadlock(&[], 0),
                _ => world.can_diverge(&[], 0),
            };
            if hit {
                found.push(subset.clone());
                verdicts.push(Verdict {
                    kind,
                    rules: subset.iter().map(|&r| spec.rules[r].id.name.clone()).collect(),
                    trace: None,
                    witness: None,
                    scenario: BTreeMap::new(),
                    message: String::new(),
                });
            }
        }
    }
    Ok(verdicts)
}

#[derive(Debug, Clone)]
struct Ob {
    rule: usize,
    must: bool,
    event: String,
    made_at: u64,
    made_round: u32,
    due: u64,
}

enum End {
    Calm(Vec<Ob>),
    Clash,
    Diverge,
}

struct World<'a> {
    spec: &'a Spec,
    rules: Vec<usize>,
    env_sets: Vec<Vec<String>>,
    valuations: Vec<BTreeMap<String, i64>>,
    base_seconds: u64,
    horizon: u64,
    cap: u32,
}

fn unit_seconds(r: &Response) -> Option<u64> {
    r.deadline.map(|d| d.unit.seconds())
}

impl<'a> World<'a> {
    fn new(spec: &'a Spec, rules: &[usize], cfg: &CheckConfig) -> Result<Self, OracleError> {
        let base_seconds = spec
            .rules
            .iter()
            .flat_map(|r| std::iter::once(&r.response).chain(r.defeaters.iter().filter_map(|d| d.response.as_ref())))
            .filter_map(unit_seconds)
            .min()
            .unwrap_or(60);

        let mut triggers: Vec<String> = Vec::new();
        for &r in rules {
            let t = spec.rules[r].trigger_event.name.clone();
            if !triggers.contains(&t) {
                triggers.push(t);
            }
        }
        let mut env_sets: Vec<Vec<String>> = Vec::new();
        for mask in 0u32..(1 << triggers.len()) {
            if mask.count_ones() as usize <= cfg.max_env_events_per_instant {
                env_sets.push((0..triggers.len()).filter(|i| mask & (1 << i) != 0).map(|i| triggers[i].clone()).collect());
            }
        }

        let mut read: Vec<String> = Vec::new();
        for &r in rules {
            let rule = &spec.rules[r];
            let conds = rule.trigger_condition.iter().chain(rule.defeaters.iter().map(|d| &d.condition));
            for c in conds {
                for m in c.measures() {
                    if !read.contains(&m.name) {
                        read.push(m.name.clone());
                    }
                }
            }
        }
        let mut valuations = vec![BTreeMap::new()];
        for name in &read {
            let def = spec
                .measures
                .iter()
                .find(|m| &m.name.name == name)
                .ok_or_else(|| OracleError::Unresolved(name.clone()))?;
            let values: Vec<i64> = match &def.mtype {
                MeasureType::Boolean => vec![0, 1],
                MeasureType::Scale(lits) => (0..lits.len() as i64).collect(),
                MeasureType::Numeric => {
                    let mut bounds: Vec<i64> = Vec::new();
                    for rule in &spec.rules {
                        let conds = rule.trigger_condition.iter().chain(rule.defeaters.iter().map(|d| &d.condition));
                        for c in conds {
                            for (m, _, v) in c.comparisons() {
                                if &m.name == name {
                                    bounds.push(operand_int(spec, v)?);
                                }
                            }
                        }
                    }
                    match (bounds.iter().min(), bounds.iter().max()) {
                        (Some(lo), Some(hi)) => {
                            if (hi - lo) as usize + 3 > MAX_NUMERIC_VALUES {
                                return Err(OracleError::TooLarge(format!("numeric range of `{name}`")));
                            }
                            (lo - 1..=hi + 1).collect()
                        }
                        _ => vec![0],
                    }
                }
            };
            let mut next = Vec::new();
            for v in &valuations {
                for &x in &values {
                    let mut w = v.clone();
                    w.insert(name.clone(), x);
                    next.push(w);
                }
            }
            valuations = next;
        }

        Ok(World {
            spec,
            rules: rules.to_vec(),
            env_sets,
            valuations,
            base_seconds,
            horizon: cfg.horizon_ticks,
            cap: cfg.cascade_cap,
        })
    }

    fn holds(&self, c: &Condition, val: &BTreeMap<String, i64>) -> bool {
        match c {
            Condition::Atom(m) => val[&m.name] == 1,
            Condition::Not(inner) => !self.holds(inner, val),
            Condition::And(a, b) => self.holds(a, val) && self.holds(b, val),
            Condition::Or(a, b) => self.holds(a, val) || self.holds(b, val),
            Condition::Compare { measure, op, value } => {
                let lhs = val[&measure.name];
                let def = self.spec.measures.iter().find(|m| m.name == *measure).expect("read measure");
                let rhs = match (&def.mtype, value) {
                    (MeasureType::Scale(lits), Operand::Name(l)) => {
                        lits.iter().position(|x| x == l).expect("literal of the scale") as i64
                    }
                    _ => operand_int(self.spec, value).expect("numeric operand"),
                };
                op.apply(lhs, rhs)
            }
        }
    }

    /// Polarity, event and deadline in ticks of the response `rule` demands.
    fn respond(&self, rule: usize, val: &BTreeMap<String, i64>) -> Option<(bool, String, u64)> {
        let r = &self.spec.rules[rule];
        if let Some(c) = &r.trigger_condition {
            if !self.holds(c, val) {
                return None;
            }
        }
        let mut chosen = Some(&r.response);
        for d in &r.defeaters {
            if self.holds(&d.condition, val) {
                chosen = d.response.as_ref();
            }
        }
        let resp = chosen?;
        let ticks = resp.deadline.map_or(0, |d| d.amount * d.unit.seconds() / self.base_seconds);
        Some((resp.polarity == Polarity::Must, resp.event.name.clone(), ticks))
    }

    fn sees(o: &Ob, now: u64, round: u32) -> bool {
        o.made_at < now || o.made_round < round
    }

    fn happen(&self, obs: &mut Vec<Ob>, events: &[String], now: u64, round: u32, val: &BTreeMap<String, i64>) {
        obs.retain(|o| !(o.must && Self::sees(o, now, round) && events.contains(&o.event)));
        let busy: Vec<usize> = obs.iter().map(|o| o.rule).collect();
        for &r in &self.rules {
            if busy.contains(&r) || !events.contains(&self.spec.rules[r].trigger_event.name) {
                continue;
            }
            if let Some((must, event, ticks)) = self.respond(r, val) {
                obs.push(Ob {
                    rule: r,
                    must,
                    event,
                    made_at: now,
                    made_round: round,
                    due: now + ticks,
                });
            }
        }
    }

    fn due(obs: &[Ob], now: u64, round: u32) -> Vec<String> {
        let mut out: Vec<String> = obs
            .iter()
            .filter(|o| o.must && o.due == now && Self::sees(o, now, round))
            .map(|o| o.event.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn banned(obs: &[Ob], now: u64, round: u32) -> Vec<String> {
        obs.iter()
            .filter(|o| !o.must && o.due >= now && Self::sees(o, now, round))
            .map(|o| o.event.clone())
            .collect()
    }

    fn finish(&self, mut obs: Vec<Ob>, now: u64, val: &BTreeMap<String, i64>, first: Vec<String>) -> End {
        let mut round = 1;
        let mut occurring = first;
        loop {
            if occurring.is_empty() {
                return End::Calm(obs);
            }
            let banned = Self::banned(&obs, now, round);
            if occurring.iter().any(|e| banned.contains(e)) {
                return End::Clash;
            }
            if round > self.cap {
                return End::Diverge;
            }
            self.happen(&mut obs, &occurring, now, round, val);
            round += 1;
            occurring = Self::due(&obs, now, round);
        }
    }

    /// Every play of instant `now`, grouped by environment move: the state
    /// after round 0 with each agent choice for round 1, or `None` when the
    /// due events are already banned.
    fn choices(&self, obs: &[Ob], now: u64) -> Vec<Option<Vec<(Vec<Ob>, usize, Vec<String>)>>> {
        let carried: Vec<Ob> = obs.iter().filter(|o| o.due >= now).cloned().collect();
        let mut out = Vec::new();
        for events in &self.env_sets {
            for (vi, val) in self.valuations.iter().enumerate() {
                let mut o = carried.clone();
                self.happen(&mut o, events, now, 0, val);
                let due = Self::due(&o, now, 1);
                let banned = Self::banned(&o, now, 1);
                if due.iter().any(|e| banned.contains(e)) {
                    out.push(None);
                    continue;
                }
                let mut free: Vec<String> = o
                    .iter()
                    .filter(|x| x.must && x.due > now && Self::sees(x, now, 1))
                    .map(|x| x.event.clone())
                    .filter(|e| !banned.contains(e) && !due.contains(e))
                    .collect();
                free.sort();
                free.dedup();
                let mut plays = Vec::new();
                for mask in 0u32..(1 << free.len()) {
                    let mut first = due.clone();
                    first.extend((0..free.len()).filter(|i| mask & (1 << i) != 0).map(|i| free[i].clone()));
                    plays.push((o.clone(), vi, first));
                }
                out.push(Some(plays));
            }
        }
        out
    }

    /// Some environment strategy makes every agent strategy clash by the
    /// horizon.
    fn forced_deadlock(&self, obs: &[Ob], now: u64) -> bool {
        if now > self.horizon {
            return false;
        }
        self.choices(obs, now).into_iter().any(|plays| match plays {
            None => true,
            Some(plays) => plays.into_iter().all(|(o, vi, first)| match self.finish(o, now, &self.valuations[vi], first) {
                End::Clash => true,
                End::Diverge => false,
                End::Calm(next) => self.forced_deadlock(&next, now + 1),
            }),
        })
    }

    /// Some play reaches a cascade beyond the cap by the horizon.
    fn can_diverge(&self, obs: &[Ob], now: u64) -> bool {
        if now > self.horizon {
            return false;
        }
        self.choices(obs, now).into_iter().flatten().flatten().any(|(o, vi, first)| {
            match self.finish(o, now, &self.valuations[vi], first) {
                End::Diverge => true,
                End::Clash => false,
                End::Calm(next) => self.can_diverge(&next, now + 1),
            }
        })
    }
}

fn operand_int(spec: &Spec, v: &Operand) -> Result<i64, OracleError> {
    match v {
        Operand::Int(n) => Ok(*n),
        Operand::Name(n) => spec
            .constants
            .iter()
            .find(|c| c.name == *n)
            .map(|c| c.value)
            .ok_or_else(|| OracleError::Unresolved(n.name.clone())),
    }
}
