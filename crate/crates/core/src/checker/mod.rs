//! Bounded exploration of a spec's timed behaviour: deadlocks, divergent
//! cascades and redundant rules, each with a counterexample trace where one
//! exists.

mod analysis;
mod divergence;
mod explore;
mod game;
pub mod oracle;
mod redundancy;
mod replay;
mod trace;

pub use analysis::{analyze, is_conflict_free, Analysis};
pub use replay::{replay_deadlock, ReplayError, ReplayOutcome};
pub use trace::{format_trace, Trace, TraceEntry};

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::language::{Category, Diagnostic, Span, Spec};
use crate::par::{self, Execution};
use crate::language::Polarity;
use crate::semantics::{IdSet, InstantEnd, Model, SemanticsError, Tick};
use explore::{Move, Scope};
use game::Game;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub horizon_ticks: Tick,
    pub max_env_events_per_instant: usize,
    pub cascade_cap: u32,
    pub elide_tocks: bool,
    /// Largest rule subset searched for a minimal conflict.
    pub max_core_size: usize,
    pub execution: Execution,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            horizon_ticks: 8,
            max_env_events_per_instant: 1,
            cascade_cap: 16,
            elide_tocks: true,
            max_core_size: 3,
            execution: Execution::Parallel,
        }
    }
}

/// Cooperative wall-clock limit, polled by the searches.
#[derive(Debug, Clone, Copy, Default)]
pub struct Budget {
    deadline: Option<Instant>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn within(limit: Duration) -> Self {
        Budget {
            deadline: Some(Instant::now() + limit),
        }
    }

    pub fn check(&self) -> Result<(), Interrupted> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Interrupted),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("time budget exhausted")]
pub struct Interrupted;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Interrupted(#[from] Interrupted),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Deadlock,
    Divergence,
    Naming,
    Redundancy,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Deadlock => "deadlock",
            VerdictKind::Divergence => "divergence",
            VerdictKind::Naming => "naming",
            VerdictKind::Redundancy => "redundancy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub rules: Vec<String>,
    /// The witness in `<…>` notation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    /// The witness entry by entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Trace>,
    /// First observed value of each measure along the witness.
    #[serde(default)]
    pub scenario: BTreeMap<String, String>,
    pub message: String,
}

fn list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn rule_ids(model: &Model, rules: IdSet) -> Vec<String> {
    rules.iter().map(|r| model.rule_id(r).to_string()).collect()
}

/// Warns when a deadline reaches past the horizon, since obligations that
/// fall due after it are never examined.
pub fn horizon_warning(spec: &Spec, cfg: &CheckConfig) -> Result<Option<Diagnostic>, SemanticsError> {
    let model = Model::new(spec)?;
    let longest = model.ticks.max_deadline(spec);
    Ok((longest > cfg.horizon_ticks).then(|| {
        Diagnostic::warning(
            Category::Config,
            Span::default(),
            format!(
                "the longest deadline is {longest} ticks ({} each) but the horizon is {} ticks; \
                 conflicts at later deadlines are not detected",
                model.ticks.base_unit.keyword(1),
                cfg.horizon_ticks
            ),
        )
    }))
}

/// Subsets of `all` of each size up to `max`, in canonical order, skipping
/// supersets of anything in `found`.
fn candidate_subsets(all: IdSet, size: usize, found: &[IdSet]) -> Vec<IdSet> {
    all.subsets_up_to(size)
        .into_iter()
        .filter(|s| s.len() == size && !found.iter().any(|f| f.is_subset(*s)))
        .collect()
}

/// Whether some event is both demanded by one rule of `rules` and
/// forbidden by another (or the same) one.
fn may_clash(model: &Model, rules: IdSet) -> bool {
    let mut must = IdSet::empty();
    let mut must_not = IdSet::empty();
    for r in rules.iter() {
        for d in model.demands(r) {
            match d.polarity {
                Polarity::Must => must.insert(d.event),
                Polarity::MustNot => must_not.insert(d.event),
            }
        }
    }
    !must.intersection(must_not).is_empty()
}

/// A cascade can only exceed the cap if immediate obligations feed back into
/// their own triggers; an acyclic chain stops within `|rules| + 1` rounds.
fn may_cascade(model: &Model, rules: IdSet, cascade_cap: u32) -> bool {
    let feeds = |r: usize| -> IdSet {
        model
            .demands(r)
            .filter(|d| d.polarity == Polarity::Must && d.ticks == 0)
            .flat_map(|d| model.triggered_by(d.event).iter().copied().filter(|&s| rules.contains(s)))
            .collect()
    };
    if rules.len() as u64 + 1 > cascade_cap as u64 {
        return rules.iter().any(|r| !feeds(r).is_empty());
    }
    // Kahn's algorithm: a cycle remains iff some rule is never released.
    let mut edges = [IdSet::empty(); IdSet::CAPACITY];
    let mut indegree = [0usize; IdSet::CAPACITY];
    for r in rules.iter() {
        edges[r] = feeds(r);
        for s in edges[r].iter() {
            indegree[s] += 1;
        }
    }
    let mut ready: Vec<usize> = rules.iter().filter(|&r| indegree[r] == 0).collect();
    let mut released = 0;
    while let Some(r) = ready.pop() {
        released += 1;
        for s in edges[r].iter() {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(s);
            }
        }
    }
    released < rules.len()
}

fn collect<T>(results: Vec<Result<T, Interrupted>>) -> Result<Vec<T>, Interrupted> {
    results.into_iter().collect()
}

/// Searches rule subsets by increasing size for minimal sets satisfying
/// `probe`, evaluating each size in parallel.
fn minimal_subsets<W: Send>(
    model: &Model,
    cfg: &CheckConfig,
    relevant: impl Fn(IdSet) -> bool,
    probe: impl Fn(IdSet) -> Result<Option<W>, Interrupted> + Sync + Send,
) -> Result<Vec<(IdSet, W)>, Interrupted> {
    let all = IdSet::first(model.rule_count());
    let mut found: Vec<(IdSet, W)> = Vec::new();
    for size in 1..=cfg.max_core_size.min(model.rule_count()) {
        let cores: Vec<IdSet> = found.iter().map(|(s, _)| *s).collect();
        let candidates: Vec<IdSet> = candidate_subsets(all, size, &cores)
            .into_iter()
            .filter(|s| relevant(*s))
            .collect();
        let results = collect(par::map(cfg.execution, &candidates, |s| probe(*s)))?;
        found.extend(candidates.into_iter().zip(results).filter_map(|(s, w)| w.map(|w| (s, w))));
    }
    Ok(found)
}

fn deadlock_verdict(scope: &Scope, rules: IdSet, moves: &[Move], cfg: &CheckConfig) -> Verdict {
    let (tb, end) = scope.record(moves);
    let InstantEnd::Deadlock(clash) = end else {
        unreachable!("a deadlock witness ends in a clash")
    };
    let model = scope.model;
    let ids = rule_ids(model, rules);
    let events: Vec<String> = clash.events.iter().map(|e| model.event_name(e).to_string()).collect();
    Verdict {
        kind: VerdictKind::Deadlock,
        message: format!(
            "{} conflict: {} must happen and must not happen at tick {}",
            list(&ids),
            list(&events),
            moves.len() - 1
        ),
        rules: ids,
        trace: Some(format_trace(&tb.trace, cfg.elide_tocks)),
        witness: Some(tb.trace),
        scenario: tb.scenario,
    }
}

fn divergence_verdict(scope: &Scope, rules: IdSet, moves: &[Move], cfg: &CheckConfig) -> Verdict {
    let (tb, end) = scope.record(moves);
    debug_assert!(matches!(end, InstantEnd::Divergence { .. }));
    let ids = rule_ids(scope.model, rules);
    Verdict {
        kind: VerdictKind::Divergence,
        message: format!(
            "{} trigger each other without time passing: more than {} rounds at tick {}",
            list(&ids),
            cfg.cascade_cap,
            moves.len() - 1
        ),
        rules: ids,
        trace: Some(format_trace(&tb.trace, cfg.elide_tocks)),
        witness: Some(tb.trace),
        scenario: tb.scenario,
    }
}

/// Deadlocks: for every minimal set of at most `max_core_size` rules whose
/// obligations the environment can drive into a clash, one verdict with a
/// shortest witness. If only larger sets conflict, the whole spec's witness
/// is reported against the rules owning the clash.
pub fn check_consistency(spec: &Spec, cfg: &CheckConfig) -> Result<Vec<Verdict>, CheckError> {
    check_consistency_within(spec, cfg, &Budget::unlimited())
}

pub fn check_consistency_within(spec: &Spec, cfg: &CheckConfig, budget: &Budget) -> Result<Vec<Verdict>, CheckError> {
    let model = Model::new(spec)?;
    let cores = minimal_subsets(
        &model,
        cfg,
        |s| may_clash(&model, s),
        |rules| {
            let scope = Scope::new(&model, rules, cfg);
            let witness = Game::new(&scope, budget).witness()?;
            Ok(witness.map(|(moves, _)| deadlock_verdict(&scope, rules, &moves, cfg)))
        },
    )?;
    let mut verdicts: Vec<Verdict> = cores.into_iter().map(|(_, v)| v).collect();
    let all = IdSet::first(model.rule_count());
    if verdicts.is_empty() && model.rule_count() > cfg.max_core_size && may_clash(&model, all) {
        let scope = Scope::new(&model, all, cfg);
        if let Some((moves, clash)) = Game::new(&scope, budget).witness()? {
            verdicts.push(deadlock_verdict(&scope, clash.rules, &moves, cfg));
        }
    }
    Ok(verdicts)
}

/// Divergences: minimal rule sets that can reach a same-instant cascade
/// longer than `cascade_cap`.
pub fn detect_divergence(spec: &Spec, cfg: &CheckConfig) -> Result<Vec<Verdict>, CheckError> {
    detect_divergence_within(spec, cfg, &Budget::unlimited())
}

pub fn detect_divergence_within(spec: &Spec, cfg: &CheckConfig, budget: &Budget) -> Result<Vec<Verdict>, CheckError> {
    let model = Model::new(spec)?;
    let found = minimal_subsets(
        &model,
        cfg,
        |s| may_cascade(&model, s, cfg.cascade_cap),
        |rules| {
            let scope = Scope::new(&model, rules, cfg);
            let witness = divergence::divergence_witness(&scope, budget)?;
            Ok(witness.map(|moves| divergence_verdict(&scope, rules, &moves, cfg)))
        },
    )?;
    let mut verdicts: Vec<Verdict> = found.into_iter().map(|(_, v)| v).collect();
    let all = IdSet::first(model.rule_count());
    if verdicts.is_empty() && model.rule_count() > cfg.max_core_size && may_cascade(&model, all, cfg.cascade_cap) {
        let scope = Scope::new(&model, all, cfg);
        if let Some(moves) = divergence::divergence_witness(&scope, budget)? {
            verdicts.push(divergence_verdict(&scope, all, &moves, cfg));
        }
    }
    Ok(verdicts)
}

/// Redundant rules, judged greedily from the last rule to the first: a rule
/// is redundant if no bounded behaviour allowed by the remaining rules
/// violates it. Meaningful only for conflict-free specs.
pub fn detect_redundancy(spec: &Spec, cfg: &CheckConfig) -> Result<Vec<Verdict>, CheckError> {
    detect_redundancy_within(spec, cfg, &Budget::unlimited())
}

pub fn detect_redundancy_within(spec: &Spec, cfg: &CheckConfig, budget: &Budget) -> Result<Vec<Verdict>, CheckError> {
    let model = Model::new(spec)?;
    let n = model.rule_count();
    let mut kept = IdSet::first(n);
    let mut redundant = Vec::new();
    for r in (0..n).rev() {
        let others = kept.difference(IdSet::single(r));
        if !redundancy::violable(&model, r, others, cfg, budget)? {
            redundant.push(r);
            kept = others;
        }
    }
    redundant.reverse();
    let mut verdicts = Vec::new();
    for r in redundant {
        let candidates: Vec<usize> = (0..n).filter(|&s| s != r).collect();
        let subsumes = collect(par::map(cfg.execution, &candidates, |&s| {
            redundancy::violable(&model, r, IdSet::single(s), cfg, budget).map(|v| !v)
        }))?;
        let subsumer = candidates.iter().zip(subsumes).find(|(_, yes)| *yes).map(|(s, _)| *s);
        let id = model.rule_id(r).to_string();
        let (rules, message) = match subsumer {
            Some(s) => {
                let sid = model.rule_id(s).to_string();
                let msg = format!("{id} is redundant: {sid} alone already guarantees it");
                (vec![id, sid], msg)
            }
            None => {
                let msg = format!("{id} is redundant: the other rules together already guarantee it");
                (vec![id], msg)
            }
        };
        verdicts.push(Verdict {
            kind: VerdictKind::Redundancy,
            rules,
            trace: None,
            witness: None,
            scenario: BTreeMap::new(),
            message,
        });
    }
    Ok(verdicts)
}
