//! Reachability of an instantaneous cascade that never settles.

use std::collections::HashSet;

use super::explore::{Move, Scope};
use super::{Budget, Interrupted};
use crate::semantics::{Configuration, InstantEnd, StateKey};

/// Breadth-first over instants, so the first divergence found is one of
/// the earliest; ties resolve in canonical move order.
pub(crate) fn divergence_witness(scope: &Scope, budget: &Budget) -> Result<Option<Vec<Move>>, Interrupted> {
    let mut arena: Vec<(Option<usize>, Move)> = Vec::new();
    let mut visited: HashSet<StateKey> = HashSet::new();
    let mut frontier: Vec<(Configuration, Option<usize>)> = vec![(Configuration::new(), None)];
    let path = |arena: &[(Option<usize>, Move)], mut node: Option<usize>, last: Move| {
        let mut moves = vec![last];
        while let Some(i) = node {
            moves.push(arena[i].1);
            node = arena[i].0;
        }
        moves.reverse();
        moves
    };

    for t in 0..=scope.horizon {
        let mut next = Vec::new();
        for (state, node) in &frontier {
            budget.check()?;
            for (events, class) in scope.env_choices() {
                let (opened, _) = scope.open(state, t, events, class);
                let Ok(options) = scope.agent_options(&opened) else {
                    continue;
                };
                for choice in options {
                    let mv = Move { events, class, choice };
                    let mut c = opened.clone();
                    match scope.settle(&mut c, class, choice, None) {
                        InstantEnd::Divergence { .. } => return Ok(Some(path(&arena, *node, mv))),
                        InstantEnd::Quiescent if t < scope.horizon => {
                            if visited.insert((t + 1, c.key().1)) {
                                arena.push((*node, mv));
                                next.push((c, Some(arena.len() - 1)));
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        frontier = next;
    }
    Ok(None)
}
