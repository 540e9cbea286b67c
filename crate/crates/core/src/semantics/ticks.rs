use std::collections::BTreeMap;

use serde::Serialize;

use super::{SemanticsError, Tick};
use crate::language::{Spec, TimeUnit, TimeValue};

/// Largest deadline the checker accepts, in ticks.
pub const MAX_DEADLINE_TICKS: Tick = 1_000_000;

/// The model clock: one tick (`tock`) is one `base_unit`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TickScale {
    pub base_unit: TimeUnit,
    /// Base-response deadline of each rule that has one.
    pub ticks_per_deadline: BTreeMap<String, Tick>,
}

impl TickScale {
    pub fn ticks(&self, t: TimeValue) -> Result<Tick, SemanticsError> {
        let ticks = t
            .amount
            .checked_mul(t.unit.seconds())
            .map(|s| s / self.base_unit.seconds())
            .filter(|&n| n <= MAX_DEADLINE_TICKS);
        ticks.ok_or(SemanticsError::DeadlineOverflow {
            deadline: t,
            base_unit: self.base_unit,
        })
    }

    /// Longest deadline anywhere in the spec, defeaters included.
    pub fn max_deadline(&self, spec: &Spec) -> Tick {
        spec.rules
            .iter()
            .flat_map(|r| r.responses())
            .filter_map(|r| r.deadline)
            .filter_map(|d| self.ticks(d).ok())
            .max()
            .unwrap_or(0)
    }
}

/// Chooses the smallest unit used by any `within` clause as the tick and
/// converts every base deadline to it.
pub fn tick_scale(spec: &Spec) -> Result<TickScale, SemanticsError> {
    let base_unit = spec
        .rules
        .iter()
        .flat_map(|r| r.responses())
        .filter_map(|r| r.deadline.map(|d| d.unit))
        .min()
        .unwrap_or(TimeUnit::Minutes);
    let mut scale = TickScale {
        base_unit,
        ticks_per_deadline: BTreeMap::new(),
    };
    for rule in &spec.rules {
        for resp in rule.responses() {
            if let Some(d) = resp.deadline {
                let n = scale.ticks(d)?;
                if std::ptr::eq(resp, &rule.response) {
                    scale.ticks_per_deadline.insert(rule.id.name.clone(), n);
                }
            }
        }
    }
    Ok(scale)
}
