//! Seeded generator of small specs inside the oracle guard.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sleec_core::checker::CheckConfig;
use sleec_core::par::Execution;

pub struct Instance {
    pub seed: u64,
    pub text: String,
    pub cfg: CheckConfig,
}

enum Measure {
    Bool(String),
    Scale(String),
}

fn condition(rng: &mut ChaCha8Rng, measures: &[Measure]) -> String {
    let atom = |rng: &mut ChaCha8Rng| match measures.choose(rng).expect("non-empty") {
        Measure::Bool(m) => {
            if rng.gen_bool(0.3) {
                format!("not {m}")
            } else {
                m.clone()
            }
        }
        Measure::Scale(m) => {
            let op = ["<", ">", "=", "<>", "<=", ">="].choose(rng).expect("non-empty");
            format!("{m} {op} {}", ["Lo", "Mid", "Hi"].choose(rng).expect("non-empty"))
        }
    };
    match rng.gen_range(0..6) {
        0 => format!("{} and {}", atom(rng), atom(rng)),
        1 => format!("({} or {})", atom(rng), atom(rng)),
        _ => atom(rng),
    }
}

fn response(rng: &mut ChaCha8Rng, events: usize) -> String {
    let e = rng.gen_range(0..events);
    if rng.gen_bool(0.35) {
        format!("not E{e} within {} minutes", rng.gen_range(1..=2))
    } else if rng.gen_bool(0.4) {
        format!("E{e}")
    } else {
        format!("E{e} within {} minutes", rng.gen_range(1..=2))
    }
}

/// A random spec with 2–3 events, 0–2 measures, 2–3 rules and a horizon of
/// 2–3 ticks; responses and defeaters are biased towards clashes and
/// cascades so the corpus exercises every outcome.
pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_events = rng.gen_range(2..=3);
    let n_measures = rng.gen_range(0..=2);
    let measures: Vec<Measure> = (0..n_measures)
        .map(|i| {
            if rng.gen_bool(0.75) {
                Measure::Bool(format!("m{i}"))
            } else {
                Measure::Scale(format!("s{i}"))
            }
        })
        .collect();

    let mut text = String::from("def_start\n");
    for e in 0..n_events {
        text.push_str(&format!("  event E{e}\n"));
    }
    for m in &measures {
        match m {
            Measure::Bool(name) => text.push_str(&format!("  measure {name}: boolean\n")),
            Measure::Scale(name) => text.push_str(&format!("  measure {name}: scale(Lo, Mid, Hi)\n")),
        }
    }
    text.push_str("def_end\nrule_start\n");
    for r in 0..rng.gen_range(2..=3) {
        let trigger = rng.gen_range(0..n_events);
        text.push_str(&format!("  R{r} when E{trigger}"));
        if !measures.is_empty() && rng.gen_bool(0.4) {
            text.push_str(&format!(" and {}", condition(&mut rng, &measures)));
        }
        text.push_str(&format!(" then {}\n", response(&mut rng, n_events)));
        if !measures.is_empty() && rng.gen_bool(0.35) {
            text.push_str(&format!("    unless {}", condition(&mut rng, &measures)));
            if rng.gen_bool(0.6) {
                text.push_str(&format!(" then {}", response(&mut rng, n_events)));
            }
            text.push('\n');
        }
    }
    text.push_str("rule_end\n");

    let cfg = CheckConfig {
        horizon_ticks: rng.gen_range(2..=3),
        max_env_events_per_instant: if rng.gen_bool(0.2) { 2 } else { 1 },
        execution: Execution::Sequential,
        ..CheckConfig::default()
    };
    Instance { seed, text, cfg }
}
