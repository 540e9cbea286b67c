mod support;

use sleec_core::checker::*;
use sleec_core::language::parse;
use sleec_core::par::Execution;

const R1R2: &str = include_str!("../fixtures/r1r2.sleec");

fn cfg() -> CheckConfig {
    CheckConfig::default()
}

fn spec(defs: &str, rules: &str) -> sleec_core::language::Spec {
    parse(&format!("def_start {defs} def_end rule_start {rules} rule_end")).unwrap()
}

fn kinds(verdicts: &[Verdict]) -> Vec<(VerdictKind, Vec<String>)> {
    verdicts.iter().map(|v| (v.kind, v.rules.clone())).collect()
}

#[test]
fn r1_r2_deadlock_with_golden_trace() {
    let spec = parse(R1R2).unwrap();
    let verdicts = check_consistency(&spec, &cfg()).unwrap();
    assert_eq!(verdicts.len(), 1);
    let v = &verdicts[0];
    assert_eq!(v.kind, VerdictKind::Deadlock);
    assert_eq!(v.rules, ["R1", "R2"]);
    assert_eq!(v.trace.as_deref(), Some("<DetectUserFallen, emergencyLevel.L1, tock, tock>"));
    assert_eq!(v.scenario.get("emergencyLevel").map(String::as_str), Some("L1"));
}

#[test]
fn r1_alone_is_consistent() {
    let mut spec = parse(R1R2).unwrap();
    spec.rules.truncate(1);
    assert!(check_consistency(&spec, &cfg()).unwrap().is_empty());
    assert!(detect_divergence(&spec, &cfg()).unwrap().is_empty());
}

#[test]
fn deadlock_witness_replays() {
    let spec = parse(R1R2).unwrap();
    let v = &check_consistency(&spec, &cfg()).unwrap()[0];
    let out = replay_deadlock(&spec, &v.rules, v.witness.as_ref().unwrap(), cfg().cascade_cap).unwrap();
    assert_eq!(out.tick, 2);
    assert_eq!(out.events, ["CallEmergencySupport"]);
    assert_eq!(out.rules, ["R1", "R2"]);
}

#[test]
fn truncated_witness_does_not_replay() {
    let spec = parse(R1R2).unwrap();
    let v = &check_consistency(&spec, &cfg()).unwrap()[0];
    let mut w = v.witness.clone().unwrap();
    w.entries.pop();
    assert!(replay_deadlock(&spec, &v.rules, &w, cfg().cascade_cap).is_err());
}

#[test]
fn immediate_cycle_diverges() {
    let spec = spec("event A event B", "RA when A then B RB when B then A");
    let v = detect_divergence(&spec, &cfg()).unwrap();
    assert_eq!(kinds(&v), [(VerdictKind::Divergence, vec!["RA".into(), "RB".into()])]);
    let trace = v[0].trace.as_deref().unwrap();
    assert!(trace.starts_with("<A, B, A"), "{trace}");
}

#[test]
fn timed_cycle_does_not_diverge() {
    let spec = spec(
        "event A event B",
        "RA when A then B within 1 minute RB when B then A within 1 minute",
    );
    assert!(detect_divergence(&spec, &cfg()).unwrap().is_empty());
}

#[test]
fn acyclic_chain_does_not_diverge() {
    let spec = spec("event A event B event C", "R1 when A then B R2 when B then C");
    assert!(detect_divergence(&spec, &cfg()).unwrap().is_empty());
}

#[test]
fn looser_deadline_is_redundant() {
    let spec = spec("event A event B", "Fast when A then B within 2 minutes Slow when A then B within 5 minutes");
    let v = detect_redundancy(&spec, &cfg()).unwrap();
    assert_eq!(kinds(&v), [(VerdictKind::Redundancy, vec!["Slow".into(), "Fast".into()])]);
    assert_eq!(v[0].message, "Slow is redundant: Fast alone already guarantees it");
}

#[test]
fn looser_deadline_is_redundant_in_either_order() {
    let spec = spec("event A event B", "Slow when A then B within 5 minutes Fast when A then B within 2 minutes");
    let v = detect_redundancy(&spec, &cfg()).unwrap();
    assert_eq!(kinds(&v), [(VerdictKind::Redundancy, vec!["Slow".into(), "Fast".into()])]);
}

#[test]
fn disjoint_rules_are_not_redundant() {
    let spec = spec("event A event B event C event D", "R1 when A then B R2 when C then D");
    assert!(detect_redundancy(&spec, &cfg()).unwrap().is_empty());
}

#[test]
fn duplicate_rule_flagged_once() {
    let spec = spec(
        "event A event B measure m: boolean",
        "R1 when A and m then not B within 1 minute R2 when A and m then not B within 1 minute",
    );
    let v = detect_redundancy(&spec, &cfg()).unwrap();
    assert_eq!(kinds(&v), [(VerdictKind::Redundancy, vec!["R2".into(), "R1".into()])]);
}

#[test]
fn self_conflicting_rule() {
    let spec = spec(
        "event A event B measure m: boolean",
        "R when A then B unless m then not B within 1 minute",
    );
    // A rule owns at most one obligation at a time, so it cannot clash with itself.
    assert!(check_consistency(&spec, &cfg()).unwrap().is_empty());
}

#[test]
fn verdicts_are_deterministic_across_runs_and_execution_modes() {
    for seed in 0..20 {
        let inst = support::instance(seed);
        let spec = parse(&inst.text).unwrap();
        let mut par = inst.cfg.clone();
        par.execution = Execution::Parallel;
        let run = |c: &CheckConfig| {
            let mut v = check_consistency(&spec, c).unwrap();
            v.extend(detect_divergence(&spec, c).unwrap());
            serde_json::to_string(&v).unwrap()
        };
        let first = run(&inst.cfg);
        assert_eq!(first, run(&inst.cfg), "seed {seed}");
        assert_eq!(first, run(&par), "seed {seed}");
    }
}

/// A core found at a smaller horizon is still a deadlock at a larger one,
/// though a smaller core may now be reported in its place.
#[test]
fn enlarging_the_horizon_keeps_deadlocks() {
    for seed in 0..40 {
        let inst = support::instance(seed);
        let spec = parse(&inst.text).unwrap();
        let mut small = inst.cfg.clone();
        small.horizon_ticks = 2;
        let mut large = small.clone();
        large.horizon_ticks = 4;
        let before = check_consistency(&spec, &small).unwrap();
        let after = check_consistency(&spec, &large).unwrap();
        for v in &before {
            assert!(
                after.iter().any(|w| w.rules.iter().all(|r| v.rules.contains(r))),
                "seed {seed}: {:?} lost\n{}",
                v.rules,
                inst.text
            );
        }
    }
}

/// No shorter horizon admits a forced deadlock on the same rules.
#[test]
fn witnesses_are_minimal() {
    for seed in 0..40 {
        let inst = support::instance(seed);
        let spec = parse(&inst.text).unwrap();
        for v in check_consistency(&spec, &inst.cfg).unwrap() {
            let tocks = v.witness.as_ref().unwrap().tocks();
            if tocks == 0 {
                continue;
            }
            let mut shorter = inst.cfg.clone();
            shorter.horizon_ticks = tocks as u64 - 1;
            let again = check_consistency(&spec, &shorter).unwrap();
            assert!(
                !again.iter().any(|w| w.rules == v.rules),
                "seed {seed}: {:?} also at horizon {}",
                v.rules,
                shorter.horizon_ticks
            );
        }
    }
}

#[test]
fn every_generated_witness_replays() {
    for seed in 0..40 {
        let inst = support::instance(seed);
        let spec = parse(&inst.text).unwrap();
        for v in check_consistency(&spec, &inst.cfg).unwrap() {
            let out = replay_deadlock(&spec, &v.rules, v.witness.as_ref().unwrap(), inst.cfg.cascade_cap);
            assert!(out.is_ok(), "seed {seed}: {out:?}\n{}", inst.text);
        }
    }
}

#[test]
fn analysis_of_a_misspelling_yields_a_naming_verdict() {
    let text = R1R2.replace("R2 when DetectUserFallen", "R2 when DetectUserFalen");
    let a = analyze(&text, &cfg(), &Budget::unlimited());
    assert_eq!(kinds(&a.verdicts), [(VerdictKind::Naming, vec!["R2".into()])]);
    assert!(a.verdicts[0].message.contains("did you mean `DetectUserFallen`"));
    assert!(!is_conflict_free(&a));
}

#[test]
fn exhausted_budget_marks_analysis_partial() {
    let a = analyze(R1R2, &cfg(), &Budget::within(std::time::Duration::ZERO));
    assert!(a.partial);
    assert!(!is_conflict_free(&a));
}

#[test]
fn short_horizon_warns() {
    let mut c = cfg();
    c.horizon_ticks = 1;
    let a = analyze(R1R2, &c, &Budget::unlimited());
    assert!(a.diagnostics.iter().any(|d| !d.is_error()), "{:?}", a.diagnostics);
}
