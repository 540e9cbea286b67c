mod support;

use proptest::prelude::*;
use sleec_core::language::{analyze_names, format, parse, parse_partial, typecheck, Diagnostic};

const FIXTURES: [&str; 2] = [
    include_str!("../fixtures/r1r2.sleec"),
    include_str!("../fixtures/almi.sleec"),
];

fn atom() -> impl Strategy<Value = String> {
    let op = prop::sample::select(vec!["<", ">", "=", "<>", "<=", ">="]);
    prop_oneof![
        Just("b0".to_string()),
        (op.clone(), -5i64..200).prop_map(|(op, v)| format!("n0 {op} {v}")),
        op.clone().prop_map(|op| format!("n0{op}k")),
        (op, prop::sample::select(vec!["Lo", "Mid", "Hi"])).prop_map(|(op, l)| format!("s0 {op} {l}")),
    ]
}

fn condition() -> impl Strategy<Value = String> {
    atom().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|c| format!("not {c}")),
            inner.clone().prop_map(|c| format!("not ({c})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} and {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} or {b})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("{a} or ({b})")),
        ]
    })
}

fn event() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["Alpha", "Beta", "Gamma", "Delta"])
}

fn deadline() -> impl Strategy<Value = String> {
    let unit = prop::sample::select(vec!["second", "seconds", "minute", "minutes", "hour", "hours", "day", "days"]);
    (1u32..30, unit).prop_map(|(n, u)| format!(" within {n} {u}"))
}

fn response() -> impl Strategy<Value = String> {
    prop_oneof![
        (event(), prop::option::of(deadline())).prop_map(|(e, d)| format!("{e}{}", d.unwrap_or_default())),
        (event(), deadline()).prop_map(|(e, d)| format!("not {e}{d}")),
    ]
}

fn rule(i: usize) -> impl Strategy<Value = String> {
    let defeater = (condition(), prop::option::of(response()))
        .prop_map(|(c, r)| format!(" unless {c}{}", r.map(|r| format!(" then {r}")).unwrap_or_default()));
    (event(), prop::option::of(condition()), response(), prop::collection::vec(defeater, 0..3)).prop_map(
        move |(e, c, r, ds)| {
            let guard = c.map(|c| format!(" and {c}")).unwrap_or_default();
            format!("Rule{i} when {e}{guard} then {r}{}\n", ds.concat())
        },
    )
}

fn spec_text() -> impl Strategy<Value = String> {
    (0usize..5).prop_flat_map(|n| {
        let rules: Vec<_> = (0..n).map(rule).collect();
        (rules, any::<bool>()).prop_map(|(rules, scale_first)| {
            let measures = if scale_first {
                "measure s0: scale(Lo, Mid, Hi) measure b0: boolean measure n0: numeric"
            } else {
                "measure b0: boolean measure n0: numeric measure s0: scale(Lo, Mid, Hi)"
            };
            format!(
                "def_start event Alpha event Beta event Gamma event Delta {measures} constant k = 42 def_end\nrule_start\n{}rule_end",
                rules.concat()
            )
        })
    })
}

fn spans_in_bounds(text: &str, diags: &[Diagnostic]) -> bool {
    diags.iter().all(|d| d.span.start <= d.span.end && d.span.end <= text.len())
}

#[test]
fn fixtures_round_trip_and_format_idempotently() {
    let corpus: Vec<String> = FIXTURES
        .iter()
        .map(|s| s.to_string())
        .chain((0..100).map(|seed| support::instance(seed).text))
        .collect();
    for text in &corpus {
        let spec = parse(text).unwrap();
        let once = format(&spec);
        let reparsed = parse(&once).unwrap();
        assert_eq!(reparsed, spec, "{text}");
        assert_eq!(format(&reparsed), once);
    }
}

#[test]
fn almi_formats_to_a_fixed_point_in_one_pass() {
    let once = format(&parse(FIXTURES[1]).unwrap());
    assert_eq!(format(&parse(&once).unwrap()), once);
    assert!(once.contains("  Rule2 when UserFallen then CallSupport within 2 minutes\n    unless emergencyLevel > L3 then CallEmergencyServices\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_specs_round_trip(text in spec_text()) {
        let spec = parse(&text).map_err(|d| TestCaseError::fail(format!("{d:?}\n{text}")))?;
        let once = format(&spec);
        let reparsed = parse(&once).map_err(|d| TestCaseError::fail(format!("{d:?}\n{once}")))?;
        prop_assert_eq!(&reparsed, &spec);
        prop_assert_eq!(format(&reparsed), once);
        prop_assert!(analyze_names(&spec).is_empty());
        prop_assert!(typecheck(&spec).is_empty());
    }

    #[test]
    fn diagnostic_spans_stay_inside_the_text(
        base in prop::sample::select(FIXTURES.to_vec()),
        cut in 0usize..2000,
        len in 0usize..40,
        junk in "[ a-zA-Z0-9_:,()<>=/$#\n-]{0,12}",
    ) {
        let mut text = base.to_string();
        let at = text.floor_char_boundary(cut.min(text.len()));
        let end = text.floor_char_boundary((at + len).min(text.len()));
        text.replace_range(at..end, &junk);

        let (spec, syntax) = parse_partial(&text);
        prop_assert!(spans_in_bounds(&text, &syntax), "{:?}", syntax);
        let names = analyze_names(&spec);
        prop_assert!(spans_in_bounds(&text, &names), "{:?}", names);
        prop_assert!(spans_in_bounds(&text, &typecheck(&spec)));
    }

    #[test]
    fn arbitrary_input_never_panics(text in "\\PC{0,200}") {
        let (_, diags) = parse_partial(&text);
        prop_assert!(spans_in_bounds(&text, &diags));
    }

    #[test]
    fn naming_diagnostics_ignore_definition_order(
        order in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
        typo in prop::sample::select(vec!["Alpah", "beta", "Gama", "Delt"]),
    ) {
        let defs = ["event Alpha", "event Beta", "event Gamma", "event Delta", "measure b0: boolean"];
        let rules = format!("rule_start R when {typo} and b1 then Beta within 1 minute rule_end");
        let text = |ds: Vec<&str>| format!("def_start {} def_end {rules}", ds.join(" "));
        let strip = |t: &str| {
            let mut v: Vec<_> = analyze_names(&parse(t).unwrap())
                .into_iter()
                .map(|d| (d.message, d.suggestion))
                .collect();
            v.sort();
            v
        };
        let shuffled = text(order.iter().map(|&i| defs[i]).collect());
        prop_assert_eq!(strip(&shuffled), strip(&text(defs.to_vec())));
    }
}
