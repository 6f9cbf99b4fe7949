mod common;

use moo_core::minioo::{check_program, compile, parse_program, pretty_print};
use proptest::prelude::*;

#[test]
fn corpus_has_at_least_twenty_programs() {
    assert!(common::corpus().len() >= 20, "{}", common::corpus().len());
}

#[test]
fn corpus_pretty_print_round_trips() {
    for (name, src) in common::corpus() {
        let p = parse_program(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
        let text = pretty_print(&p);
        let again = parse_program(&text).unwrap_or_else(|e| panic!("{name}: reparse: {e}\n{text}"));
        assert_eq!(p, again, "{name}");
        assert_eq!(text, pretty_print(&again), "{name}: printing is not a fixpoint");
    }
}

#[test]
fn transformed_corpus_round_trips() {
    for (name, src) in common::corpus() {
        let out = common::transform(&compile(&src).unwrap());
        let again = parse_program(&out.text()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(out.program, again, "{name}");
    }
}

#[test]
fn checking_is_deterministic() {
    for (name, src) in common::corpus() {
        let p = parse_program(&src).unwrap();
        let a = check_program(&p).unwrap();
        let b = check_program(&p).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn typed_program_survives_printing() {
    // Checking the printed form yields the same typed program.
    for (name, src) in common::corpus() {
        let p = compile(&src).unwrap();
        let q = compile(&pretty_print(&p.program)).unwrap();
        assert_eq!(p, q, "{name}");
    }
}

const BROKEN: &[&str] = &[
    "class A { int x; int x; } class Main { public static void main() { } }",
    "class A { public int f() { return true; } } class Main { public static void main() { undefined(); } }",
    "class A extends B { } class B extends A { } class Main { public static void main() { } }",
    "class Main { public static void main() { int y = z + 1; print(q); } }",
    "class A { final int v; public void f() { v = 1; } } class Main { public static void main() { } }",
];

#[test]
fn diagnostics_are_deterministic() {
    for src in BROKEN {
        let a = compile(src).unwrap_err();
        let b = compile(src).unwrap_err();
        assert_eq!(a.to_string(), b.to_string());
        assert!(!a.to_string().is_empty());
    }
}

fn arith() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (-50i32..50).prop_map(|n| n.to_string()),
        Just("a".to_string()),
        Just("b".to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "%"]), inner)
            .prop_map(|(l, op, r)| format!("({l} {op} {r})"))
    })
}

fn cond() -> impl Strategy<Value = String> {
    (arith(), prop::sample::select(vec!["<", "<=", "==", "!=", ">", ">="]), arith(), any::<bool>())
        .prop_map(|(l, op, r, neg)| if neg { format!("!({l} {op} {r})") } else { format!("{l} {op} {r}") })
}

fn statement() -> impl Strategy<Value = String> {
    prop_oneof![
        arith().prop_map(|e| format!("print({e});")),
        arith().prop_map(|e| format!("a = {e};")),
        (cond(), arith()).prop_map(|(c, e)| format!("if ({c}) {{ b = {e}; }} else {{ print(\"no\"); }}")),
        cond().prop_map(|c| format!("print({c} && true);")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_programs_round_trip(stmts in prop::collection::vec(statement(), 1..8)) {
        let src = format!(
            "class Main {{ public static void main() {{ int a = 3; int b = -4; {} }} }}",
            stmts.join(" ")
        );
        let p = parse_program(&src).unwrap();
        let again = parse_program(&pretty_print(&p)).unwrap();
        prop_assert_eq!(&p, &again);
        prop_assert!(check_program(&p).is_ok());
    }
}
