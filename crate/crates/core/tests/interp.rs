mod common;

use std::sync::Arc;

use moo_core::interp::machine::InitState;
use moo_core::interp::{run_local, run_program, BuiltinTable, ErrorKind, Limits, LocalHooks, Machine, Value};
use moo_core::minioo::ast::Pos;
use moo_core::minioo::compile;

#[test]
fn runs_are_deterministic() {
    for (name, src) in common::corpus() {
        let p = compile(&src).unwrap();
        let (_, t) = common::transformed(&p);
        assert_eq!(run_local(&p).unwrap(), run_local(&p).unwrap(), "{name}");
        assert_eq!(run_local(&t).unwrap(), run_local(&t).unwrap(), "{name}");
    }
}

#[test]
fn discover_yields_one_handle_and_one_clinit() {
    let (_, t) = common::transformed(&common::load("counter_static"));
    let mut m = Machine::new(Arc::new(t), Arc::new(BuiltinTable::standard()), Limits::default()).unwrap();
    let mut h = LocalHooks;
    let first = m.local_discover(&mut h, "Tally", Pos::default()).unwrap();
    for _ in 0..5 {
        assert_eq!(m.local_discover(&mut h, "Tally", Pos::default()).unwrap(), first);
    }
    assert_eq!(m.clinit_runs.get("Tally"), Some(&1));
    assert_eq!(m.clinit_state("Tally"), Some(InitState::Done));
    let probe = m.local_discover(&mut h, "Probe", Pos::default()).unwrap();
    let Value::Obj(probe) = probe else { panic!("{probe:?}") };
    let probe = m.call_method(&mut h, probe, "get_inits", vec![], Pos::default()).unwrap();
    assert_eq!(probe.as_int(), Some(1));
}

fn failure(src: &str) -> (ErrorKind, Vec<String>) {
    let f = run_local(&compile(src).unwrap()).unwrap_err();
    (f.error.kind, f.trace)
}

const FAILING: &[(&str, ErrorKind)] = &[
    (
        "class B { int v; public int get() { return v; } } \
         class Main { public static void main() { B b = new B(); print(b.get()); b = null; print(b.get()); } }",
        ErrorKind::NullDeref,
    ),
    (
        "class L { public static int spin(int n) { while (true) { n = n + 1; } return n; } } \
         class Main { public static void main() { print(1); print(L.spin(0)); } }",
        ErrorKind::StepBudget,
    ),
    (
        "class R { public int down(int n) { return down(n + 1); } } \
         class Main { public static void main() { print(new R().down(0)); } }",
        ErrorKind::StackOverflow,
    ),
    (
        "class D { public static int z; } class Main { public static void main() { print(7); print(7 / D.z); } }",
        ErrorKind::DivByZero,
    ),
];

#[test]
fn failures_are_preserved_by_transformation() {
    for (src, kind) in FAILING {
        let (k, trace) = failure(src);
        assert_eq!(k, *kind, "{src}");
        let text = common::transform(&compile(src).unwrap()).text();
        let (tk, ttrace) = failure(&text);
        assert_eq!((tk, ttrace), (k, trace), "{text}");
    }
}

#[test]
fn step_budget_is_configurable() {
    let p = Arc::new(common::load("loops"));
    let tight = Limits { step_budget: 1000, ..Limits::default() };
    let f = run_program(p.clone(), &mut LocalHooks, Arc::new(BuiltinTable::standard()), tight).unwrap_err();
    assert_eq!(f.error.kind, ErrorKind::StepBudget);
    assert!(run_program(p, &mut LocalHooks, Arc::new(BuiltinTable::standard()), Limits::default()).is_ok());
}

#[test]
fn missing_builtin_is_reported_before_running() {
    let p = Arc::new(common::load("builtins_counter"));
    let f = run_program(p, &mut LocalHooks, Arc::new(BuiltinTable::empty()), Limits::default()).unwrap_err();
    assert_eq!(f.error.kind, ErrorKind::UnknownBuiltin);
    assert!(f.trace.is_empty());
}
