#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use moo_core::distrib::{remotable, run_deployment, DeployOptions, DistOutcome, Manifest, TransportKind};
use moo_core::interp::{run_local, Trace};
use moo_core::minioo::{compile, CheckedProgram};
use moo_core::xform::{transform_program, TransformOutput};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every bundled program as `(stem, source)`, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "moo"))
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            (stem, std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

pub fn source(stem: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(format!("{stem}.moo"))).unwrap_or_else(|e| panic!("{stem}: {e}"))
}

pub fn load(stem: &str) -> CheckedProgram {
    compile(&source(stem)).unwrap_or_else(|e| panic!("{stem}: {e}"))
}

pub fn raf() -> Vec<String> {
    vec!["RAF".to_string()]
}

pub fn transform(p: &CheckedProgram) -> TransformOutput {
    transform_program(p, &raf()).unwrap_or_else(|e| panic!("{e}"))
}

/// The transformed program as text and as a re-checked program.
pub fn transformed(p: &CheckedProgram) -> (String, CheckedProgram) {
    let text = transform(p).text();
    let t = compile(&text).unwrap_or_else(|e| panic!("transformed output fails to compile: {e}\n{text}"));
    (text, t)
}

pub fn local_trace(p: &CheckedProgram) -> Trace {
    match run_local(p) {
        Ok(t) => t,
        Err(f) => panic!("local run failed: {} after {:?}", f.error, f.trace),
    }
}

pub fn manifest(nodes: &[&str], placement: &[(&str, &str)], statics: &[(&str, &str)]) -> Manifest {
    let mut s = format!("entry = \"{}\"\n", nodes[0]);
    for n in nodes {
        writeln!(s, "[nodes.{n}]").unwrap();
    }
    s.push_str("[placement]\n");
    for (c, n) in placement {
        writeln!(s, "{c} = \"{n}\"").unwrap();
    }
    s.push_str("[statics]\n");
    for (c, n) in statics {
        writeln!(s, "{c} = \"{n}\"").unwrap();
    }
    Manifest::parse(&s).unwrap_or_else(|e| panic!("{e}\n{s}"))
}

/// The three standard configurations over a transformed program:
/// everything local, one class's instances on `n2`, every static part on `n2`.
pub fn standard_policies(original: &CheckedProgram, t: &CheckedProgram) -> Vec<(String, Manifest)> {
    let set = moo_core::xform::compute_transformable_set(original);
    let entry = &original.entry.class;
    let instance_ok: Vec<&String> = set.transformable.iter().filter(|c| remotable(t, c, false, "RAF").is_ok()).collect();
    let statics_ok: Vec<&String> = set.transformable.iter().filter(|c| remotable(t, c, true, "RAF").is_ok()).collect();
    let one = instance_ok.iter().find(|c| *c != &entry).or(instance_ok.first()).expect("a remotable class");

    let statics: Vec<(&str, &str)> = statics_ok.iter().map(|c| (c.as_str(), "n2")).collect();
    vec![
        ("all-local".to_string(), manifest(&["n1", "n2"], &[], &[])),
        (format!("{one}-remote"), manifest(&["n1", "n2"], &[(one.as_str(), "n2")], &[])),
        ("statics-remote".to_string(), manifest(&["n1", "n2"], &[], &statics)),
    ]
}

pub fn deploy(t: &CheckedProgram, m: &Manifest, transport: TransportKind) -> DistOutcome {
    let opts = DeployOptions { transport, ..DeployOptions::default() };
    run_deployment(Arc::new(t.clone()), m, &opts).unwrap_or_else(|e| panic!("deployment failed: {e}"))
}

pub mod graphs;
pub mod wiregen;
