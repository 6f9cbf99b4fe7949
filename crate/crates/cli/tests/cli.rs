use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn corpus(stem: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../corpus/{stem}.moo"))
}

fn moo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moo")).args(args).output().expect("moo runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_prints_the_trace() {
    let o = moo(&["run", s(&corpus("fig2"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "6\n42\n");
}

#[test]
fn transform_writes_program_and_report() {
    let dir = TempDir::new().unwrap();
    let o = moo(&["transform", s(&corpus("fig2")), "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("fig2.moo")).unwrap();
    for needle in [
        "interface X_O_Int",
        "class X_C_Local implements X_C_Int",
        "that.set_y(y);",
        "Z_O_Factory.init($t0, Y_C_Factory.discover().get_K());",
        "that.set_z($t0);",
    ] {
        assert!(text.contains(needle), "missing {needle}");
    }
    let report = std::fs::read_to_string(dir.path().join("fig2.report.json")).unwrap();
    assert!(report.starts_with('{') && report.contains("\"transformable\""), "{report}");
    // The transformed file runs with the same trace.
    let o = moo(&["run", s(&dir.path().join("fig2.moo"))]);
    assert_eq!(stdout(&o), "6\n42\n");
}

#[test]
fn builtin_only_program_transforms_to_itself() {
    let dir = TempDir::new().unwrap();
    let src = "builtin class Boot {\n    public static void main();\n}\n\nentry Boot.main;\n";
    let input = write(&dir, "boot.moo", src);
    let out = dir.path().join("out");
    let o = moo(&["transform", s(&input), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out.join("boot.moo")).unwrap(), src);
}

#[test]
fn syntax_error_exits_one() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "bad.moo", "class { }");
    let o = moo(&["transform", s(&input), "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bad.moo:1:7"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&moo(&["run"])), 1);
    assert_eq!(code(&moo(&["frobnicate"])), 1);
    assert_eq!(code(&moo(&["transform", s(&corpus("fig2")), "--protocols", "SOAP"])), 1);
    assert_eq!(code(&moo(&["--help"])), 0);
}

#[test]
fn explain_lists_reasons() {
    let o = moo(&["explain", s(&corpus("native_class"))]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let (yes, no) = out.split_once("non-transformable:").unwrap();
    assert!(yes.contains("Table") && yes.contains("Main"));
    assert!(no.contains("Hasher") && no.contains("native-method"));
    assert!(no.contains("Salt") && no.contains("referenced-by-rule"));

    let o = moo(&["explain", s(&corpus("fig2"))]);
    let out = stdout(&o);
    let no = out.split_once("non-transformable:").unwrap().1;
    assert!(no.trim().is_empty(), "{out}");
}

#[test]
fn runtime_error_exits_two() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "nul.moo", "class B { int v; } class Main { public static void main() { B b = null; print(1); print(b.v); } }");
    let o = moo(&["run", s(&input)]);
    assert_eq!(code(&o), 2);
    assert_eq!(stdout(&o), "1\n");
    assert!(stderr(&o).contains("runtime error"), "{}", stderr(&o));
    let o = moo(&["run", s(&corpus("loops")), "--step-budget", "100"]);
    assert_eq!(code(&o), 2);
}

fn fig1_manifest(dir: &TempDir, n2: &str) -> PathBuf {
    write(
        dir,
        "fig1.toml",
        &format!("entry = \"n1\"\n[nodes.n1]\naddress = \"127.0.0.1:0\"\n[nodes.n2]\naddress = \"{n2}\"\n[placement]\nC = \"n2\"\n"),
    )
}

#[test]
fn run_dist_shared_counter_over_both_transports() {
    let dir = TempDir::new().unwrap();
    let m = fig1_manifest(&dir, "127.0.0.1:0");
    for transport in ["loopback", "tcp"] {
        let o = moo(&["run-dist", s(&corpus("fig1_shared")), "--manifest", s(&m), "--transport", transport, "-v"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(stdout(&o), "10\n11\n11\n");
        assert!(stderr(&o).contains("node n2: served"), "{}", stderr(&o));
    }
}

#[test]
fn all_local_manifest_matches_run() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "local.toml", "entry = \"n1\"\n[nodes.n1]\n[nodes.n2]\n");
    for stem in ["tree", "clinit_chain", "factory_nesting"] {
        let a = moo(&["run", s(&corpus(stem))]);
        let b = moo(&["run-dist", s(&corpus(stem)), "--manifest", s(&m)]);
        assert_eq!(code(&b), 0);
        assert_eq!(stdout(&a), stdout(&b), "{stem}");
    }
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn run_dist_with_separate_processes() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (free_port(), free_port());
    let m = write(
        &dir,
        "procs.toml",
        &format!(
            "entry = \"n1\"\n[nodes.n1]\naddress = \"127.0.0.1:{a}\"\n[nodes.n2]\naddress = \"127.0.0.1:{b}\"\n\
             [placement]\nC = \"n2\"\n[statics]\nMain = \"n2\"\n"
        ),
    );
    let o = moo(&["run-dist", s(&corpus("fig1_shared")), "--manifest", s(&m), "--harness", "processes"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "10\n11\n11\n");
}

#[test]
fn unreachable_node_exits_three() {
    let dir = TempDir::new().unwrap();
    let m = fig1_manifest(&dir, &format!("127.0.0.1:{}", free_port()));
    let o = moo(&["run-dist", s(&corpus("fig1_shared")), "--manifest", s(&m), "--node", "n1"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stdout(&o).contains("!transport-failure"), "{}", stdout(&o));
}

#[test]
fn check_equiv_passes_with_and_without_manifest() {
    let dir = TempDir::new().unwrap();
    let m = fig1_manifest(&dir, "127.0.0.1:0");
    let o = moo(&["check-equiv", s(&corpus("fig1_shared"))]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = moo(&["check-equiv", s(&corpus("fig1_shared")), "--manifest", s(&m)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("distributed"), "{}", stdout(&o));
}

#[test]
fn check_equiv_flags_a_corrupted_transformation() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("t");
    assert_eq!(code(&moo(&["transform", s(&corpus("fig1_shared")), "--out", s(&out)])), 0);
    let path = out.join("fig1_shared.moo");
    let text = std::fs::read_to_string(&path).unwrap();
    let bad = text.replacen("get_c().add(10);", "get_c().add(9);", 1);
    assert_ne!(bad, text);
    std::fs::write(&path, bad).unwrap();
    let o = moo(&["check-equiv", s(&corpus("fig1_shared")), "--transformed", s(&path)]);
    assert_eq!(code(&o), 4, "{}", stdout(&o));
    let diff = stdout(&o);
    assert!(diff.contains("- 10") && diff.contains("+ 9"), "{diff}");
}

#[test]
fn whole_corpus_is_equivalent() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "moo") {
            let o = moo(&["check-equiv", s(&p)]);
            assert_eq!(code(&o), 0, "{}: {}", p.display(), stdout(&o));
            n += 1;
        }
    }
    assert!(n >= 20);
}
