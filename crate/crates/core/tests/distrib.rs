mod common;

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use moo_core::distrib::transport::{loopback, Conn, Endpoint};
use moo_core::distrib::*;
use moo_core::interp::{BuiltinTable, ErrorKind, Limits, Machine, RemoteRef};
use moo_core::minioo::CheckedProgram;
use moo_core::xform::compute_transformable_set;
use proptest::prelude::*;

fn instances(out: &DistOutcome) -> HashMap<String, usize> {
    let mut total = HashMap::new();
    for r in out.nodes.values() {
        for (c, n) in &r.instances {
            *total.entry(c.clone()).or_insert(0) += n;
        }
    }
    total
}

/// Placement spreading every remotable class over `n2` and `n3`.
fn spread(original: &CheckedProgram, t: &CheckedProgram) -> Manifest {
    let set = compute_transformable_set(original);
    let homes = ["n2", "n3"];
    let placed: Vec<(&str, &str)> = set
        .transformable
        .iter()
        .filter(|c| remotable(t, c, false, "RAF").is_ok())
        .enumerate()
        .map(|(i, c)| (c.as_str(), homes[i % 2]))
        .collect();
    let statics: Vec<(&str, &str)> = set
        .transformable
        .iter()
        .filter(|c| remotable(t, c, true, "RAF").is_ok())
        .enumerate()
        .map(|(i, c)| (c.as_str(), homes[(i + 1) % 2]))
        .collect();
    common::manifest(&["n1", "n2", "n3"], &placed, &statics)
}

#[test]
fn corpus_spread_over_three_nodes() {
    for (name, src) in common::corpus() {
        let p = moo_core::minioo::compile(&src).unwrap();
        let (_, t) = common::transformed(&p);
        let out = common::deploy(&t, &spread(&p, &t), TransportKind::Loopback);
        assert_eq!(out.error, None, "{name}");
        assert_eq!(out.trace, common::local_trace(&p), "{name}");
    }
}

#[test]
fn instances_are_never_copied() {
    // Each object lives on exactly one node: the per-class totals of a split
    // run equal those of the single-node run.
    for (name, src) in common::corpus() {
        let p = moo_core::minioo::compile(&src).unwrap();
        let (_, t) = common::transformed(&p);
        let single = common::deploy(&t, &common::manifest(&["n1"], &[], &[]), TransportKind::Loopback);
        let split = common::deploy(&t, &spread(&p, &t), TransportKind::Loopback);
        assert_eq!(instances(&single), instances(&split), "{name}");
    }
}

#[test]
fn references_pass_back_and_forth() {
    // Source on n2 calls Sink on n3, which reads Source back while n2 waits.
    let p = common::load("callbacks");
    let (_, t) = common::transformed(&p);
    let m = common::manifest(&["n1", "n2", "n3"], &[("Source", "n2"), ("Sink", "n3")], &[]);
    for kind in [TransportKind::Loopback, TransportKind::Tcp] {
        let out = common::deploy(&t, &m, kind);
        assert_eq!(out.error, None);
        assert_eq!(out.trace, common::local_trace(&p));
        assert!(out.nodes["n2"].served > 0 && out.nodes["n3"].served > 0);
    }
}

#[test]
fn mutual_recursion_split_terminates() {
    let p = common::load("mutual_recursion");
    let (_, t) = common::transformed(&p);
    let m = common::manifest(&["n1", "n2", "n3"], &[("Even", "n2"), ("Odd", "n3")], &[]);
    let out = common::deploy(&t, &m, TransportKind::Tcp);
    assert_eq!(out.error, None);
    assert_eq!(out.trace, ["true", "false", "true", "false"]);
}

#[test]
fn checkpoint_phase_flips_placement() {
    let p = common::load("policy_flip");
    let (_, t) = common::transformed(&p);
    let m = Manifest::parse(
        "entry = \"n1\"\n[nodes.n1]\n[nodes.n2]\n[[phase]]\ncheckpoint = \"flip\"\nplacement = { Widget = \"n2\" }\n",
    )
    .unwrap();
    for kind in [TransportKind::Loopback, TransportKind::Tcp] {
        let out = common::deploy(&t, &m, kind);
        assert_eq!(out.error, None);
        assert_eq!(out.trace, common::local_trace(&p));
        assert_eq!(out.nodes["n1"].instances.get("Widget"), Some(&2));
        assert_eq!(out.nodes["n2"].instances.get("Widget"), Some(&2));
    }
}

#[test]
fn crashed_node_surfaces_as_transport_failure() {
    let (_, t) = common::transformed(&common::load("fig1_shared"));
    let m = common::manifest(&["n1", "n2"], &[("C", "n2")], &[]);
    for kind in [TransportKind::Loopback, TransportKind::Tcp] {
        let opts = DeployOptions {
            transport: kind,
            crash_after: HashMap::from([("n2".to_string(), 3)]),
            reply_timeout: Duration::from_secs(10),
            ..DeployOptions::default()
        };
        let start = Instant::now();
        let out = run_deployment(Arc::new(t.clone()), &m, &opts).unwrap();
        assert!(start.elapsed() < Duration::from_secs(10), "{kind:?} waited for the timeout");
        assert_eq!(out.error.as_ref().map(|e| e.kind), Some(ErrorKind::Transport), "{kind:?}");
        assert!(out.nodes["n2"].crashed);
        let last = out.marked_trace().pop().unwrap();
        assert!(last.starts_with(FAILURE_MARKER), "{last}");
    }
}

#[test]
fn manifest_rejects_non_remotable_placement() {
    let (_, t) = common::transformed(&common::load("inherit_builtins"));
    let m = common::manifest(&["n1", "n2"], &[("Kennel", "n2")], &[]);
    let err = run_deployment(Arc::new(t), &m, &DeployOptions::default()).unwrap_err();
    assert!(matches!(err, DeployError::Manifest(ManifestError::NotRemotable { .. })), "{err}");
}

#[test]
fn untransformed_program_is_rejected() {
    let p = common::load("fig2");
    let err = run_deployment(Arc::new(p), &Manifest::in_process(&["n1"]), &DeployOptions::default()).unwrap_err();
    assert!(matches!(err, DeployError::NotTransformed), "{err}");
}

#[test]
fn unknown_oid_gets_an_error_reply() {
    let (_, t) = common::transformed(&common::load("fig1_shared"));
    let ids = vec!["n1".to_string(), "n2".to_string()];
    let mut eps = loopback(&ids);
    let mut client = eps.remove("n1").unwrap();
    let server_ep = eps.remove("n2").unwrap();
    let stop = Arc::new(AtomicBool::new(false));
    let stop2 = Arc::clone(&stop);
    let server = std::thread::spawn(move || {
        let mut cfg = NodeConfig::new("n2", "n1", PlacementPolicy::all_local("n1"));
        cfg.peers = vec!["n1".into()];
        let mut node = NodeRuntime::new(cfg, Box::new(server_ep), stop2);
        let mut m = Machine::new(Arc::new(t), Arc::new(BuiltinTable::standard()), Limits::default()).unwrap();
        node.serve(&mut m);
    });
    let target = RemoteRef { node: "n2".into(), oid: 99, class: "C".into() };
    let msg = InvocationMessage::invoke(1, "C", "get", target, vec![]);
    client.send(&Conn::Peer("n2".into()), &encode_message(&msg).unwrap()).unwrap();
    let (_, frame) = client.recv(Duration::from_secs(5)).unwrap().expect("a reply");
    let reply = decode_message(&frame).unwrap();
    stop.store(true, Ordering::SeqCst);
    server.join().unwrap();
    assert_eq!(reply.kind, Kind::Err);
    assert_eq!(reply.id, 1);
    assert!(reply.error.unwrap().contains("unknown oid 99"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn wire_round_trip(m in common::wiregen::message()) {
        let frame = encode_message(&m).unwrap();
        prop_assert_eq!(decode_message(&frame).unwrap(), m);
    }

    #[test]
    fn arbitrary_bytes_never_panic(b in prop::collection::vec(any::<u8>(), 0..64)) {
        let _ = decode_message(&b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_placements_preserve_traces(pick in any::<prop::sample::Index>(), seeds in prop::collection::vec(0usize..3, 24)) {
        let corpus = common::corpus();
        let (name, src) = &corpus[pick.index(corpus.len())];
        let p = moo_core::minioo::compile(src).unwrap();
        let (_, t) = common::transformed(&p);
        let set = compute_transformable_set(&p);
        let nodes = ["n1", "n2", "n3"];
        let mut placed = Vec::new();
        let mut statics = Vec::new();
        for (i, c) in set.transformable.iter().enumerate() {
            if remotable(&t, c, false, "RAF").is_ok() {
                placed.push((c.as_str(), nodes[seeds[i % 24]]));
            }
            if remotable(&t, c, true, "RAF").is_ok() {
                statics.push((c.as_str(), nodes[seeds[(i + 7) % 24]]));
            }
        }
        let m = common::manifest(&nodes, &placed, &statics);
        let out = common::deploy(&t, &m, TransportKind::Loopback);
        prop_assert_eq!(out.error, None, "{}", name);
        prop_assert_eq!(out.trace, common::local_trace(&p), "{}", name);
    }
}
