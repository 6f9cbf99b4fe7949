//! Deployment harnesses: every node of a manifest as an isolated in-process
//! instance (loopback or TCP), or a single node of a multi-process
//! deployment.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use indexmap::IndexMap;
use thiserror::Error;

use crate::interp::{BuiltinTable, ErrorKind, Limits, Machine, RuntimeError, Trace, INTERP_STACK};
use crate::minioo::typed::CheckedProgram;

use super::node::{NodeConfig, NodeReport, NodeRuntime};
use super::policy::{Manifest, ManifestError};
use super::transport::{self, Endpoint, TcpEndpoint, TransportError};

pub const FAILURE_MARKER: &str = "!transport-failure";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    Loopback,
    Tcp,
}

#[derive(Debug, Clone)]
pub struct DeployOptions {
    pub transport: TransportKind,
    pub limits: Limits,
    pub builtins: Arc<BuiltinTable>,
    pub reply_timeout: Duration,
    /// Node id -> number of requests it serves before dying.
    pub crash_after: HashMap<String, u64>,
}

impl Default for DeployOptions {
    fn default() -> Self {
        DeployOptions {
            transport: TransportKind::Loopback,
            limits: Limits::default(),
            builtins: Arc::new(BuiltinTable::standard()),
            reply_timeout: Duration::from_secs(30),
            crash_after: HashMap::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum DeployError {
    #[error("run-dist needs a transformed program")]
    NotTransformed,
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("transport setup: {0}")]
    Transport(#[from] TransportError),
    #[error("node `{0}` is not in the manifest")]
    UnknownNode(String),
    #[error("{0}")]
    Runtime(RuntimeError),
}

#[derive(Debug, Clone)]
pub struct DistOutcome {
    /// Lines printed anywhere, in program order, as seen by the entry node.
    pub trace: Trace,
    pub error: Option<RuntimeError>,
    pub nodes: IndexMap<String, NodeReport>,
}

impl DistOutcome {
    /// The trace with a final marker line when the run died of a transport failure.
    pub fn marked_trace(&self) -> Trace {
        let mut t = self.trace.clone();
        if let Some(e) = self.error.as_ref().filter(|e| e.kind == ErrorKind::Transport) {
            t.push(format!("{FAILURE_MARKER}: {}", e.message));
        }
        t
    }
}

fn node_config(manifest: &Manifest, id: &str, opts: &DeployOptions) -> NodeConfig {
    let mut cfg = NodeConfig::new(id, &manifest.entry, manifest.policy.clone());
    cfg.peers = manifest.node_ids();
    cfg.protocol = manifest.protocol.clone();
    cfg.phases = manifest.phases.clone();
    cfg.reply_timeout = opts.reply_timeout;
    cfg.crash_after = opts.crash_after.get(id).copied();
    cfg
}

fn check(p: &CheckedProgram, manifest: &Manifest) -> Result<(), DeployError> {
    if !p.is_transformed() {
        return Err(DeployError::NotTransformed);
    }
    manifest.validate_for(p)?;
    Ok(())
}

struct NodeResult {
    id: String,
    report: NodeReport,
    run: Option<Result<(), RuntimeError>>,
    trace: Trace,
}

fn spawn_node(
    p: Arc<CheckedProgram>,
    cfg: NodeConfig,
    endpoint: Box<dyn Endpoint>,
    opts: &DeployOptions,
    stop: Arc<AtomicBool>,
) -> thread::JoinHandle<Result<NodeResult, RuntimeError>> {
    let (builtins, limits) = (Arc::clone(&opts.builtins), opts.limits);
    thread::Builder::new()
        .name(format!("moo-node-{}", cfg.id))
        .stack_size(INTERP_STACK)
        .spawn(move || {
            let is_entry = cfg.id == cfg.entry;
            let id = cfg.id.clone();
            let mut m = Machine::new(p, builtins, limits)?;
            let mut node = NodeRuntime::new(cfg, endpoint, Arc::clone(&stop));
            let run = if is_entry {
                let r = m.run_entry(&mut node);
                stop.store(true, Ordering::SeqCst);
                Some(r)
            } else {
                node.serve(&mut m);
                None
            };
            let report = node.report(&m);
            Ok(NodeResult { id, report, run, trace: std::mem::take(&mut m.trace) })
        })
        .expect("spawn node thread")
}

/// Runs every node of `manifest` in this process and returns the entry trace.
pub fn run_deployment(p: Arc<CheckedProgram>, manifest: &Manifest, opts: &DeployOptions) -> Result<DistOutcome, DeployError> {
    check(&p, manifest)?;
    let ids = manifest.node_ids();
    let mut endpoints: Vec<(String, Box<dyn Endpoint>)> = Vec::new();
    match opts.transport {
        TransportKind::Loopback => {
            let mut eps = transport::loopback(&ids);
            for id in &ids {
                endpoints.push((id.clone(), Box::new(eps.remove(id).expect("endpoint per node"))));
            }
        }
        TransportKind::Tcp => {
            let mut bound = Vec::new();
            for n in &manifest.nodes {
                bound.push((n.id.clone(), TcpEndpoint::bind(&n.address)?));
            }
            let addrs: HashMap<String, _> = bound.iter().map(|(id, ep)| (id.clone(), ep.local_addr())).collect();
            for (id, mut ep) in bound {
                ep.connect_to(addrs.clone());
                endpoints.push((id, Box::new(ep)));
            }
        }
    }
    let stop = Arc::new(AtomicBool::new(false));
    let handles: Vec<_> = endpoints
        .into_iter()
        .map(|(id, ep)| spawn_node(Arc::clone(&p), node_config(manifest, &id, opts), ep, opts, Arc::clone(&stop)))
        .collect();
    let mut out = DistOutcome { trace: Vec::new(), error: None, nodes: IndexMap::new() };
    let mut setup_error = None;
    for h in handles {
        match h.join().expect("node thread panicked") {
            Ok(r) => {
                if let Some(run) = r.run {
                    out.trace = r.trace;
                    out.error = run.err();
                }
                out.nodes.insert(r.id, r.report);
            }
            Err(e) => {
                stop.store(true, Ordering::SeqCst);
                setup_error = Some(e);
            }
        }
    }
    match setup_error {
        Some(e) => Err(DeployError::Runtime(e)),
        None => Ok(out),
    }
}

fn tcp_endpoint(manifest: &Manifest, id: &str) -> Result<TcpEndpoint, DeployError> {
    let me = manifest.nodes.iter().find(|n| n.id == id).ok_or_else(|| DeployError::UnknownNode(id.to_string()))?;
    let mut ep = TcpEndpoint::bind(&me.address)?;
    let mut peers = HashMap::new();
    for n in &manifest.nodes {
        peers.insert(n.id.clone(), transport::resolve(&n.address)?);
    }
    ep.connect_to(peers);
    Ok(ep)
}

/// One node of a multi-process TCP deployment. A non-entry node serves
/// until `stop` is set or the process ends; the entry node runs the program.
pub fn run_node_process(
    p: Arc<CheckedProgram>,
    manifest: &Manifest,
    id: &str,
    opts: &DeployOptions,
    stop: Arc<AtomicBool>,
) -> Result<DistOutcome, DeployError> {
    check(&p, manifest)?;
    let ep = tcp_endpoint(manifest, id)?;
    let r = spawn_node(p, node_config(manifest, id, opts), Box::new(ep), opts, stop)
        .join()
        .expect("node thread panicked")
        .map_err(DeployError::Runtime)?;
    let mut nodes = IndexMap::new();
    nodes.insert(r.id, r.report);
    Ok(DistOutcome { trace: r.trace, error: r.run.and_then(Result::err), nodes })
}
