//! One node of a deployment: a machine plus the hooks that route creation,
//! discovery and invocation according to the placement policy.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use indexmap::IndexMap;

use crate::interp::{ErrorKind, Machine, RemoteRef, RuntimeError, RuntimeHooks, Value};
use crate::minioo::ast::Pos;
use crate::xform::names::{self, Role};

use super::policy::{Location, Phase, PlacementPolicy};
use super::registry::Registry;
use super::transport::{Conn, Endpoint, TransportError};
use super::wire::{decode_message, encode_message, InvocationMessage, Kind, TaggedValue};

/// Pseudo-classes addressed at oid 0.
pub const CONSOLE: &str = "$console";
pub const RUNTIME: &str = "$runtime";

#[derive(Debug, Clone)]
pub struct NodeConfig {
    pub id: String,
    /// The node running the entry method; it owns the trace.
    pub entry: String,
    pub peers: Vec<String>,
    pub protocol: String,
    pub policy: PlacementPolicy,
    pub phases: Vec<Phase>,
    pub reply_timeout: Duration,
    pub poll: Duration,
    /// Drop dead, without replying, on receiving request number N+1.
    pub crash_after: Option<u64>,
}

impl NodeConfig {
    pub fn new(id: &str, entry: &str, policy: PlacementPolicy) -> Self {
        NodeConfig {
            id: id.to_string(),
            entry: entry.to_string(),
            peers: Vec::new(),
            protocol: "RAF".to_string(),
            policy,
            phases: Vec::new(),
            reply_timeout: Duration::from_secs(30),
            poll: Duration::from_millis(5),
            crash_after: None,
        }
    }
}

/// Per-node observations after a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeReport {
    pub node: String,
    /// Exported instances per source class.
    pub exported: IndexMap<String, usize>,
    /// Classes whose static implementation this node exported.
    pub singletons: Vec<String>,
    /// `A_O_Local` objects living here, per source class.
    pub instances: IndexMap<String, usize>,
    pub clinit_runs: IndexMap<String, u32>,
    pub served: u64,
    pub crashed: bool,
}

#[derive(Debug)]
pub enum ServeExit {
    Stopped,
    Crashed,
    Transport(TransportError),
}

pub struct NodeRuntime {
    pub cfg: NodeConfig,
    endpoint: Box<dyn Endpoint>,
    registry: Registry,
    next_id: u64,
    stash: HashMap<u64, InvocationMessage>,
    proxies: HashMap<RemoteRef, usize>,
    static_proxies: HashMap<String, usize>,
    applied: Vec<bool>,
    served: u64,
    crashed: bool,
    stop: Arc<AtomicBool>,
}

fn transport(node: &str, e: impl std::fmt::Display, pos: Pos) -> RuntimeError {
    RuntimeError::new(ErrorKind::Transport, pos, format!("node `{node}`: {e}"))
}

fn error_text(e: &RuntimeError) -> String {
    format!("{}: {}", e.kind.label(), e.message)
}

fn error_from_text(text: &str, pos: Pos) -> RuntimeError {
    match text.split_once(": ").and_then(|(l, m)| ErrorKind::from_label(l).map(|k| (k, m))) {
        Some((kind, msg)) => RuntimeError::new(kind, pos, msg),
        None => RuntimeError::new(ErrorKind::Remote, pos, text),
    }
}

fn service(node: &str, class: &str) -> RemoteRef {
    RemoteRef { node: node.to_string(), oid: 0, class: class.to_string() }
}

impl NodeRuntime {
    pub fn new(cfg: NodeConfig, endpoint: Box<dyn Endpoint>, stop: Arc<AtomicBool>) -> Self {
        let applied = vec![false; cfg.phases.len()];
        NodeRuntime {
            registry: Registry::new(cfg.id.clone()),
            cfg,
            endpoint,
            next_id: 1,
            stash: HashMap::new(),
            proxies: HashMap::new(),
            static_proxies: HashMap::new(),
            applied,
            served: 0,
            crashed: false,
            stop,
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn report(&self, m: &Machine) -> NodeReport {
        let mut instances = IndexMap::new();
        for o in m.objects() {
            if let Some(Role::OLocal(base)) = names::role(&o.class) {
                *instances.entry(base.to_string()).or_insert(0) += 1;
            }
        }
        NodeReport {
            node: self.cfg.id.clone(),
            exported: self.registry.instances_by_class(),
            singletons: self.registry.singleton_classes(),
            instances,
            clinit_runs: m.clinit_runs.clone(),
            served: self.served,
            crashed: self.crashed,
        }
    }

    /// Handles requests until stopped.
    pub fn serve(&mut self, m: &mut Machine) -> ServeExit {
        while !self.stop.load(Ordering::SeqCst) {
            match self.endpoint.recv(self.cfg.poll) {
                Ok(Some((conn, frame))) => {
                    let Ok(msg) = decode_message(&frame) else { continue };
                    if !msg.kind.is_request() {
                        self.stash.insert(msg.id, msg);
                        continue;
                    }
                    if self.cfg.crash_after == Some(self.served) {
                        self.crashed = true;
                        return ServeExit::Crashed;
                    }
                    self.handle(m, conn, msg);
                }
                Ok(None) => {}
                Err(e) => return ServeExit::Transport(e),
            }
        }
        ServeExit::Stopped
    }

    fn handle(&mut self, m: &mut Machine, conn: Conn, msg: InvocationMessage) {
        self.served += 1;
        let id = msg.id;
        let reply = match self.execute(m, msg) {
            Ok(result) => InvocationMessage::reply(id, result),
            Err(e) => InvocationMessage::err(id, error_text(&e)),
        };
        if let Ok(frame) = encode_message(&reply) {
            // The requester may be gone; there is nobody left to tell.
            let _ = self.endpoint.send(&conn, &frame);
        }
    }

    fn execute(&mut self, m: &mut Machine, msg: InvocationMessage) -> Result<Option<TaggedValue>, RuntimeError> {
        let pos = Pos::default();
        let class = msg.class.clone().unwrap_or_default();
        match msg.kind {
            Kind::Make => {
                let id = m.instantiate(self, &names::o_local(&class), Vec::new(), pos)?;
                Ok(Some(TaggedValue::Ref(self.registry.export(id, &class))))
            }
            Kind::Discover => {
                if self.cfg.policy.statics_home(&class) != self.cfg.id {
                    return Err(RuntimeError::new(ErrorKind::Remote, pos, format!("`{}` is not the home of {class}", self.cfg.id)));
                }
                let v = m.local_discover(self, &class, pos)?;
                let Value::Obj(id) = v else { return Err(RuntimeError::new(ErrorKind::Internal, pos, "null singleton")) };
                Ok(Some(TaggedValue::Ref(self.registry.export_singleton(id, &class))))
            }
            Kind::Invoke => {
                let target = msg.target.expect("validated invoke has a target");
                let member = msg.member.expect("validated invoke has a member");
                if target.oid == 0 {
                    return self.service(m, &target.class, &member, msg.args, pos);
                }
                let id = self.registry.resolve(target.oid).ok_or_else(|| {
                    RuntimeError::new(ErrorKind::Remote, pos, format!("unknown oid {} on `{}`", target.oid, self.cfg.id))
                })?;
                let mut args = Vec::with_capacity(msg.args.len() + 1);
                for a in msg.args {
                    args.push(self.local_value(m, a, pos)?);
                }
                let v = if member == "init" && matches!(names::role(&class), Some(Role::OFactory(_))) {
                    args.insert(0, Value::Obj(id));
                    m.call_static(self, &class, "init", args, pos)?
                } else {
                    m.call_method(self, id, &member, args, pos)?
                };
                Ok(Some(self.wire_value(m, v, pos)?))
            }
            Kind::Reply | Kind::Err => Err(RuntimeError::new(ErrorKind::Internal, pos, "reply is not a request")),
        }
    }

    fn service(&mut self, m: &mut Machine, class: &str, member: &str, args: Vec<TaggedValue>, pos: Pos) -> Result<Option<TaggedValue>, RuntimeError> {
        let text = match args.as_slice() {
            [TaggedValue::Str(s)] => s.clone(),
            _ => return Err(RuntimeError::new(ErrorKind::Remote, pos, format!("bad arguments to {class}.{member}"))),
        };
        match (class, member) {
            (CONSOLE, "print") => m.trace.push(text),
            (RUNTIME, "checkpoint") => self.apply_checkpoint(&text),
            _ => return Err(RuntimeError::new(ErrorKind::Remote, pos, format!("no service {class}.{member}"))),
        }
        Ok(Some(TaggedValue::Null))
    }

    fn apply_checkpoint(&mut self, tag: &str) {
        for (i, ph) in self.cfg.phases.iter().enumerate() {
            if !self.applied[i] && ph.checkpoint == tag {
                self.applied[i] = true;
                self.cfg.policy.apply(&ph.placement);
            }
        }
    }

    fn wire_value(&mut self, m: &Machine, v: Value, pos: Pos) -> Result<TaggedValue, RuntimeError> {
        Ok(match v {
            Value::Int(x) => TaggedValue::Int(x),
            Value::Long(x) => TaggedValue::Long(x),
            Value::Bool(b) => TaggedValue::Bool(b),
            Value::Str(s) => TaggedValue::Str(s),
            Value::Null => TaggedValue::Null,
            Value::Remote(r) => TaggedValue::Ref(r),
            Value::Obj(id) => {
                let o = m.object(id);
                match names::role(&o.class) {
                    Some(Role::OLocal(base)) => TaggedValue::Ref(self.registry.export(id, base)),
                    Some(Role::CLocal(base)) => TaggedValue::Ref(self.registry.export_singleton(id, base)),
                    Some(Role::OProxy(..) | Role::CProxy(..)) => match o.fields.get(names::HANDLE) {
                        Some(Value::Remote(r)) => TaggedValue::Ref(r.clone()),
                        _ => return Err(RuntimeError::new(ErrorKind::NullDeref, pos, "unbound proxy")),
                    },
                    _ => {
                        return Err(RuntimeError::new(
                            ErrorKind::Remote,
                            pos,
                            format!("an instance of non-transformed class {} cannot leave its node", o.class),
                        ))
                    }
                }
            }
        })
    }

    fn local_value(&mut self, m: &mut Machine, v: TaggedValue, pos: Pos) -> Result<Value, RuntimeError> {
        Ok(match v {
            TaggedValue::Int(x) => Value::Int(x),
            TaggedValue::Long(x) => Value::Long(x),
            TaggedValue::Bool(b) => Value::Bool(b),
            TaggedValue::Str(s) => Value::Str(s),
            TaggedValue::Null => Value::Null,
            TaggedValue::Ref(r) if r.node == self.cfg.id => Value::Obj(
                self.registry
                    .resolve(r.oid)
                    .ok_or_else(|| RuntimeError::new(ErrorKind::Remote, pos, format!("unknown oid {} on `{}`", r.oid, r.node)))?,
            ),
            TaggedValue::Ref(r) => Value::Obj(self.bind(m, r, false, pos)?),
        })
    }

    /// A proxy holding `r`; one per remote object.
    fn bind(&mut self, m: &mut Machine, r: RemoteRef, statics: bool, pos: Pos) -> Result<usize, RuntimeError> {
        if let Some(id) = self.proxies.get(&r) {
            return Ok(*id);
        }
        let class = if statics { names::c_proxy(&r.class, &self.cfg.protocol) } else { names::o_proxy(&r.class, &self.cfg.protocol) };
        if m.program.class(&class).is_none() {
            return Err(RuntimeError::new(ErrorKind::Remote, pos, format!("program has no {class}")));
        }
        let id = m.instantiate(self, &class, Vec::new(), pos)?;
        m.set_field(id, names::HANDLE, Value::Remote(r.clone()));
        self.proxies.insert(r, id);
        Ok(id)
    }

    /// Sends a request and waits for its reply, serving incoming requests meanwhile.
    fn request(&mut self, m: &mut Machine, to: &str, mut msg: InvocationMessage, pos: Pos) -> Result<Option<TaggedValue>, RuntimeError> {
        let id = self.next_id;
        self.next_id += 1;
        msg.id = id;
        let frame = encode_message(&msg).map_err(|e| RuntimeError::new(ErrorKind::Remote, pos, e.to_string()))?;
        self.endpoint.send(&Conn::Peer(to.to_string()), &frame).map_err(|e| transport(to, e, pos))?;
        let started = Instant::now();
        loop {
            if let Some(reply) = self.stash.remove(&id) {
                return match reply.kind {
                    Kind::Err => Err(error_from_text(reply.error.as_deref().unwrap_or_default(), pos)),
                    _ => Ok(reply.result),
                };
            }
            match self.endpoint.recv(self.cfg.poll) {
                Ok(Some((conn, frame))) => match decode_message(&frame) {
                    Ok(msg) if msg.kind.is_request() => self.handle(m, conn, msg),
                    Ok(msg) => {
                        self.stash.insert(msg.id, msg);
                    }
                    Err(_) => {}
                },
                Ok(None) => {
                    if !self.endpoint.peer_alive(to) {
                        return Err(transport(to, "connection lost while awaiting reply", pos));
                    }
                    if started.elapsed() > self.cfg.reply_timeout {
                        return Err(transport(to, format!("no reply within {:?}", self.cfg.reply_timeout), pos));
                    }
                }
                Err(e) => return Err(transport(to, e, pos)),
            }
        }
    }

    fn expect_ref(v: Option<TaggedValue>, pos: Pos) -> Result<RemoteRef, RuntimeError> {
        match v {
            Some(TaggedValue::Ref(r)) => Ok(r),
            other => Err(RuntimeError::new(ErrorKind::Remote, pos, format!("expected a reference, got {other:?}"))),
        }
    }
}

impl RuntimeHooks for NodeRuntime {
    fn create(&mut self, m: &mut Machine, class: &str, pos: Pos) -> Result<Value, RuntimeError> {
        match self.cfg.policy.location(class).clone() {
            Location::Remote(n) if n != self.cfg.id => {
                let reply = self.request(m, &n, InvocationMessage::make(0, class), pos)?;
                let r = Self::expect_ref(reply, pos)?;
                Ok(Value::Obj(self.bind(m, r, false, pos)?))
            }
            _ => Ok(Value::Obj(m.instantiate(self, &names::o_local(class), Vec::new(), pos)?)),
        }
    }

    fn discover(&mut self, m: &mut Machine, class: &str, pos: Pos) -> Result<Value, RuntimeError> {
        let home = self.cfg.policy.statics_home(class).to_string();
        if home == self.cfg.id {
            return m.local_discover(self, class, pos);
        }
        if let Some(id) = self.static_proxies.get(class) {
            return Ok(Value::Obj(*id));
        }
        let reply = self.request(m, &home, InvocationMessage::discover(0, class), pos)?;
        let r = Self::expect_ref(reply, pos)?;
        let id = self.bind(m, r, true, pos)?;
        self.static_proxies.insert(class.to_string(), id);
        Ok(Value::Obj(id))
    }

    fn remote_invoke(&mut self, m: &mut Machine, target: &RemoteRef, member: &str, args: Vec<Value>, pos: Pos) -> Result<Value, RuntimeError> {
        let mut wire = Vec::with_capacity(args.len());
        for a in args {
            wire.push(self.wire_value(m, a, pos)?);
        }
        let msg = InvocationMessage::invoke(0, &target.class, member, target.clone(), wire);
        match self.request(m, &target.node, msg, pos)? {
            Some(v) => self.local_value(m, v, pos),
            None => Ok(Value::Null),
        }
    }

    fn remote_init(&mut self, m: &mut Machine, factory: &str, args: Vec<Value>, pos: Pos) -> Result<(), RuntimeError> {
        let mut it = args.into_iter();
        let Some(TaggedValue::Ref(target)) = it.next().map(|v| self.wire_value(m, v, pos)).transpose()? else {
            return Err(RuntimeError::new(ErrorKind::Internal, pos, "init target is not a proxy"));
        };
        let mut wire = Vec::new();
        for a in it {
            wire.push(self.wire_value(m, a, pos)?);
        }
        let node = target.node.clone();
        self.request(m, &node, InvocationMessage::invoke(0, factory, "init", target, wire), pos)?;
        Ok(())
    }

    fn emit(&mut self, m: &mut Machine, line: String, pos: Pos) -> Result<(), RuntimeError> {
        if self.cfg.id == self.cfg.entry {
            m.trace.push(line);
            return Ok(());
        }
        let entry = self.cfg.entry.clone();
        let msg = InvocationMessage::invoke(0, CONSOLE, "print", service(&entry, CONSOLE), vec![TaggedValue::Str(line)]);
        self.request(m, &entry, msg, pos)?;
        Ok(())
    }

    fn on_checkpoint(&mut self, m: &mut Machine, tag: &str, pos: Pos) -> Result<(), RuntimeError> {
        self.apply_checkpoint(tag);
        for peer in self.cfg.peers.clone() {
            if peer == self.cfg.id {
                continue;
            }
            let msg = InvocationMessage::invoke(0, RUNTIME, "checkpoint", service(&peer, RUNTIME), vec![TaggedValue::Str(tag.to_string())]);
            self.request(m, &peer, msg, pos)?;
        }
        Ok(())
    }
}
