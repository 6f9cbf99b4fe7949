use std::collections::HashMap;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::minioo::ast::{BinOp, Pos, UnOp};
use crate::minioo::typed::*;
use crate::xform::names::{self, Role};

use super::builtins::{BuiltinTable, NativeCall, CTOR};
use super::hooks::RuntimeHooks;
use super::value::{ObjId, Value};
use super::{ErrorKind, RuntimeError};

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;
pub const DEFAULT_MAX_DEPTH: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitState {
    InProgress,
    Done,
}

#[derive(Debug, Clone)]
pub struct Object {
    pub class: String,
    pub fields: IndexMap<String, Value>,
    /// State of builtin instances.
    pub native: Value,
    /// Final fields are writable only while unsealed.
    pub sealed: bool,
    init_depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub step_budget: u64,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { step_budget: DEFAULT_STEP_BUDGET, max_depth: DEFAULT_MAX_DEPTH }
    }
}

enum Flow {
    Normal,
    Return(Value),
}

struct Frame {
    this: Option<ObjId>,
    locals: Vec<(String, Value)>,
}

impl Frame {
    fn new(this: Option<ObjId>) -> Self {
        Frame { this, locals: Vec::new() }
    }

    fn get(&self, name: &str) -> Option<&Value> {
        self.locals.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn set(&mut self, name: &str, v: Value) -> bool {
        match self.locals.iter_mut().rev().find(|(n, _)| n == name) {
            Some(slot) => {
                slot.1 = v;
                true
            }
            None => false,
        }
    }
}

type R<T> = Result<T, RuntimeError>;

fn internal(pos: Pos, msg: impl Into<String>) -> RuntimeError {
    RuntimeError::new(ErrorKind::Internal, pos, msg)
}

/// One address space: heap, static state and the trace.
pub struct Machine {
    pub program: Arc<CheckedProgram>,
    builtins: Arc<BuiltinTable>,
    heap: Vec<Object>,
    statics: HashMap<String, IndexMap<String, Value>>,
    class_init: HashMap<String, InitState>,
    /// `clinit` state per source class in transformed programs.
    clinit: HashMap<String, InitState>,
    /// How many times each class's `clinit` has started.
    pub clinit_runs: IndexMap<String, u32>,
    pub trace: Vec<String>,
    steps: u64,
    depth: usize,
    limits: Limits,
}

impl Machine {
    /// Fails when a builtin or native member has no table entry.
    pub fn new(program: Arc<CheckedProgram>, builtins: Arc<BuiltinTable>, limits: Limits) -> R<Machine> {
        let mut statics = HashMap::new();
        for c in program.classes.values() {
            let mut store = IndexMap::new();
            for f in &c.static_fields {
                let v = match (c.is_builtin, builtins.static_value(&c.name, &f.name)) {
                    (true, Some(v)) => v.clone(),
                    (true, None) => {
                        return Err(RuntimeError::new(
                            ErrorKind::UnknownBuiltin,
                            c.pos,
                            format!("no runtime value for builtin field {}.{}", c.name, f.name),
                        ))
                    }
                    (false, _) => Value::default_for(&f.ty),
                };
                store.insert(f.name.clone(), v);
            }
            statics.insert(c.name.clone(), store);
            for m in c.methods.iter().chain(&c.static_methods) {
                if (c.is_builtin || m.is_native) && builtins.lookup(&c.name, &m.name, c.is_builtin).is_none() {
                    return Err(RuntimeError::new(
                        ErrorKind::UnknownBuiltin,
                        m.pos,
                        format!("no native implementation for {}.{}", c.name, m.name),
                    ));
                }
            }
            if c.is_builtin && c.ctors.iter().any(|k| !k.is_default) && builtins.lookup(&c.name, CTOR, true).is_none() {
                return Err(RuntimeError::new(
                    ErrorKind::UnknownBuiltin,
                    c.pos,
                    format!("no native constructor for {}", c.name),
                ));
            }
        }
        let class_init = program
            .classes
            .values()
            .filter(|c| c.is_builtin)
            .map(|c| (c.name.clone(), InitState::Done))
            .collect();
        Ok(Machine {
            program,
            builtins,
            heap: Vec::new(),
            statics,
            class_init,
            clinit: HashMap::new(),
            clinit_runs: IndexMap::new(),
            trace: Vec::new(),
            steps: 0,
            depth: 0,
            limits,
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn object(&self, id: ObjId) -> &Object {
        &self.heap[id]
    }

    pub fn objects(&self) -> impl Iterator<Item = &Object> {
        self.heap.iter()
    }

    pub fn object_count(&self) -> usize {
        self.heap.len()
    }

    pub fn set_field(&mut self, id: ObjId, name: &str, v: Value) {
        if let Some(slot) = self.heap[id].fields.get_mut(name) {
            *slot = v;
        }
    }

    pub fn seal(&mut self, id: ObjId) {
        self.heap[id].sealed = true;
    }

    /// Runs the program's entry method.
    pub fn run_entry(&mut self, h: &mut dyn RuntimeHooks) -> R<()> {
        let entry = self.program.entry.clone();
        self.call_static(h, &entry.class, &entry.member, Vec::new(), Pos::default())?;
        Ok(())
    }

    fn tick(&mut self, pos: Pos) -> R<()> {
        self.steps += 1;
        if self.steps > self.limits.step_budget {
            return Err(RuntimeError::new(
                ErrorKind::StepBudget,
                pos,
                format!("step budget of {} exceeded", self.limits.step_budget),
            ));
        }
        Ok(())
    }

    fn enter(&mut self, pos: Pos) -> R<()> {
        if self.depth >= self.limits.max_depth {
            return Err(RuntimeError::new(
                ErrorKind::StackOverflow,
                pos,
                format!("call depth limit of {} exceeded", self.limits.max_depth),
            ));
        }
        self.depth += 1;
        Ok(())
    }

    fn alloc(&mut self, class: &str) -> ObjId {
        let fields = self
            .program
            .all_fields(class)
            .into_iter()
            .map(|f| (f.name.clone(), Value::default_for(&f.ty)))
            .collect();
        self.heap.push(Object { class: class.to_string(), fields, native: Value::Null, sealed: false, init_depth: 0 });
        self.heap.len() - 1
    }

    /// Allocates and constructs an object. Generated `_O_Local`/`_C_Local`
    /// instances stay unsealed until their factory initialisation ends.
    pub fn instantiate(&mut self, h: &mut dyn RuntimeHooks, class: &str, args: Vec<Value>, pos: Pos) -> R<ObjId> {
        let id = self.alloc(class);
        self.construct(h, id, class, args, pos)?;
        if !matches!(names::role(class), Some(Role::OLocal(_) | Role::CLocal(_))) {
            self.seal(id);
        }
        Ok(id)
    }

    fn construct(&mut self, h: &mut dyn RuntimeHooks, id: ObjId, class: &str, args: Vec<Value>, pos: Pos) -> R<()> {
        let prog = Arc::clone(&self.program);
        let c = prog.class(class).ok_or_else(|| internal(pos, format!("unknown class {class}")))?;
        if c.is_builtin {
            if let Some(f) = self.builtins.lookup(class, CTOR, true) {
                let state = f(&mut NativeCall { state: None, args: &args })
                    .map_err(|m| RuntimeError::new(ErrorKind::Builtin, pos, format!("{class}: {m}")))?;
                self.heap[id].native = state;
            }
            return Ok(());
        }
        let k = c.ctor(args.len()).ok_or_else(|| internal(pos, format!("{class} has no {}-ary constructor", args.len())))?;
        self.enter(pos)?;
        let r = self.run_ctor(h, id, k, args);
        self.depth -= 1;
        r
    }

    fn run_ctor(&mut self, h: &mut dyn RuntimeHooks, id: ObjId, k: &TCtor, args: Vec<Value>) -> R<()> {
        let mut f = Frame::new(Some(id));
        f.locals = k.params.iter().map(|p| p.name.clone()).zip(args).collect();
        if let Some(sup) = &k.super_call {
            let vals = self.eval_args(h, &mut f, &sup.args)?;
            self.construct(h, id, &sup.class, vals, k.pos)?;
        }
        if let Some(body) = &k.body {
            self.exec_block(h, &mut f, body)?;
        }
        Ok(())
    }

    /// Runs a class's static initialiser on first static access.
    fn ensure_init(&mut self, h: &mut dyn RuntimeHooks, class: &str) -> R<()> {
        if self.class_init.contains_key(class) {
            return Ok(());
        }
        self.class_init.insert(class.to_string(), InitState::InProgress);
        let prog = Arc::clone(&self.program);
        if let Some(init) = prog.class(class).and_then(|c| c.static_init.as_ref()) {
            self.enter(Pos::default())?;
            let mut f = Frame::new(None);
            let r = self.exec_block(h, &mut f, init);
            self.depth -= 1;
            r?;
        }
        self.class_init.insert(class.to_string(), InitState::Done);
        Ok(())
    }

    /// Local discovery of a transformed class: the `A_C_Local` singleton,
    /// with `A_C_Factory.clinit` run once on first discovery.
    pub fn local_discover(&mut self, h: &mut dyn RuntimeHooks, class: &str, pos: Pos) -> R<Value> {
        let prog = Arc::clone(&self.program);
        let c_local = names::c_local(class);
        let getter = prog
            .class(&c_local)
            .and_then(|c| c.static_methods.iter().find(|m| m.name == "get_me" || m.name == "$get_me"))
            .ok_or_else(|| internal(pos, format!("{c_local} has no singleton accessor")))?;
        let me = self.call_static(h, &c_local, &getter.name, Vec::new(), pos)?;
        if self.clinit.contains_key(class) {
            return Ok(me);
        }
        self.clinit.insert(class.to_string(), InitState::InProgress);
        *self.clinit_runs.entry(class.to_string()).or_insert(0) += 1;
        let c_factory = names::c_factory(class);
        if prog.class(&c_factory).is_some_and(|c| c.static_method("clinit", 1).is_some()) {
            self.call_static(h, &c_factory, "clinit", vec![me.clone()], pos)?;
        }
        self.clinit.insert(class.to_string(), InitState::Done);
        if let Value::Obj(id) = me {
            self.seal(id);
        }
        Ok(me)
    }

    pub fn clinit_state(&self, class: &str) -> Option<InitState> {
        self.clinit.get(class).copied()
    }

    /// Calls an instance method with dynamic dispatch.
    pub fn call_method(&mut self, h: &mut dyn RuntimeHooks, recv: ObjId, name: &str, args: Vec<Value>, pos: Pos) -> R<Value> {
        let prog = Arc::clone(&self.program);
        let class = &self.heap[recv].class;
        let (owner, m) = prog
            .find_method(class, name, args.len())
            .ok_or_else(|| internal(pos, format!("{class} has no method {name}/{}", args.len())))?;
        if owner.is_builtin || m.is_native {
            let f = self
                .builtins
                .lookup(&owner.name, name, owner.is_builtin)
                .ok_or_else(|| RuntimeError::new(ErrorKind::UnknownBuiltin, pos, format!("{}.{name}", owner.name)))?;
            let mut native = std::mem::replace(&mut self.heap[recv].native, Value::Null);
            let state = owner.is_builtin.then_some(&mut native);
            let r = f(&mut NativeCall { state, args: &args });
            self.heap[recv].native = native;
            return r.map_err(|msg| RuntimeError::new(ErrorKind::Builtin, pos, format!("{}.{name}: {msg}", owner.name)));
        }
        self.run_method(h, Some(recv), m, args, pos)
    }

    fn run_method(&mut self, h: &mut dyn RuntimeHooks, this: Option<ObjId>, m: &TMethod, args: Vec<Value>, pos: Pos) -> R<Value> {
        let body = m.body.as_ref().ok_or_else(|| internal(pos, format!("{} has no body", m.name)))?;
        self.enter(pos)?;
        let mut f = Frame::new(this);
        f.locals = m.params.iter().map(|p| p.name.clone()).zip(args).collect();
        let r = self.exec_block(h, &mut f, body);
        self.depth -= 1;
        Ok(match r? {
            Flow::Return(v) => v,
            Flow::Normal => Value::Null,
        })
    }

    /// Calls a static method, running the class's static initialiser first.
    pub fn call_static(&mut self, h: &mut dyn RuntimeHooks, class: &str, name: &str, args: Vec<Value>, pos: Pos) -> R<Value> {
        self.ensure_init(h, class)?;
        self.dispatch_static(h, class, name, args, pos)
    }

    fn dispatch_static(&mut self, h: &mut dyn RuntimeHooks, class: &str, name: &str, args: Vec<Value>, pos: Pos) -> R<Value> {
        if name == "init" && matches!(names::role(class), Some(Role::OFactory(_))) {
            if let Some(Value::Obj(target)) = args.first() {
                let target = *target;
                if matches!(names::role(&self.heap[target].class), Some(Role::OProxy(..))) {
                    h.remote_init(self, class, args, pos)?;
                    return Ok(Value::Null);
                }
                self.heap[target].init_depth += 1;
                let r = self.invoke_static(h, class, name, args, pos);
                self.heap[target].init_depth -= 1;
                if self.heap[target].init_depth == 0 {
                    self.seal(target);
                }
                return r;
            }
        }
        self.invoke_static(h, class, name, args, pos)
    }

    fn invoke_static(&mut self, h: &mut dyn RuntimeHooks, class: &str, name: &str, args: Vec<Value>, pos: Pos) -> R<Value> {
        let prog = Arc::clone(&self.program);
        let c = prog.class(class).ok_or_else(|| internal(pos, format!("unknown class {class}")))?;
        let m = c
            .static_method(name, args.len())
            .ok_or_else(|| internal(pos, format!("{class} has no static method {name}/{}", args.len())))?;
        if !c.is_builtin && !m.is_native {
            return self.run_method(h, None, m, args, pos);
        }
        if class == "Runtime" && name == "checkpoint" {
            let tag = args.first().and_then(Value::as_str).unwrap_or_default().to_string();
            h.on_checkpoint(self, &tag, pos)?;
            return Ok(Value::Null);
        }
        let f = self
            .builtins
            .lookup(class, name, c.is_builtin)
            .ok_or_else(|| RuntimeError::new(ErrorKind::UnknownBuiltin, pos, format!("{class}.{name}")))?;
        f(&mut NativeCall { state: None, args: &args })
            .map_err(|msg| RuntimeError::new(ErrorKind::Builtin, pos, format!("{class}.{name}: {msg}")))
    }

    fn deref(&self, v: &Value, pos: Pos, what: &str) -> R<ObjId> {
        match v {
            Value::Obj(id) => Ok(*id),
            Value::Null => Err(RuntimeError::new(ErrorKind::NullDeref, pos, format!("null dereference ({what})"))),
            other => Err(internal(pos, format!("{what} on non-object {other}"))),
        }
    }

    fn exec_block(&mut self, h: &mut dyn RuntimeHooks, f: &mut Frame, ss: &[TStmt]) -> R<Flow> {
        let mark = f.locals.len();
        let mut out = Ok(Flow::Normal);
        for s in ss {
            match self.exec(h, f, s) {
                Ok(Flow::Normal) => {}
                other => {
                    out = other;
                    break;
                }
            }
        }
        f.locals.truncate(mark);
        out
    }

    fn exec(&mut self, h: &mut dyn RuntimeHooks, f: &mut Frame, s: &TStmt) -> R<Flow> {
        self.tick(s.pos)?;
        match &s.kind {
            TStmtKind::Local { name, ty, init } => {
                let v = match init {
                    Some(e) => self.eval(h, f, e)?,
                    None => Value::default_for(ty),
                };
                f.locals.push((name.clone(), v));
            }
            TStmtKind::AssignLocal { name, value } => {
                let v = self.eval(h, f, value)?;
                if !f.set(name, v) {
                    return Err(internal(s.pos, format!("unbound local {name}")));
                }
            }
            TStmtKind::AssignField { obj, owner, name, value } => {
                let o = self.eval(h, f, obj)?;
                let v = self.eval(h, f, value)?;
                let id = self.deref(&o, s.pos, &format!("write of field {name}"))?;
                let is_final = self.program.class(owner).and_then(|c| c.field(name)).is_some_and(|fd| fd.is_final);
                if is_final && self.heap[id].sealed {
                    return Err(RuntimeError::new(
                        ErrorKind::FinalWrite,
                        s.pos,
                        format!("write to final field {owner}.{name} outside initialisation"),
                    ));
                }
                match self.heap[id].fields.get_mut(name) {
                    Some(slot) => *slot = v,
                    None => return Err(internal(s.pos, format!("no field {name}"))),
                }
            }
            TStmtKind::AssignStatic { class, name, value, .. } => {
                self.ensure_init(h, class)?;
                let v = self.eval(h, f, value)?;
                let is_final = self.program.class(class).and_then(|c| c.static_field(name)).is_some_and(|fd| fd.is_final);
                if is_final && self.class_init.get(class) == Some(&InitState::Done) {
                    return Err(RuntimeError::new(
                        ErrorKind::FinalWrite,
                        s.pos,
                        format!("write to final static {class}.{name} outside initialisation"),
                    ));
                }
                match self.statics.get_mut(class).and_then(|m| m.get_mut(name)) {
                    Some(slot) => *slot = v,
                    None => return Err(internal(s.pos, format!("no static field {class}.{name}"))),
                }
            }
            TStmtKind::Expr(e) => {
                self.eval(h, f, e)?;
            }
            TStmtKind::Print(e) => {
                let line = self.eval(h, f, e)?.to_string();
                h.emit(self, line, s.pos)?;
            }
            TStmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(h, f, e)?,
                    None => Value::Null,
                };
                return Ok(Flow::Return(v));
            }
            TStmtKind::If { cond, then_block, else_block } => {
                if self.eval_bool(h, f, cond)? {
                    return self.exec_block(h, f, then_block);
                } else if let Some(b) = else_block {
                    return self.exec_block(h, f, b);
                }
            }
            TStmtKind::While { cond, body } => {
                while self.eval_bool(h, f, cond)? {
                    if let Flow::Return(v) = self.exec_block(h, f, body)? {
                        return Ok(Flow::Return(v));
                    }
                    self.tick(s.pos)?;
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn eval_bool(&mut self, h: &mut dyn RuntimeHooks, f: &mut Frame, e: &TExpr) -> R<bool> {
        self.eval(h, f, e)?.as_bool().ok_or_else(|| internal(e.pos, "condition is not bool"))
    }

    fn eval_args(&mut self, h: &mut dyn RuntimeHooks, f: &mut Frame, args: &[TExpr]) -> R<Vec<Value>> {
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            out.push(self.eval(h, f, a)?);
        }
        Ok(out)
    }

    fn eval(&mut self, h: &mut dyn RuntimeHooks, f: &mut Frame, e: &TExpr) -> R<Value> {
        self.tick(e.pos)?;
        let pos = e.pos;
        Ok(match &e.kind {
            TExprKind::Int(v) => Value::Int(*v),
            TExprKind::Long(v) => Value::Long(*v),
            TExprKind::Bool(b) => Value::Bool(*b),
            TExprKind::Str(s) => Value::Str(s.clone()),
            TExprKind::Null => Value::Null,
            TExprKind::Local(n) => f.get(n).cloned().ok_or_else(|| internal(pos, format!("unbound local {n}")))?,
            TExprKind::This { .. } => Value::Obj(f.this.ok_or_else(|| internal(pos, "`this` in static context"))?),
            TExprKind::Field { obj, name, .. } => {
                let o = self.eval(h, f, obj)?;
                let id = self.deref(&o, pos, &format!("read of field {name}"))?;
                self.heap[id].fields.get(name).cloned().ok_or_else(|| internal(pos, format!("no field {name}")))?
            }
            TExprKind::StaticField { class, name, .. } => {
                self.ensure_init(h, class)?;
                self.statics
                    .get(class)
                    .and_then(|m| m.get(name))
                    .cloned()
                    .ok_or_else(|| internal(pos, format!("no static field {class}.{name}")))?
            }
            TExprKind::Call { recv, method, args, .. } => {
                let r = self.eval(h, f, recv)?;
                let vals = self.eval_args(h, f, args)?;
                let id = self.deref(&r, pos, &format!("call of {method}"))?;
                self.call_method(h, id, method, vals, pos)?
            }
            TExprKind::StaticCall { class, method, args, .. } => {
                self.ensure_init(h, class)?;
                let vals = self.eval_args(h, f, args)?;
                self.dispatch_static(h, class, method, vals, pos)?
            }
            TExprKind::New { class, args } => {
                let vals = self.eval_args(h, f, args)?;
                Value::Obj(self.instantiate(h, class, vals, pos)?)
            }
            TExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                Value::Bool(self.eval_bool(h, f, lhs)? && self.eval_bool(h, f, rhs)?)
            }
            TExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                Value::Bool(self.eval_bool(h, f, lhs)? || self.eval_bool(h, f, rhs)?)
            }
            TExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(h, f, lhs)?;
                let r = self.eval(h, f, rhs)?;
                binary(*op, l, r, pos)?
            }
            TExprKind::Unary { op, expr } => match (op, self.eval(h, f, expr)?) {
                (UnOp::Neg, Value::Int(v)) => Value::Int(v.wrapping_neg()),
                (UnOp::Neg, Value::Long(v)) => Value::Long(v.wrapping_neg()),
                (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                (_, v) => return Err(internal(pos, format!("bad operand {v}"))),
            },
            TExprKind::Cast { expr } => match (&e.ty, self.eval(h, f, expr)?) {
                (Type::Int, Value::Long(v)) => Value::Int(v as i32),
                (Type::Long, Value::Int(v)) => Value::Long(v as i64),
                (_, v) => v,
            },
            TExprKind::Widen(inner) => match self.eval(h, f, inner)? {
                Value::Int(v) => Value::Long(v as i64),
                v => v,
            },
            TExprKind::Create { class } => h.create(self, class, pos)?,
            TExprKind::Discover { class } => h.discover(self, class, pos)?,
            TExprKind::RemoteInvoke { handle, member, args } => {
                let hv = self.eval(h, f, handle)?;
                let vals = self.eval_args(h, f, args)?;
                match hv {
                    Value::Remote(r) => h.remote_invoke(self, &r, member, vals, pos)?,
                    Value::Null => {
                        return Err(RuntimeError::new(ErrorKind::NullDeref, pos, format!("unbound proxy ({member})")))
                    }
                    other => return Err(internal(pos, format!("proxy handle holds {other}"))),
                }
            }
            TExprKind::Seq { stmts, value } => {
                let mark = f.locals.len();
                for s in stmts {
                    if let Flow::Return(_) = self.exec(h, f, s)? {
                        return Err(internal(s.pos, "return inside a statement expression"));
                    }
                }
                let v = self.eval(h, f, value);
                f.locals.truncate(mark);
                v?
            }
        })
    }
}

fn binary(op: BinOp, l: Value, r: Value, pos: Pos) -> R<Value> {
    use Value::*;
    let div_zero = || RuntimeError::new(ErrorKind::DivByZero, pos, "division by zero");
    Ok(match (op, l, r) {
        (BinOp::Add, Str(a), b) => Str(format!("{a}{b}")),
        (BinOp::Add, a, Str(b)) => Str(format!("{a}{b}")),
        (BinOp::Add, Int(a), Int(b)) => Int(a.wrapping_add(b)),
        (BinOp::Sub, Int(a), Int(b)) => Int(a.wrapping_sub(b)),
        (BinOp::Mul, Int(a), Int(b)) => Int(a.wrapping_mul(b)),
        (BinOp::Div, Int(_), Int(0)) | (BinOp::Rem, Int(_), Int(0)) => return Err(div_zero()),
        (BinOp::Div, Int(a), Int(b)) => Int(a.wrapping_div(b)),
        (BinOp::Rem, Int(a), Int(b)) => Int(a.wrapping_rem(b)),
        (BinOp::Add, Long(a), Long(b)) => Long(a.wrapping_add(b)),
        (BinOp::Sub, Long(a), Long(b)) => Long(a.wrapping_sub(b)),
        (BinOp::Mul, Long(a), Long(b)) => Long(a.wrapping_mul(b)),
        (BinOp::Div, Long(_), Long(0)) | (BinOp::Rem, Long(_), Long(0)) => return Err(div_zero()),
        (BinOp::Div, Long(a), Long(b)) => Long(a.wrapping_div(b)),
        (BinOp::Rem, Long(a), Long(b)) => Long(a.wrapping_rem(b)),
        (BinOp::Lt, Int(a), Int(b)) => Bool(a < b),
        (BinOp::Le, Int(a), Int(b)) => Bool(a <= b),
        (BinOp::Gt, Int(a), Int(b)) => Bool(a > b),
        (BinOp::Ge, Int(a), Int(b)) => Bool(a >= b),
        (BinOp::Lt, Long(a), Long(b)) => Bool(a < b),
        (BinOp::Le, Long(a), Long(b)) => Bool(a <= b),
        (BinOp::Gt, Long(a), Long(b)) => Bool(a > b),
        (BinOp::Ge, Long(a), Long(b)) => Bool(a >= b),
        (BinOp::Eq, a, b) => Bool(a == b),
        (BinOp::Ne, a, b) => Bool(a != b),
        (op, a, b) => return Err(internal(pos, format!("bad operands for {}: {a}, {b}", op.symbol()))),
    })
}
