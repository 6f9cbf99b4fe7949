//! Lowers typed bodies of transformable classes back to surface syntax,
//! routing every member access through extracted interfaces and factories.

use crate::minioo::ast::*;
use crate::minioo::typed::*;

use super::analysis::TransformableSet;
use super::names;

/// Where a rewritten body will live; decides how `this` and the class's own
/// statics are reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    /// Instance method of `A_O_Local`.
    Instance,
    /// Former static method, now an instance method of `A_C_Local`.
    StaticImpl,
    /// `A_O_Factory.init`; `this` becomes the named parameter.
    Init { that: String },
    /// `A_C_Factory.clinit`; own statics go through the named parameter.
    Clinit { that: String },
}

pub fn call(recv: Option<Expr>, name: &str, args: Vec<Expr>) -> Expr {
    Expr::new(ExprKind::Call { recv: recv.map(Box::new), name: name.to_string(), args })
}

pub fn static_call(class: &str, name: &str, args: Vec<Expr>) -> Expr {
    call(Some(Expr::name(class)), name, args)
}

pub fn expr_stmt(e: Expr) -> Stmt {
    Stmt::new(StmtKind::Expr(e))
}

pub fn discover(class: &str) -> Expr {
    static_call(&names::c_factory(class), "discover", Vec::new())
}

/// Statements to run before the current statement, plus whether hoisting is
/// still order-preserving: only pure evaluations may precede a hoisted `new`.
struct Hoist {
    pre: Vec<Stmt>,
    open: bool,
}

impl Hoist {
    fn open() -> Self {
        Hoist { pre: Vec::new(), open: true }
    }

    fn closed() -> Self {
        Hoist { pre: Vec::new(), open: false }
    }
}

fn is_pure(e: &TExpr) -> bool {
    match &e.kind {
        TExprKind::Int(_)
        | TExprKind::Long(_)
        | TExprKind::Bool(_)
        | TExprKind::Str(_)
        | TExprKind::Null
        | TExprKind::Local(_)
        | TExprKind::This { .. } => true,
        TExprKind::Binary { op, lhs, rhs } => !matches!(op, BinOp::Div | BinOp::Rem) && is_pure(lhs) && is_pure(rhs),
        TExprKind::Unary { expr, .. } | TExprKind::Cast { expr } | TExprKind::Widen(expr) => is_pure(expr),
        _ => false,
    }
}

pub struct Rewriter<'a> {
    pub p: &'a CheckedProgram,
    pub ts: &'a TransformableSet,
    pub class: &'a str,
    pub scope: Scope,
    temps: usize,
}

impl<'a> Rewriter<'a> {
    pub fn new(p: &'a CheckedProgram, ts: &'a TransformableSet, class: &'a str, scope: Scope) -> Self {
        Rewriter { p, ts, class, scope, temps: 0 }
    }

    fn transformable(&self, class: &str) -> bool {
        self.ts.is_transformable(class)
    }

    pub fn ty(&self, t: &Type) -> TypeRef {
        retype(self.ts, t)
    }

    pub fn params(&self, ps: &[TParam]) -> Vec<Param> {
        ps.iter().map(|p| Param::new(p.name.clone(), self.ty(&p.ty))).collect()
    }

    pub fn ret(&self, t: &Type) -> RetType {
        match t {
            Type::Void => RetType::Void,
            t => RetType::Type(self.ty(t)),
        }
    }

    pub fn block(&mut self, ss: &[TStmt]) -> Block {
        let mut out = Vec::new();
        for s in ss {
            self.stmt(s, &mut out);
        }
        Block::new(out)
    }

    /// Rewrites a `super(...)` call as the superclass's `init` on `that`.
    pub fn super_init(&mut self, sup: &SuperCall, that: &str, out: &mut Vec<Stmt>) {
        let mut h = Hoist::open();
        let mut args = vec![Expr::name(that)];
        args.extend(sup.args.iter().map(|a| self.expr(a, &mut h)));
        out.append(&mut h.pre);
        out.push(expr_stmt(static_call(&names::o_factory(&sup.class), "init", args)));
    }

    fn stmt(&mut self, s: &TStmt, out: &mut Vec<Stmt>) {
        let mut h = Hoist::open();
        let kind = match &s.kind {
            TStmtKind::Local { name, ty, init } => {
                let init = init.as_ref().map(|e| self.expr(e, &mut h));
                StmtKind::Local { ty: self.ty(ty), name: name.clone(), init }
            }
            TStmtKind::AssignLocal { name, value } => {
                StmtKind::Assign { target: Expr::name(name.clone()), value: self.expr(value, &mut h) }
            }
            TStmtKind::AssignField { obj, owner, name, value } => {
                if self.transformable(owner) {
                    let recv = self.recv(obj, &mut h);
                    let v = self.expr(value, &mut h);
                    StmtKind::Expr(call(recv, &names::setter(name), vec![v]))
                } else {
                    let o = self.expr(obj, &mut h);
                    let target = Expr::new(ExprKind::Member { obj: Box::new(o), name: name.clone() });
                    StmtKind::Assign { target, value: self.expr(value, &mut h) }
                }
            }
            TStmtKind::AssignStatic { class, name, value, .. } => {
                if self.transformable(class) {
                    let recv = self.static_recv(class);
                    close_after_init(&recv, &mut h);
                    let v = self.expr(value, &mut h);
                    StmtKind::Expr(call(recv, &names::setter(name), vec![v]))
                } else {
                    let target =
                        Expr::new(ExprKind::Member { obj: Box::new(Expr::name(class.clone())), name: name.clone() });
                    h.open = false;
                    StmtKind::Assign { target, value: self.expr(value, &mut h) }
                }
            }
            TStmtKind::Expr(e) => {
                let r = self.expr(e, &mut h);
                out.append(&mut h.pre);
                // A hoisted `new` used as a statement leaves only its temporary behind.
                if !matches!(r.kind, ExprKind::Name(_)) {
                    out.push(Stmt { kind: StmtKind::Expr(r), pos: s.pos });
                }
                return;
            }
            TStmtKind::Print(e) => StmtKind::Print(self.expr(e, &mut h)),
            TStmtKind::Return(e) => StmtKind::Return(e.as_ref().map(|e| self.expr(e, &mut h))),
            TStmtKind::If { cond, then_block, else_block } => {
                let cond = self.expr(cond, &mut h);
                StmtKind::If {
                    cond,
                    then_block: self.block(then_block),
                    else_block: else_block.as_ref().map(|b| self.block(b)),
                }
            }
            TStmtKind::While { cond, body } => {
                let mut closed = Hoist::closed();
                let cond = self.expr(cond, &mut closed);
                StmtKind::While { cond, body: self.block(body) }
            }
        };
        out.append(&mut h.pre);
        out.push(Stmt { kind, pos: s.pos });
    }

    fn that(&self) -> Option<&str> {
        match &self.scope {
            Scope::Init { that } => Some(that),
            _ => None,
        }
    }

    /// Receiver for an instance member access; `None` keeps `this` implicit.
    fn recv(&mut self, obj: &TExpr, h: &mut Hoist) -> Option<Expr> {
        if let TExprKind::This { implicit } = obj.kind {
            if let Some(that) = self.that() {
                return Some(Expr::name(that.to_string()));
            }
            return (!implicit).then(|| Expr::new(ExprKind::This));
        }
        Some(self.expr(obj, h))
    }

    /// Receiver for a static member of a transformable class.
    fn static_recv(&self, class: &str) -> Option<Expr> {
        if class == self.class {
            match &self.scope {
                Scope::StaticImpl => return None,
                Scope::Clinit { that } => return Some(Expr::name(that.clone())),
                _ => {}
            }
        }
        Some(discover(class))
    }

    fn fresh(&mut self) -> String {
        let n = format!("$t{}", self.temps);
        self.temps += 1;
        n
    }

    fn expr(&mut self, e: &TExpr, h: &mut Hoist) -> Expr {
        let kind = match &e.kind {
            TExprKind::Int(v) => int_lit(*v as i64, false),
            TExprKind::Long(v) => int_lit(*v, true),
            TExprKind::Bool(b) => ExprKind::Lit(Literal::Bool(*b)),
            TExprKind::Str(s) => ExprKind::Lit(Literal::Str(s.clone())),
            TExprKind::Null => ExprKind::Lit(Literal::Null),
            TExprKind::Local(n) => ExprKind::Name(n.clone()),
            TExprKind::This { .. } => match self.that() {
                Some(t) => ExprKind::Name(t.to_string()),
                None => ExprKind::This,
            },
            TExprKind::Field { obj, owner, name } => {
                if self.transformable(owner) {
                    let recv = self.recv(obj, h);
                    call(recv, &names::getter(name), Vec::new()).kind
                } else {
                    ExprKind::Member { obj: Box::new(self.expr(obj, h)), name: name.clone() }
                }
            }
            TExprKind::StaticField { class, name, .. } => {
                if self.transformable(class) {
                    call(self.static_recv(class), &names::getter(name), Vec::new()).kind
                } else {
                    ExprKind::Member { obj: Box::new(Expr::name(class.clone())), name: name.clone() }
                }
            }
            TExprKind::Call { recv, owner, method, args } => {
                let r = if self.transformable(owner) { self.recv(recv, h) } else { Some(self.expr(recv, h)) };
                let args = args.iter().map(|a| self.expr(a, h)).collect();
                ExprKind::Call { recv: r.map(Box::new), name: method.clone(), args }
            }
            TExprKind::StaticCall { class, method, args, .. } => {
                let r = if self.transformable(class) {
                    let r = self.static_recv(class);
                    close_after_init(&r, h);
                    r
                } else {
                    h.open = false;
                    Some(Expr::name(class.clone()))
                };
                let args = args.iter().map(|a| self.expr(a, h)).collect();
                ExprKind::Call { recv: r.map(Box::new), name: method.clone(), args }
            }
            TExprKind::New { class, args } => {
                if !self.transformable(class) {
                    let args = args.iter().map(|a| self.expr(a, h)).collect();
                    ExprKind::New { class: class.clone(), args }
                } else if h.open {
                    let t = self.creation(class, args, h);
                    h.open = false;
                    return Expr { kind: ExprKind::Name(t), pos: e.pos };
                } else {
                    let mut inner = Hoist::open();
                    let t = self.creation(class, args, &mut inner);
                    ExprKind::Seq { stmts: inner.pre, value: Box::new(Expr::name(t)) }
                }
            }
            TExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs, h);
                let r = if matches!(op, BinOp::And | BinOp::Or) {
                    self.expr(rhs, &mut Hoist::closed())
                } else {
                    self.expr(rhs, h)
                };
                ExprKind::Binary { op: *op, lhs: Box::new(l), rhs: Box::new(r) }
            }
            TExprKind::Unary { op, expr } => ExprKind::Unary { op: *op, expr: Box::new(self.expr(expr, h)) },
            TExprKind::Cast { expr } => {
                let ty = if e.ty == Type::Long { TypeRef::Long } else { TypeRef::Int };
                ExprKind::Cast { ty, expr: Box::new(self.expr(expr, h)) }
            }
            TExprKind::Widen(inner) => return self.expr(inner, h),
            TExprKind::Create { .. }
            | TExprKind::Discover { .. }
            | TExprKind::RemoteInvoke { .. }
            | TExprKind::Seq { .. } => unreachable!("generated constructs never reach the rewriter"),
        };
        if !is_pure(e) {
            h.open = false;
        }
        Expr { kind, pos: e.pos }
    }

    /// Emits `T_O_Int $tN = T_O_Factory.make(); T_O_Factory.init($tN, args...);`
    /// into `h.pre` and returns the temporary.
    fn creation(&mut self, class: &str, args: &[TExpr], h: &mut Hoist) -> String {
        let t = self.fresh();
        let factory = names::o_factory(class);
        h.pre.push(Stmt::new(StmtKind::Local {
            ty: TypeRef::named(names::o_int(class)),
            name: t.clone(),
            init: Some(static_call(&factory, "make", Vec::new())),
        }));
        let mut init_args = vec![Expr::name(t.clone())];
        for a in args {
            let r = self.expr(a, h);
            init_args.push(r);
        }
        h.pre.push(expr_stmt(static_call(&factory, "init", init_args)));
        t
    }
}

/// A `discover()` receiver may run a class initialiser, so nothing after it
/// can be hoisted in front of it.
fn close_after_init(recv: &Option<Expr>, h: &mut Hoist) {
    if matches!(&recv, Some(Expr { kind: ExprKind::Call { .. }, .. })) {
        h.open = false;
    }
}

pub fn retype(ts: &TransformableSet, t: &Type) -> TypeRef {
    match t {
        Type::Int => TypeRef::Int,
        Type::Long => TypeRef::Long,
        Type::Bool => TypeRef::Bool,
        Type::Str => TypeRef::Str,
        Type::Remote => TypeRef::Remote,
        Type::Class(n) if ts.is_transformable(n) => TypeRef::named(names::o_int(n)),
        Type::Class(n) => TypeRef::named(n.clone()),
        Type::Null | Type::Void => unreachable!("not a declarable type"),
    }
}

fn int_lit(v: i64, long: bool) -> ExprKind {
    let mag = v.unsigned_abs();
    let lit = Expr::new(ExprKind::Lit(if long { Literal::Long(mag) } else { Literal::Int(mag) }));
    if v < 0 {
        ExprKind::Unary { op: UnOp::Neg, expr: Box::new(lit) }
    } else {
        lit.kind
    }
}

/// Every name bound as a parameter or local anywhere in the given bodies.
pub fn bound_names<'b>(params: &'b [TParam], bodies: impl IntoIterator<Item = &'b [TStmt]>) -> Vec<&'b str> {
    fn walk<'b>(ss: &'b [TStmt], out: &mut Vec<&'b str>) {
        for s in ss {
            match &s.kind {
                TStmtKind::Local { name, .. } => out.push(name),
                TStmtKind::If { then_block, else_block, .. } => {
                    walk(then_block, out);
                    if let Some(b) = else_block {
                        walk(b, out);
                    }
                }
                TStmtKind::While { body, .. } => walk(body, out),
                _ => {}
            }
        }
    }
    let mut out: Vec<&str> = params.iter().map(|p| p.name.as_str()).collect();
    for b in bodies {
        walk(b, &mut out);
    }
    out
}
