//! Name resolution, typing and visibility rules.
//!
//! Checking runs in two passes. The first resolves every declaration's
//! signature into a skeleton [`CheckedProgram`]; the second types member
//! bodies against that skeleton. Diagnostics are collected in declaration
//! order and the first error in a body stops that body only.

use indexmap::IndexMap;

use super::ast::*;
use super::error::{CheckError, DiagKind, Diagnostic};
use super::typed::*;

type CResult<T> = Result<T, Diagnostic>;

fn diag(kind: DiagKind, pos: Pos, message: impl Into<String>) -> Diagnostic {
    Diagnostic { kind, pos, message: message.into() }
}

pub const RESERVED_SUFFIXES: &[&str] = &["_O_Int", "_C_Int", "_O_Local", "_C_Local", "_O_Factory", "_C_Factory"];
pub const RESERVED_INFIXES: &[&str] = &["_O_Proxy_", "_C_Proxy_"];

/// Why an identifier is unavailable to hand-written source, if it is.
pub fn reserved_reason(name: &str) -> Option<&'static str> {
    if name.starts_with("get_") || name.starts_with("set_") {
        return Some("the `get_`/`set_` prefixes are reserved for synthesised accessors");
    }
    if name.starts_with('$') {
        return Some("`$` names are reserved for generated temporaries");
    }
    if RESERVED_SUFFIXES.iter().any(|s| name.ends_with(s)) || RESERVED_INFIXES.iter().any(|s| name.contains(s)) {
        return Some("the name collides with generated unit naming");
    }
    None
}

/// Checks a parsed program. The result owns a copy of the input tree.
pub fn check_program(p: &Program) -> Result<CheckedProgram, CheckError> {
    let mut ck = Checker { mode: p.kind, diags: Vec::new() };
    let skeleton = ck.signatures(p);
    if !ck.diags.is_empty() {
        return Err(CheckError { diagnostics: ck.diags });
    }
    ck.structure(p, &skeleton);
    if !ck.diags.is_empty() {
        return Err(CheckError { diagnostics: ck.diags });
    }
    let mut out = skeleton.clone();
    for decl in &p.classes {
        let typed = ck.bodies(decl, &skeleton);
        out.classes.insert(decl.name.clone(), typed);
    }
    ck.entry(p, &skeleton);
    if ck.diags.is_empty() {
        Ok(out)
    } else {
        Err(CheckError { diagnostics: ck.diags })
    }
}

struct Checker {
    mode: ProgramKind,
    diags: Vec<Diagnostic>,
}

impl Checker {
    fn generated(&self) -> bool {
        self.mode == ProgramKind::Transformed
    }

    fn reserved(&mut self, name: &str, pos: Pos) {
        if self.generated() {
            return;
        }
        if let Some(why) = reserved_reason(name) {
            self.diags.push(diag(DiagKind::Reserved, pos, format!("`{name}`: {why}")));
        }
    }

    fn resolve_type(&self, p: &Program, t: &TypeRef, pos: Pos) -> CResult<Type> {
        Ok(match t {
            TypeRef::Int => Type::Int,
            TypeRef::Long => Type::Long,
            TypeRef::Bool => Type::Bool,
            TypeRef::Str => Type::Str,
            TypeRef::Remote => {
                if !self.generated() {
                    return Err(diag(DiagKind::Reserved, pos, "type `remote` is only available to generated code"));
                }
                Type::Remote
            }
            TypeRef::Named(n) => {
                if p.class(n).is_none() && p.interface(n).is_none() {
                    return Err(diag(DiagKind::UnresolvedName, pos, format!("unknown type `{n}`")));
                }
                Type::Class(n.clone())
            }
        })
    }

    fn resolve_ret(&self, p: &Program, r: &RetType, pos: Pos) -> CResult<Type> {
        match r {
            RetType::Void => Ok(Type::Void),
            RetType::Type(t) => self.resolve_type(p, t, pos),
        }
    }

    fn params(&mut self, p: &Program, ps: &[Param], pos: Pos) -> Vec<TParam> {
        let mut out = Vec::new();
        for prm in ps {
            self.reserved(&prm.name, pos);
            match self.resolve_type(p, &prm.ty, pos) {
                Ok(ty) => out.push(TParam { name: prm.name.clone(), ty }),
                Err(d) => self.diags.push(d),
            }
        }
        out
    }

    fn field(&mut self, p: &Program, f: &FieldDecl) -> Option<TField> {
        self.reserved(&f.name, f.pos);
        match self.resolve_type(p, &f.ty, f.pos) {
            Ok(ty) => Some(TField { name: f.name.clone(), ty, visibility: f.visibility, is_final: f.is_final }),
            Err(d) => {
                self.diags.push(d);
                None
            }
        }
    }

    fn method_sig(&mut self, p: &Program, m: &MethodDecl) -> Option<TMethod> {
        self.reserved(&m.name, m.pos);
        let params = self.params(p, &m.params, m.pos);
        let ret = match self.resolve_ret(p, &m.ret, m.pos) {
            Ok(r) => r,
            Err(d) => {
                self.diags.push(d);
                return None;
            }
        };
        Some(TMethod {
            name: m.name.clone(),
            params,
            ret,
            visibility: m.visibility,
            is_native: m.is_native,
            body: None,
            pos: m.pos,
        })
    }

    /// Pass one: declarations and signatures.
    fn signatures(&mut self, p: &Program) -> CheckedProgram {
        let mut classes = IndexMap::new();
        let mut interfaces = IndexMap::new();
        if !self.generated() {
            if let Some(i) = p.interfaces.first() {
                self.diags.push(diag(
                    DiagKind::Invalid,
                    i.pos,
                    format!("interface `{}`: hand-written sources cannot declare interfaces", i.name),
                ));
            }
        }
        for i in &p.interfaces {
            let mut methods = Vec::new();
            for m in &i.methods {
                let params = self.params(p, &m.params, m.pos);
                match self.resolve_ret(p, &m.ret, m.pos) {
                    Ok(ret) => methods.push(TSig { name: m.name.clone(), params, ret }),
                    Err(d) => self.diags.push(d),
                }
            }
            interfaces.insert(
                i.name.clone(),
                TInterface { name: i.name.clone(), extends: i.extends.clone(), methods },
            );
        }
        for c in &p.classes {
            self.reserved(&c.name, c.pos);
            let fields = c.fields.iter().filter_map(|f| self.field(p, f)).collect();
            let static_fields = c.static_fields.iter().filter_map(|f| self.field(p, f)).collect();
            let methods = c.methods.iter().filter_map(|m| self.method_sig(p, m)).collect();
            let static_methods = c.static_methods.iter().filter_map(|m| self.method_sig(p, m)).collect();
            let mut ctors: Vec<TCtor> = c
                .constructors
                .iter()
                .map(|k| TCtor {
                    params: self.params(p, &k.params, k.pos),
                    visibility: k.visibility,
                    super_call: None,
                    body: None,
                    is_default: false,
                    pos: k.pos,
                })
                .collect();
            if ctors.is_empty() {
                ctors.push(TCtor {
                    params: Vec::new(),
                    visibility: Visibility::Public,
                    super_call: None,
                    body: None,
                    is_default: true,
                    pos: c.pos,
                });
            }
            classes.insert(
                c.name.clone(),
                TClass {
                    name: c.name.clone(),
                    superclass: c.superclass.clone(),
                    implements: c.implements.clone(),
                    is_builtin: c.is_builtin,
                    fields,
                    static_fields,
                    methods,
                    static_methods,
                    ctors,
                    static_init: None,
                    pos: c.pos,
                },
            );
        }
        CheckedProgram { program: p.clone(), classes, interfaces, entry: p.entry.clone() }
    }

    /// Inheritance, overriding, interface conformance and builtin shape rules.
    fn structure(&mut self, p: &Program, sk: &CheckedProgram) {
        for i in &p.interfaces {
            for sup in &i.extends {
                if !sk.interfaces.contains_key(sup) {
                    self.diags.push(diag(DiagKind::UnresolvedName, i.pos, format!("unknown interface `{sup}`")));
                }
            }
            if interface_cycle(sk, &i.name) {
                self.diags.push(diag(DiagKind::Inheritance, i.pos, format!("interface `{}` extends itself", i.name)));
            }
        }
        for c in &p.classes {
            if let Some(s) = &c.superclass {
                match p.class(s) {
                    None => self.diags.push(diag(DiagKind::UnresolvedName, c.pos, format!("unknown superclass `{s}`"))),
                    Some(sd) if sd.is_builtin => self.diags.push(diag(
                        DiagKind::Inheritance,
                        c.pos,
                        format!("class `{}` cannot extend builtin class `{s}`", c.name),
                    )),
                    Some(_) if c.is_builtin => self.diags.push(diag(
                        DiagKind::Inheritance,
                        c.pos,
                        format!("builtin class `{}` cannot have a superclass", c.name),
                    )),
                    Some(_) => {}
                }
            }
            for iname in &c.implements {
                if !sk.interfaces.contains_key(iname) {
                    self.diags.push(diag(DiagKind::UnresolvedName, c.pos, format!("unknown interface `{iname}`")));
                }
            }
        }
        if !self.diags.is_empty() {
            return;
        }
        for c in &p.classes {
            if class_cycle(sk, &c.name) {
                self.diags.push(diag(DiagKind::Inheritance, c.pos, format!("class `{}` inherits from itself", c.name)));
            }
        }
        if !self.diags.is_empty() {
            return;
        }
        for c in &p.classes {
            self.class_shape(c, sk);
        }
    }

    fn class_shape(&mut self, c: &ClassDecl, sk: &CheckedProgram) {
        let tc = &sk.classes[&c.name];
        if c.is_builtin {
            let has_body = c.methods.iter().chain(&c.static_methods).any(|m| m.body.is_some())
                || c.constructors.iter().any(|k| k.body.is_some())
                || c.static_init.is_some();
            if has_body {
                self.diags.push(diag(
                    DiagKind::Invalid,
                    c.pos,
                    format!("builtin class `{}` may declare signatures only", c.name),
                ));
            }
        } else {
            for m in c.methods.iter().chain(&c.static_methods) {
                match (m.is_native, m.body.is_some()) {
                    (true, true) => self.diags.push(diag(DiagKind::Invalid, m.pos, format!("native method `{}` has a body", m.name))),
                    (false, false) => self.diags.push(diag(DiagKind::Invalid, m.pos, format!("method `{}` has no body", m.name))),
                    _ => {}
                }
            }
            for k in &c.constructors {
                if k.body.is_none() {
                    self.diags.push(diag(DiagKind::Invalid, k.pos, "constructor has no body"));
                }
            }
        }
        let supers: Vec<&TClass> = sk.class_chain(&c.name).skip(1).collect();
        for f in &tc.fields {
            if let Some(owner) = supers.iter().find(|s| s.field(&f.name).is_some()) {
                let pos = c.fields.iter().find(|d| d.name == f.name).map(|d| d.pos).unwrap_or(c.pos);
                self.diags.push(diag(
                    DiagKind::Duplicate,
                    pos,
                    format!("field `{}` shadows a field inherited from `{}`", f.name, owner.name),
                ));
            }
        }
        for m in &tc.methods {
            let Some(sup) = supers.iter().find_map(|s| s.methods.iter().find(|o| o.name == m.name)) else {
                continue;
            };
            let same = sup.params.len() == m.params.len()
                && sup.params.iter().zip(&m.params).all(|(a, b)| a.ty == b.ty)
                && sup.ret == m.ret;
            if sup.visibility == Visibility::Private || !same {
                self.diags.push(diag(
                    DiagKind::Inheritance,
                    m.pos,
                    format!("method `{}` does not override its inherited namesake with an identical signature", m.name),
                ));
            }
        }
        for iname in &tc.implements {
            for sig in sk.interface_closure(iname) {
                let found = sk.find_method(&c.name, &sig.name, sig.params.len());
                let ok = found.is_some_and(|(_, m)| {
                    m.visibility == Visibility::Public
                        && m.ret == sig.ret
                        && m.params.iter().zip(&sig.params).all(|(a, b)| a.ty == b.ty)
                });
                if !ok {
                    self.diags.push(diag(
                        DiagKind::Inheritance,
                        c.pos,
                        format!("class `{}` does not implement `{iname}.{}`", c.name, sig.name),
                    ));
                }
            }
        }
    }

    fn entry(&mut self, p: &Program, sk: &CheckedProgram) {
        let q = &p.entry;
        let ok = sk.class(&q.class).and_then(|c| c.static_method(&q.member, 0)).is_some_and(|m| {
            m.visibility == Visibility::Public && m.ret == Type::Void
        });
        if !ok {
            self.diags.push(diag(
                DiagKind::Entry,
                Pos::default(),
                format!("entry `{q}` must name a public static void method with no parameters"),
            ));
        }
    }

    /// Pass two: member bodies.
    fn bodies(&mut self, decl: &ClassDecl, sk: &CheckedProgram) -> TClass {
        let mut tc = sk.classes[&decl.name].clone();
        for (tm, m) in tc.methods.iter_mut().zip(&decl.methods) {
            if let Some(b) = &m.body {
                let mut cx = BodyCx::new(self, sk, &decl.name, BodyKind::Method, tm.ret.clone());
                tm.body = cx.method_body(b, &tm.params, m.pos);
            }
        }
        for (tm, m) in tc.static_methods.iter_mut().zip(&decl.static_methods) {
            if let Some(b) = &m.body {
                let mut cx = BodyCx::new(self, sk, &decl.name, BodyKind::StaticMethod, tm.ret.clone());
                tm.body = cx.method_body(b, &tm.params, m.pos);
            }
        }
        for (i, k) in tc.ctors.iter_mut().enumerate() {
            if decl.is_builtin {
                continue;
            }
            let mut cx = BodyCx::new(self, sk, &decl.name, BodyKind::Ctor, Type::Void);
            let source = if k.is_default { None } else { decl.constructors.get(i) };
            let (sup, body) = cx.ctor_body(source, &k.params, decl);
            k.super_call = sup;
            k.body = body;
        }
        if let Some(b) = &decl.static_init {
            let mut cx = BodyCx::new(self, sk, &decl.name, BodyKind::StaticInit, Type::Void);
            tc.static_init = cx.block_top(b);
        }
        tc
    }
}

fn class_cycle(sk: &CheckedProgram, start: &str) -> bool {
    let mut cur = sk.classes.get(start).and_then(|c| c.superclass.clone());
    let mut steps = 0;
    while let Some(s) = cur {
        if s == start || steps > sk.classes.len() {
            return true;
        }
        steps += 1;
        cur = sk.classes.get(&s).and_then(|c| c.superclass.clone());
    }
    false
}

fn interface_cycle(sk: &CheckedProgram, start: &str) -> bool {
    let mut stack: Vec<String> = sk.interfaces.get(start).map(|i| i.extends.clone()).unwrap_or_default();
    let mut seen = std::collections::HashSet::new();
    while let Some(n) = stack.pop() {
        if n == start {
            return true;
        }
        if seen.insert(n.clone()) {
            if let Some(i) = sk.interfaces.get(&n) {
                stack.extend(i.extends.iter().cloned());
            }
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BodyKind {
    Method,
    StaticMethod,
    Ctor,
    StaticInit,
}

struct BodyCx<'c, 'a> {
    ck: &'c mut Checker,
    sk: &'a CheckedProgram,
    class: &'a str,
    kind: BodyKind,
    ret: Type,
    scopes: Vec<Vec<(String, Type)>>,
}

impl<'c, 'a> BodyCx<'c, 'a> {
    fn new(ck: &'c mut Checker, sk: &'a CheckedProgram, class: &'a str, kind: BodyKind, ret: Type) -> Self {
        BodyCx { ck, sk, class, kind, ret, scopes: vec![Vec::new()] }
    }

    fn is_static(&self) -> bool {
        matches!(self.kind, BodyKind::StaticMethod | BodyKind::StaticInit)
    }

    fn generated(&self) -> bool {
        self.ck.generated()
    }

    fn report<T>(&mut self, r: CResult<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(d) => {
                self.ck.diags.push(d);
                None
            }
        }
    }

    fn method_body(&mut self, b: &Block, params: &[TParam], pos: Pos) -> Option<Vec<TStmt>> {
        for p in params {
            self.scopes[0].push((p.name.clone(), p.ty.clone()));
        }
        let stmts = self.block_top(b)?;
        if self.ret != Type::Void && !always_returns(&stmts) {
            self.ck.diags.push(diag(DiagKind::Invalid, pos, "missing return on some path"));
            return None;
        }
        Some(stmts)
    }

    fn block_top(&mut self, b: &Block) -> Option<Vec<TStmt>> {
        let r = self.stmts(&b.stmts);
        self.report(r)
    }

    fn ctor_body(
        &mut self,
        source: Option<&CtorDecl>,
        params: &[TParam],
        decl: &ClassDecl,
    ) -> (Option<SuperCall>, Option<Vec<TStmt>>) {
        for p in params {
            self.scopes[0].push((p.name.clone(), p.ty.clone()));
        }
        let stmts: &[Stmt] = source.and_then(|k| k.body.as_ref()).map(|b| b.stmts.as_slice()).unwrap_or(&[]);
        let pos = source.map(|k| k.pos).unwrap_or(decl.pos);
        let (explicit, rest) = match stmts.split_first() {
            Some((first, rest)) => match &first.kind {
                StmtKind::SuperCall(args) => (Some((args.as_slice(), first.pos)), rest),
                _ => (None, stmts),
            },
            None => (None, stmts),
        };
        let sup = match (&decl.superclass, explicit) {
            (None, None) => None,
            (None, Some((_, p))) => {
                self.ck.diags.push(diag(DiagKind::Invalid, p, "`super(...)` in a class without a superclass"));
                return (None, None);
            }
            (Some(s), exp) => {
                let (args, p, implicit) = match exp {
                    Some((a, p)) => (a, p, false),
                    None => (&[][..], pos, true),
                };
                let r = self.ctor_call(s, args, p);
                match self.report(r) {
                    Some(args) => Some(SuperCall { class: s.clone(), args, implicit }),
                    None => return (None, None),
                }
            }
        };
        let r = self.stmts(rest);
        (sup, self.report(r))
    }

    fn lookup_local(&self, name: &str) -> Option<&Type> {
        self.scopes.iter().rev().flat_map(|s| s.iter().rev()).find(|(n, _)| n == name).map(|(_, t)| t)
    }

    fn declare(&mut self, name: &str, ty: Type, pos: Pos) -> CResult<()> {
        if let Some(why) = (!self.generated()).then(|| reserved_reason(name)).flatten() {
            return Err(diag(DiagKind::Reserved, pos, format!("`{name}`: {why}")));
        }
        if self.lookup_local(name).is_some() {
            return Err(diag(DiagKind::Duplicate, pos, format!("local `{name}` is already declared")));
        }
        self.scopes.last_mut().expect("scope").push((name.to_string(), ty));
        Ok(())
    }

    fn stmts(&mut self, stmts: &[Stmt]) -> CResult<Vec<TStmt>> {
        self.scopes.push(Vec::new());
        let r = stmts.iter().map(|s| self.stmt(s)).collect();
        self.scopes.pop();
        r
    }

    fn stmt(&mut self, s: &Stmt) -> CResult<TStmt> {
        let pos = s.pos;
        let kind = match &s.kind {
            StmtKind::Local { ty, name, init } => {
                let ty = self.ck.resolve_type(&self.sk.program, ty, pos)?;
                let init = match init {
                    Some(e) => {
                        let te = self.expr(e)?;
                        Some(self.coerce(te, &ty)?)
                    }
                    None => None,
                };
                self.declare(name, ty.clone(), pos)?;
                TStmtKind::Local { name: name.clone(), ty, init }
            }
            StmtKind::Assign { target, value } => self.assign(target, value, pos)?,
            StmtKind::Expr(e) => {
                let te = self.expr(e)?;
                let ok = match &te.kind {
                    TExprKind::Call { .. } | TExprKind::StaticCall { .. } | TExprKind::New { .. } => true,
                    TExprKind::RemoteInvoke { .. } | TExprKind::Seq { .. } => self.generated(),
                    _ => false,
                };
                if !ok {
                    return Err(diag(DiagKind::Invalid, pos, "expression statement has no effect"));
                }
                TStmtKind::Expr(te)
            }
            StmtKind::Print(e) => {
                let te = self.expr(e)?;
                if !te.ty.is_primitive() {
                    return Err(diag(DiagKind::TypeMismatch, pos, format!("cannot print a value of type `{}`", te.ty)));
                }
                TStmtKind::Print(te)
            }
            StmtKind::Return(e) => {
                let value = match (e, &self.ret) {
                    (None, Type::Void) => None,
                    (None, t) => return Err(diag(DiagKind::TypeMismatch, pos, format!("missing return value of type `{t}`"))),
                    (Some(_), Type::Void) => {
                        return Err(diag(DiagKind::TypeMismatch, pos, "cannot return a value here"));
                    }
                    (Some(e), t) => {
                        let t = t.clone();
                        let te = self.expr(e)?;
                        Some(self.coerce(te, &t)?)
                    }
                };
                TStmtKind::Return(value)
            }
            StmtKind::If { cond, then_block, else_block } => {
                let cond = self.condition(cond)?;
                let then_block = self.stmts(&then_block.stmts)?;
                let else_block = match else_block {
                    Some(b) => Some(self.stmts(&b.stmts)?),
                    None => None,
                };
                TStmtKind::If { cond, then_block, else_block }
            }
            StmtKind::While { cond, body } => {
                let cond = self.condition(cond)?;
                let body = self.stmts(&body.stmts)?;
                TStmtKind::While { cond, body }
            }
            StmtKind::SuperCall(_) => {
                return Err(diag(DiagKind::Invalid, pos, "`super(...)` must be the first statement of a constructor"));
            }
        };
        Ok(TStmt { kind, pos })
    }

    fn condition(&mut self, e: &Expr) -> CResult<TExpr> {
        let te = self.expr(e)?;
        if te.ty != Type::Bool {
            return Err(diag(DiagKind::TypeMismatch, e.pos, format!("condition has type `{}`, expected `bool`", te.ty)));
        }
        Ok(te)
    }

    fn assign(&mut self, target: &Expr, value: &Expr, pos: Pos) -> CResult<TStmtKind> {
        match &target.kind {
            ExprKind::Name(n) => {
                if let Some(t) = self.lookup_local(n).cloned() {
                    let v = self.expr(value)?;
                    let v = self.coerce(v, &t)?;
                    return Ok(TStmtKind::AssignLocal { name: n.clone(), value: v });
                }
                if !self.is_static() {
                    if let Some((owner, f)) = self.find_field(self.class, n) {
                        let this = self.this_expr(true, pos);
                        return self.assign_field(this, owner, f, value, pos);
                    }
                }
                if let Some(f) = self.sk.classes[self.class].static_field(n).cloned() {
                    return self.assign_static(self.class.to_string(), &f, value, true, pos);
                }
                Err(diag(DiagKind::UnresolvedName, target.pos, format!("cannot find `{n}`")))
            }
            ExprKind::Member { obj, name } => {
                if let Some(class) = self.class_name_expr(obj) {
                    let f = self.static_field_of(&class, name, target.pos)?;
                    return self.assign_static(class, &f, value, false, pos);
                }
                let o = self.expr(obj)?;
                let (owner, f) = self.instance_field_of(&o, name, target.pos)?;
                self.assign_field(o, owner, f, value, pos)
            }
            _ => Err(diag(DiagKind::Invalid, target.pos, "invalid assignment target")),
        }
    }

    fn assign_field(&mut self, obj: TExpr, owner: String, f: TField, value: &Expr, pos: Pos) -> CResult<TStmtKind> {
        if f.is_final {
            let via_this = matches!(obj.kind, TExprKind::This { .. });
            let allowed = via_this
                && owner == self.class
                && (self.generated() || self.kind == BodyKind::Ctor);
            if !allowed {
                return Err(diag(DiagKind::Invalid, pos, format!("cannot assign final field `{}` here", f.name)));
            }
        }
        let v = self.expr(value)?;
        let v = self.coerce(v, &f.ty)?;
        Ok(TStmtKind::AssignField { obj, owner, name: f.name, value: v })
    }

    fn assign_static(&mut self, class: String, f: &TField, value: &Expr, implicit: bool, pos: Pos) -> CResult<TStmtKind> {
        if f.is_final {
            let allowed = class == self.class && (self.generated() || self.kind == BodyKind::StaticInit);
            if !allowed {
                return Err(diag(DiagKind::Invalid, pos, format!("cannot assign final static field `{}` here", f.name)));
            }
        }
        let v = self.expr(value)?;
        let v = self.coerce(v, &f.ty)?;
        Ok(TStmtKind::AssignStatic { class, name: f.name.clone(), value: v, implicit })
    }

    fn this_expr(&self, implicit: bool, pos: Pos) -> TExpr {
        TExpr { kind: TExprKind::This { implicit }, ty: Type::class(self.class), pos }
    }

    /// `Name` that denotes a class rather than a value.
    fn class_name_expr(&self, e: &Expr) -> Option<String> {
        let ExprKind::Name(n) = &e.kind else { return None };
        if self.lookup_local(n).is_some() {
            return None;
        }
        if !self.is_static() && self.find_field(self.class, n).is_some() {
            return None;
        }
        if self.sk.classes[self.class].static_field(n).is_some() {
            return None;
        }
        self.sk.classes.contains_key(n.as_str()).then(|| n.clone())
    }

    fn visible(&self, owner: &str, vis: Visibility) -> bool {
        match vis {
            Visibility::Public => true,
            Visibility::Private => owner == self.class,
            Visibility::Protected => self.sk.is_subclass(self.class, owner),
        }
    }

    fn find_field(&self, class: &str, name: &str) -> Option<(String, TField)> {
        self.sk.class_chain(class).find_map(|c| c.field(name).map(|f| (c.name.clone(), f.clone())))
    }

    fn instance_field_of(&self, obj: &TExpr, name: &str, pos: Pos) -> CResult<(String, TField)> {
        let Type::Class(cls) = &obj.ty else {
            return Err(diag(DiagKind::TypeMismatch, pos, format!("type `{}` has no fields", obj.ty)));
        };
        let Some((owner, f)) = self.find_field(cls, name) else {
            return Err(diag(DiagKind::UnresolvedName, pos, format!("`{cls}` has no field `{name}`")));
        };
        if !self.visible(&owner, f.visibility) {
            return Err(diag(
                DiagKind::Visibility,
                pos,
                format!("field `{owner}.{name}` is {} and not visible from `{}`", f.visibility.keyword(), self.class),
            ));
        }
        Ok((owner, f))
    }

    fn static_field_of(&self, class: &str, name: &str, pos: Pos) -> CResult<TField> {
        let Some(f) = self.sk.classes[class].static_field(name) else {
            return Err(diag(DiagKind::UnresolvedName, pos, format!("`{class}` has no static field `{name}`")));
        };
        if !self.visible(class, f.visibility) {
            return Err(diag(
                DiagKind::Visibility,
                pos,
                format!("static field `{class}.{name}` is {} and not visible from `{}`", f.visibility.keyword(), self.class),
            ));
        }
        Ok(f.clone())
    }

    fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sub == sup {
            return true;
        }
        if self.sk.interfaces.contains_key(sub) {
            return self.interface_extends(sub, sup);
        }
        self.sk
            .class_chain(sub)
            .any(|c| c.name == sup || c.implements.iter().any(|i| self.interface_extends(i, sup)))
    }

    fn interface_extends(&self, iface: &str, sup: &str) -> bool {
        if iface == sup {
            return true;
        }
        self.sk
            .interfaces
            .get(iface)
            .is_some_and(|i| i.extends.iter().any(|e| self.interface_extends(e, sup)))
    }

    fn coerce(&self, e: TExpr, to: &Type) -> CResult<TExpr> {
        let ok = match (&e.ty, to) {
            (a, b) if a == b => true,
            (Type::Int, Type::Long) => {
                let pos = e.pos;
                return Ok(TExpr { kind: TExprKind::Widen(Box::new(e)), ty: Type::Long, pos });
            }
            (Type::Null, Type::Class(_) | Type::Remote) => true,
            (Type::Class(a), Type::Class(b)) => self.is_subtype(a, b),
            _ => false,
        };
        if ok {
            Ok(e)
        } else {
            Err(diag(DiagKind::TypeMismatch, e.pos, format!("expected `{to}`, found `{}`", e.ty)))
        }
    }

    fn args(&mut self, args: &[Expr], params: &[TParam], what: &str, pos: Pos) -> CResult<Vec<TExpr>> {
        if args.len() != params.len() {
            return Err(diag(
                DiagKind::Arity,
                pos,
                format!("{what} expects {} argument(s), found {}", params.len(), args.len()),
            ));
        }
        args.iter()
            .zip(params)
            .map(|(a, p)| {
                let te = self.expr(a)?;
                self.coerce(te, &p.ty)
            })
            .collect()
    }

    fn ctor_call(&mut self, class: &str, args: &[Expr], pos: Pos) -> CResult<Vec<TExpr>> {
        let c = &self.sk.classes[class];
        let Some(k) = c.ctor(args.len()) else {
            let arities: Vec<String> = c.ctors.iter().map(|k| k.params.len().to_string()).collect();
            let kind = if c.is_builtin { "builtin class" } else { "class" };
            return Err(diag(
                DiagKind::Arity,
                pos,
                format!(
                    "{kind} `{class}` has no constructor taking {} argument(s) (available: {})",
                    args.len(),
                    arities.join(", ")
                ),
            ));
        };
        if !self.visible(class, k.visibility) {
            return Err(diag(DiagKind::Visibility, pos, format!("constructor of `{class}` is not visible")));
        }
        let params = k.params.clone();
        self.args(args, &params, &format!("constructor of `{class}`"), pos)
    }

    fn expr(&mut self, e: &Expr) -> CResult<TExpr> {
        let pos = e.pos;
        let (kind, ty) = match &e.kind {
            ExprKind::Lit(l) => match l {
                Literal::Int(v) => {
                    let v = i32::try_from(*v)
                        .map_err(|_| diag(DiagKind::TypeMismatch, pos, format!("int literal {v} out of range")))?;
                    (TExprKind::Int(v), Type::Int)
                }
                Literal::Long(v) => {
                    let v = i64::try_from(*v)
                        .map_err(|_| diag(DiagKind::TypeMismatch, pos, format!("long literal {v} out of range")))?;
                    (TExprKind::Long(v), Type::Long)
                }
                Literal::Bool(b) => (TExprKind::Bool(*b), Type::Bool),
                Literal::Str(s) => (TExprKind::Str(s.clone()), Type::Str),
                Literal::Null => (TExprKind::Null, Type::Null),
            },
            ExprKind::Name(n) => {
                if let Some(t) = self.lookup_local(n) {
                    (TExprKind::Local(n.clone()), t.clone())
                } else if let Some((owner, f)) = (!self.is_static()).then(|| self.find_field(self.class, n)).flatten() {
                    let this = self.this_expr(true, pos);
                    (TExprKind::Field { obj: Box::new(this), owner, name: f.name }, f.ty)
                } else if let Some(f) = self.sk.classes[self.class].static_field(n) {
                    (
                        TExprKind::StaticField { class: self.class.to_string(), name: n.clone(), implicit: true },
                        f.ty.clone(),
                    )
                } else if self.sk.classes.contains_key(n.as_str()) {
                    return Err(diag(DiagKind::Invalid, pos, format!("class `{n}` used as a value")));
                } else if !self.is_static() || self.find_field(self.class, n).is_none() {
                    return Err(diag(DiagKind::UnresolvedName, pos, format!("cannot find `{n}`")));
                } else {
                    return Err(diag(DiagKind::Invalid, pos, format!("instance field `{n}` used in a static context")));
                }
            }
            ExprKind::This => {
                if self.is_static() {
                    return Err(diag(DiagKind::Invalid, pos, "`this` in a static context"));
                }
                (TExprKind::This { implicit: false }, Type::class(self.class))
            }
            ExprKind::Member { obj, name } => {
                if let Some(class) = self.class_name_expr(obj) {
                    let f = self.static_field_of(&class, name, pos)?;
                    (TExprKind::StaticField { class, name: name.clone(), implicit: false }, f.ty)
                } else {
                    let o = self.expr(obj)?;
                    let (owner, f) = self.instance_field_of(&o, name, pos)?;
                    (TExprKind::Field { obj: Box::new(o), owner, name: name.clone() }, f.ty)
                }
            }
            ExprKind::Call { recv, name, args } => return self.call(recv.as_deref(), name, args, pos),
            ExprKind::New { class, args } => {
                let Some(c) = self.sk.classes.get(class.as_str()) else {
                    let kind = if self.sk.interfaces.contains_key(class.as_str()) {
                        DiagKind::Invalid
                    } else {
                        DiagKind::UnresolvedName
                    };
                    return Err(diag(kind, pos, format!("cannot instantiate `{class}`")));
                };
                let name = c.name.clone();
                let args = self.ctor_call(&name, args, pos)?;
                (TExprKind::New { class: name.clone(), args }, Type::Class(name))
            }
            ExprKind::Binary { op, lhs, rhs } => return self.binary(*op, lhs, rhs, pos),
            ExprKind::Unary { op, expr } => {
                // `-2147483648` is the one int literal only reachable through negation.
                if *op == UnOp::Neg {
                    if let ExprKind::Lit(Literal::Int(2147483648)) = expr.kind {
                        return Ok(TExpr { kind: TExprKind::Int(i32::MIN), ty: Type::Int, pos });
                    }
                    if let ExprKind::Lit(Literal::Long(9223372036854775808)) = expr.kind {
                        return Ok(TExpr { kind: TExprKind::Long(i64::MIN), ty: Type::Long, pos });
                    }
                }
                let inner = self.expr(expr)?;
                let ty = match (op, &inner.ty) {
                    (UnOp::Neg, t @ (Type::Int | Type::Long)) => t.clone(),
                    (UnOp::Not, Type::Bool) => Type::Bool,
                    (_, t) => {
                        return Err(diag(DiagKind::TypeMismatch, pos, format!("invalid operand type `{t}` for unary operator")))
                    }
                };
                (TExprKind::Unary { op: *op, expr: Box::new(inner) }, ty)
            }
            ExprKind::Cast { ty, expr } => {
                let to = self.ck.resolve_type(&self.sk.program, ty, pos)?;
                let inner = self.expr(expr)?;
                if !to.is_numeric() || !inner.ty.is_numeric() {
                    return Err(diag(DiagKind::TypeMismatch, pos, format!("cannot cast `{}` to `{to}`", inner.ty)));
                }
                (TExprKind::Cast { expr: Box::new(inner) }, to)
            }
            ExprKind::Intrinsic { kind, class, member, args } => {
                if !self.generated() {
                    return Err(diag(DiagKind::Reserved, pos, format!("intrinsic `@{}` is only available to generated code", kind.name())));
                }
                return self.intrinsic(*kind, class.as_deref(), member.as_deref(), args, pos);
            }
            ExprKind::Seq { stmts, value } => {
                if !self.generated() {
                    return Err(diag(DiagKind::Reserved, pos, "statement expressions are only available to generated code"));
                }
                self.scopes.push(Vec::new());
                let r = (|| {
                    let ts = stmts.iter().map(|s| self.stmt(s)).collect::<CResult<Vec<_>>>()?;
                    let v = self.expr(value)?;
                    Ok::<_, Diagnostic>((ts, v))
                })();
                self.scopes.pop();
                let (ts, v) = r?;
                let ty = v.ty.clone();
                (TExprKind::Seq { stmts: ts, value: Box::new(v) }, ty)
            }
        };
        Ok(TExpr { kind, ty, pos })
    }

    fn intrinsic(
        &mut self,
        kind: IntrinsicKind,
        class: Option<&str>,
        member: Option<&str>,
        args: &[Expr],
        pos: Pos,
    ) -> CResult<TExpr> {
        match kind {
            IntrinsicKind::Create | IntrinsicKind::Discover => {
                let class = class.unwrap_or_default();
                let (iface, local) = match kind {
                    IntrinsicKind::Create => (format!("{class}_O_Int"), format!("{class}_O_Local")),
                    _ => (format!("{class}_C_Int"), format!("{class}_C_Local")),
                };
                if !self.sk.interfaces.contains_key(&iface) || !self.sk.classes.contains_key(&local) {
                    return Err(diag(
                        DiagKind::UnresolvedName,
                        pos,
                        format!("`@{}({class})` needs `{iface}` and `{local}`", kind.name()),
                    ));
                }
                let k = if kind == IntrinsicKind::Create {
                    TExprKind::Create { class: class.to_string() }
                } else {
                    TExprKind::Discover { class: class.to_string() }
                };
                Ok(TExpr { kind: k, ty: Type::Class(iface), pos })
            }
            IntrinsicKind::RemoteInvoke => {
                let Some((h, rest)) = args.split_first() else {
                    return Err(diag(DiagKind::Arity, pos, "`@remote_invoke` needs a handle"));
                };
                let handle = self.expr(h)?;
                if handle.ty != Type::Remote {
                    return Err(diag(DiagKind::TypeMismatch, pos, "`@remote_invoke` handle must have type `remote`"));
                }
                let args = rest.iter().map(|a| self.expr(a)).collect::<CResult<Vec<_>>>()?;
                Ok(TExpr {
                    kind: TExprKind::RemoteInvoke {
                        handle: Box::new(handle),
                        member: member.unwrap_or_default().to_string(),
                        args,
                    },
                    ty: self.ret.clone(),
                    pos,
                })
            }
        }
    }

    fn call(&mut self, recv: Option<&Expr>, name: &str, args: &[Expr], pos: Pos) -> CResult<TExpr> {
        let target = match recv {
            None => {
                let instance = if self.is_static() { None } else { self.method_by_name(self.class, name) };
                if instance.is_some() {
                    CallTarget::Instance(self.this_expr(true, pos))
                } else if self.sk.classes[self.class].static_methods.iter().any(|m| m.name == name) {
                    CallTarget::Static(self.class.to_string(), true)
                } else {
                    return Err(diag(DiagKind::UnresolvedName, pos, format!("cannot find method `{name}`")));
                }
            }
            Some(r) => match self.class_name_expr(r) {
                Some(class) => CallTarget::Static(class, false),
                None => CallTarget::Instance(self.expr(r)?),
            },
        };
        match target {
            CallTarget::Static(class, implicit) => {
                let c = &self.sk.classes[&class];
                let m = c.static_method(name, args.len()).or_else(|| c.static_methods.iter().find(|m| m.name == name));
                let Some(m) = m.cloned() else {
                    return Err(diag(DiagKind::UnresolvedName, pos, format!("`{class}` has no static method `{name}`")));
                };
                if !self.visible(&class, m.visibility) {
                    return Err(diag(
                        DiagKind::Visibility,
                        pos,
                        format!("static method `{class}.{name}` is {} and not visible from `{}`", m.visibility.keyword(), self.class),
                    ));
                }
                let targs = self.args(args, &m.params, &format!("`{class}.{name}`"), pos)?;
                Ok(TExpr {
                    kind: TExprKind::StaticCall { class, method: name.to_string(), args: targs, implicit },
                    ty: m.ret,
                    pos,
                })
            }
            CallTarget::Instance(recv) => {
                let Type::Class(cls) = recv.ty.clone() else {
                    return Err(diag(DiagKind::TypeMismatch, pos, format!("cannot call `{name}` on type `{}`", recv.ty)));
                };
                let (owner, sig, vis) = self
                    .instance_sig(&cls, name, args.len())
                    .ok_or_else(|| diag(DiagKind::UnresolvedName, pos, format!("`{cls}` has no method `{name}`")))?;
                if !self.visible(&owner, vis) {
                    return Err(diag(
                        DiagKind::Visibility,
                        pos,
                        format!("method `{owner}.{name}` is {} and not visible from `{}`", vis.keyword(), self.class),
                    ));
                }
                let targs = self.args(args, &sig.params, &format!("`{owner}.{name}`"), pos)?;
                Ok(TExpr {
                    kind: TExprKind::Call { recv: Box::new(recv), owner, method: name.to_string(), args: targs },
                    ty: sig.ret,
                    pos,
                })
            }
        }
    }

    fn method_by_name(&self, class: &str, name: &str) -> Option<&TMethod> {
        self.sk.class_chain(class).find_map(|c| c.methods.iter().find(|m| m.name == name))
    }

    /// Resolves an instance signature on a class or interface type. Falls
    /// back to a same-named method of another arity so the caller reports
    /// an arity error rather than an unresolved name.
    fn instance_sig(&self, ty: &str, name: &str, arity: usize) -> Option<(String, TSig, Visibility)> {
        if self.sk.interfaces.contains_key(ty) {
            let closure = self.sk.interface_closure(ty);
            let m = closure
                .iter()
                .find(|m| m.name == name && m.params.len() == arity)
                .or_else(|| closure.iter().find(|m| m.name == name))?;
            let owner = self.interface_owner(ty, m).unwrap_or_else(|| ty.to_string());
            return Some((owner, (*m).clone(), Visibility::Public));
        }
        let found = self
            .sk
            .find_method(ty, name, arity)
            .or_else(|| self.sk.class_chain(ty).find_map(|c| c.methods.iter().find(|m| m.name == name).map(|m| (c, m))));
        if let Some((c, m)) = found {
            let sig = TSig { name: m.name.clone(), params: m.params.clone(), ret: m.ret.clone() };
            return Some((c.name.clone(), sig, m.visibility));
        }
        // Generated classes may rely on interface members implemented higher up.
        for c in self.sk.class_chain(ty) {
            for i in &c.implements {
                if let Some(r) = self.instance_sig(i, name, arity) {
                    return Some(r);
                }
            }
        }
        None
    }

    fn interface_owner(&self, iface: &str, sig: &TSig) -> Option<String> {
        let i = self.sk.interfaces.get(iface)?;
        if i.methods.iter().any(|m| m == sig) {
            return Some(iface.to_string());
        }
        i.extends.iter().find_map(|e| self.interface_owner(e, sig))
    }

    fn binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr, pos: Pos) -> CResult<TExpr> {
        let l = self.expr(lhs)?;
        let r = self.expr(rhs)?;
        let mismatch = |l: &TExpr, r: &TExpr| {
            diag(
                DiagKind::TypeMismatch,
                pos,
                format!("operator `{}` cannot combine `{}` and `{}`", op.symbol(), l.ty, r.ty),
            )
        };
        let numeric = |l: TExpr, r: TExpr| -> CResult<(TExpr, TExpr, Type)> {
            if !l.ty.is_numeric() || !r.ty.is_numeric() {
                return Err(mismatch(&l, &r));
            }
            if l.ty == Type::Int && r.ty == Type::Int {
                return Ok((l, r, Type::Int));
            }
            Ok((widen(l), widen(r), Type::Long))
        };
        let (l, r, ty) = match op {
            BinOp::Add if l.ty == Type::Str || r.ty == Type::Str => {
                if !l.ty.is_primitive() || !r.ty.is_primitive() {
                    return Err(mismatch(&l, &r));
                }
                (l, r, Type::Str)
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => numeric(l, r)?,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let (l, r, _) = numeric(l, r)?;
                (l, r, Type::Bool)
            }
            BinOp::Eq | BinOp::Ne => {
                if l.ty.is_numeric() && r.ty.is_numeric() {
                    let (l, r, _) = numeric(l, r)?;
                    (l, r, Type::Bool)
                } else {
                    let ok = match (&l.ty, &r.ty) {
                        (Type::Bool, Type::Bool) | (Type::Str, Type::Str) => true,
                        (Type::Null, b) | (b, Type::Null) => b.is_reference(),
                        _ => false,
                    };
                    if !ok {
                        let mut d = mismatch(&l, &r);
                        if l.ty.is_reference() && r.ty.is_reference() {
                            d.message.push_str(" (objects compare only against `null`)");
                        }
                        return Err(d);
                    }
                    (l, r, Type::Bool)
                }
            }
            BinOp::And | BinOp::Or => {
                if l.ty != Type::Bool || r.ty != Type::Bool {
                    return Err(mismatch(&l, &r));
                }
                (l, r, Type::Bool)
            }
        };
        Ok(TExpr { kind: TExprKind::Binary { op, lhs: Box::new(l), rhs: Box::new(r) }, ty, pos })
    }
}

enum CallTarget {
    Instance(TExpr),
    Static(String, bool),
}

fn widen(e: TExpr) -> TExpr {
    if e.ty == Type::Int {
        let pos = e.pos;
        TExpr { kind: TExprKind::Widen(Box::new(e)), ty: Type::Long, pos }
    } else {
        e
    }
}

/// Conservative definite-return analysis: a trailing `return`, or an `if`
/// whose branches both return.
pub fn always_returns(stmts: &[TStmt]) -> bool {
    stmts.iter().any(|s| match &s.kind {
        TStmtKind::Return(_) => true,
        TStmtKind::If { then_block, else_block: Some(e), .. } => always_returns(then_block) && always_returns(e),
        _ => false,
    })
}
