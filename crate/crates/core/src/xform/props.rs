//! Structural checks over generated programs: interface conformance and
//! interface-only typing.

use std::collections::HashMap;

use crate::minioo::ast::*;

use super::names::{self, Role};

fn sig_matches(m: &MethodDecl, s: &MethodSig) -> bool {
    m.name == s.name
        && m.ret == s.ret
        && m.params.len() == s.params.len()
        && m.params.iter().zip(&s.params).all(|(a, b)| a.ty == b.ty)
}

fn closure<'a>(ifaces: &HashMap<&str, &'a InterfaceDecl>, name: &str, out: &mut Vec<&'a MethodSig>) {
    if let Some(i) = ifaces.get(name) {
        for e in &i.extends {
            closure(ifaces, e, out);
        }
        out.extend(i.methods.iter());
    }
}

/// Interface members lacking an implementation, as `Class: Iface.member`.
pub fn conformance_violations(p: &Program) -> Vec<String> {
    let ifaces: HashMap<&str, &InterfaceDecl> = p.interfaces.iter().map(|i| (i.name.as_str(), i)).collect();
    let classes: HashMap<&str, &ClassDecl> = p.classes.iter().map(|c| (c.name.as_str(), c)).collect();
    let mut out = Vec::new();
    for c in &p.classes {
        for iname in &c.implements {
            let mut sigs = Vec::new();
            closure(&ifaces, iname, &mut sigs);
            for s in sigs {
                let mut cur = Some(c);
                let mut found = false;
                while let Some(k) = cur {
                    if k.methods.iter().any(|m| m.visibility == Visibility::Public && sig_matches(m, s)) {
                        found = true;
                        break;
                    }
                    cur = k.superclass.as_deref().and_then(|n| classes.get(n).copied());
                }
                if !found {
                    out.push(format!("{}: {}.{}", c.name, iname, s.name));
                }
            }
        }
    }
    out
}

/// Type references in generated code that name a concrete transformed class
/// or implementation, outside `make` bodies and proxy handles.
pub fn interface_only_violations(p: &Program, transformable: &[String]) -> Vec<String> {
    let forbidden = |t: &TypeRef| -> bool {
        let Some(n) = t.as_named() else { return false };
        if transformable.iter().any(|c| c == n) {
            return true;
        }
        matches!(
            names::role(n),
            Some(Role::OLocal(_) | Role::CLocal(_) | Role::OProxy(..) | Role::CProxy(..) | Role::OFactory(_) | Role::CFactory(_))
        )
    };
    let mut out = Vec::new();
    for c in &p.classes {
        if names::role(&c.name).is_none() {
            continue;
        }
        let mut report = |what: String, t: &TypeRef| {
            if forbidden(t) {
                out.push(format!("{}: {what} has type {t}", c.name));
            }
        };
        for f in c.fields.iter().chain(&c.static_fields) {
            report(format!("field {}", f.name), &f.ty);
        }
        for m in c.methods.iter().chain(&c.static_methods) {
            if let RetType::Type(t) = &m.ret {
                report(format!("result of {}", m.name), t);
            }
            for prm in &m.params {
                report(format!("parameter {} of {}", prm.name, m.name), &prm.ty);
            }
            if let Some(b) = &m.body {
                let mut locals = Vec::new();
                collect_locals(&b.stmts, &mut locals);
                for (n, t) in locals {
                    report(format!("local {n} in {}", m.name), t);
                }
            }
        }
        for k in &c.constructors {
            for prm in &k.params {
                report(format!("constructor parameter {}", prm.name), &prm.ty);
            }
        }
    }
    for i in &p.interfaces {
        for m in &i.methods {
            let ts = m.params.iter().map(|p| &p.ty).chain(m.ret.as_type());
            for t in ts {
                if forbidden(t) {
                    out.push(format!("{}: signature {} mentions {t}", i.name, m.name));
                }
            }
        }
    }
    out
}

fn collect_locals<'a>(ss: &'a [Stmt], out: &mut Vec<(&'a str, &'a TypeRef)>) {
    for s in ss {
        match &s.kind {
            StmtKind::Local { ty, name, init } => {
                out.push((name, ty));
                if let Some(e) = init {
                    expr_locals(e, out);
                }
            }
            StmtKind::If { then_block, else_block, .. } => {
                collect_locals(&then_block.stmts, out);
                if let Some(b) = else_block {
                    collect_locals(&b.stmts, out);
                }
            }
            StmtKind::While { cond, body } => {
                expr_locals(cond, out);
                collect_locals(&body.stmts, out);
            }
            StmtKind::Expr(e) | StmtKind::Print(e) | StmtKind::Return(Some(e)) => expr_locals(e, out),
            StmtKind::Assign { value, .. } => expr_locals(value, out),
            _ => {}
        }
    }
}

fn expr_locals<'a>(e: &'a Expr, out: &mut Vec<(&'a str, &'a TypeRef)>) {
    match &e.kind {
        ExprKind::Seq { stmts, value } => {
            collect_locals(stmts, out);
            expr_locals(value, out);
        }
        ExprKind::Call { recv, args, .. } => {
            if let Some(r) = recv {
                expr_locals(r, out);
            }
            args.iter().for_each(|a| expr_locals(a, out));
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            expr_locals(lhs, out);
            expr_locals(rhs, out);
        }
        ExprKind::Unary { expr, .. } | ExprKind::Cast { expr, .. } | ExprKind::Member { obj: expr, .. } => {
            expr_locals(expr, out)
        }
        ExprKind::New { args, .. } | ExprKind::Intrinsic { args, .. } => args.iter().for_each(|a| expr_locals(a, out)),
        _ => {}
    }
}
