//! Canonical text rendering of a [`Program`]. Output reparses to a
//! structurally identical tree.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    if p.kind == ProgramKind::Transformed {
        out.push_str("@transformed;\n\n");
    }
    for i in &p.interfaces {
        interface(&mut out, i);
        out.push('\n');
    }
    for c in &p.classes {
        class(&mut out, c);
        out.push('\n');
    }
    let _ = writeln!(out, "entry {};", p.entry);
    out
}

pub fn print_class(c: &ClassDecl) -> String {
    let mut out = String::new();
    class(&mut out, c);
    out
}

pub fn print_interface(i: &InterfaceDecl) -> String {
    let mut out = String::new();
    interface(&mut out, i);
    out
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e, 0, 0);
    out
}

fn params(ps: &[Param]) -> String {
    ps.iter().map(|p| format!("{} {}", p.ty, p.name)).collect::<Vec<_>>().join(", ")
}

fn interface(out: &mut String, i: &InterfaceDecl) {
    let _ = write!(out, "interface {}", i.name);
    if !i.extends.is_empty() {
        let _ = write!(out, " extends {}", i.extends.join(", "));
    }
    out.push_str(" {\n");
    for m in &i.methods {
        let _ = writeln!(out, "{INDENT}{} {}({});", m.ret, m.name, params(&m.params));
    }
    out.push_str("}\n");
}

fn class(out: &mut String, c: &ClassDecl) {
    if c.is_builtin {
        out.push_str("builtin ");
    }
    let _ = write!(out, "class {}", c.name);
    if let Some(s) = &c.superclass {
        let _ = write!(out, " extends {s}");
    }
    if !c.implements.is_empty() {
        let _ = write!(out, " implements {}", c.implements.join(", "));
    }
    out.push_str(" {\n");
    for f in &c.fields {
        field(out, f, false);
    }
    for k in &c.constructors {
        let _ = write!(out, "{INDENT}{} {}({})", k.visibility.keyword(), c.name, params(&k.params));
        body(out, k.body.as_ref(), 1);
    }
    for m in &c.methods {
        method(out, m, false);
    }
    for f in &c.static_fields {
        field(out, f, true);
    }
    for m in &c.static_methods {
        method(out, m, true);
    }
    if let Some(b) = &c.static_init {
        let _ = write!(out, "{INDENT}static");
        body(out, Some(b), 1);
    }
    out.push_str("}\n");
}

fn field(out: &mut String, f: &FieldDecl, is_static: bool) {
    let _ = write!(out, "{INDENT}{}", f.visibility.keyword());
    if is_static {
        out.push_str(" static");
    }
    if f.is_final {
        out.push_str(" final");
    }
    let _ = writeln!(out, " {} {};", f.ty, f.name);
}

fn method(out: &mut String, m: &MethodDecl, is_static: bool) {
    let _ = write!(out, "{INDENT}{}", m.visibility.keyword());
    if is_static {
        out.push_str(" static");
    }
    if m.is_native {
        out.push_str(" native");
    }
    let _ = write!(out, " {} {}({})", m.ret, m.name, params(&m.params));
    body(out, m.body.as_ref(), 1);
}

fn body(out: &mut String, b: Option<&Block>, depth: usize) {
    match b {
        None => out.push_str(";\n"),
        Some(b) => {
            out.push(' ');
            block(out, b, depth);
            out.push('\n');
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn block(out: &mut String, b: &Block, depth: usize) {
    if b.stmts.is_empty() {
        out.push_str("{ }");
        return;
    }
    out.push_str("{\n");
    for s in &b.stmts {
        indent(out, depth + 1);
        stmt(out, s, depth + 1);
        out.push('\n');
    }
    indent(out, depth);
    out.push('}');
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    match &s.kind {
        StmtKind::Local { ty, name, init } => {
            let _ = write!(out, "{ty} {name}");
            if let Some(e) = init {
                out.push_str(" = ");
                expr(out, e, 0, depth);
            }
            out.push(';');
        }
        StmtKind::Assign { target, value } => {
            expr(out, target, 0, depth);
            out.push_str(" = ");
            expr(out, value, 0, depth);
            out.push(';');
        }
        StmtKind::Expr(e) => {
            expr(out, e, 0, depth);
            out.push(';');
        }
        StmtKind::Print(e) => {
            out.push_str("print(");
            expr(out, e, 0, depth);
            out.push_str(");");
        }
        StmtKind::Return(None) => out.push_str("return;"),
        StmtKind::Return(Some(e)) => {
            out.push_str("return ");
            expr(out, e, 0, depth);
            out.push(';');
        }
        StmtKind::If { cond, then_block, else_block } => {
            out.push_str("if (");
            expr(out, cond, 0, depth);
            out.push_str(") ");
            block(out, then_block, depth);
            if let Some(eb) = else_block {
                out.push_str(" else ");
                match eb.stmts.as_slice() {
                    [only] if matches!(only.kind, StmtKind::If { .. }) => stmt(out, only, depth),
                    _ => block(out, eb, depth),
                }
            }
        }
        StmtKind::While { cond, body } => {
            out.push_str("while (");
            expr(out, cond, 0, depth);
            out.push_str(") ");
            block(out, body, depth);
        }
        StmtKind::SuperCall(args) => {
            out.push_str("super");
            arg_list(out, args, depth);
            out.push(';');
        }
    }
}

fn arg_list(out: &mut String, args: &[Expr], depth: usize) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a, 0, depth);
    }
    out.push(')');
}

const UNARY_PREC: u8 = 7;
const POSTFIX_PREC: u8 = 8;

fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Unary { .. } | ExprKind::Cast { .. } => UNARY_PREC,
        _ => POSTFIX_PREC,
    }
}

/// Writes `e`, parenthesising when its precedence is below `min`.
fn expr(out: &mut String, e: &Expr, min: u8, depth: usize) {
    let prec = expr_prec(e);
    let paren = prec < min;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Lit(l) => literal(out, l),
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::This => out.push_str("this"),
        ExprKind::Member { obj, name } => {
            expr(out, obj, POSTFIX_PREC, depth);
            let _ = write!(out, ".{name}");
        }
        ExprKind::Call { recv, name, args } => {
            if let Some(r) = recv {
                expr(out, r, POSTFIX_PREC, depth);
                out.push('.');
            }
            out.push_str(name);
            arg_list(out, args, depth);
        }
        ExprKind::New { class, args } => {
            let _ = write!(out, "new {class}");
            arg_list(out, args, depth);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            expr(out, lhs, prec, depth);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, rhs, prec + 1, depth);
        }
        ExprKind::Unary { op, expr: inner } => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            // `- -x` must not lex as a different token sequence; a space is enough.
            if matches!(inner.kind, ExprKind::Unary { op: UnOp::Neg, .. }) && *op == UnOp::Neg {
                out.push(' ');
            }
            expr(out, inner, UNARY_PREC, depth);
        }
        ExprKind::Cast { ty, expr: inner } => {
            let _ = write!(out, "({ty}) ");
            expr(out, inner, UNARY_PREC, depth);
        }
        ExprKind::Intrinsic { kind, class, member, args } => {
            let _ = write!(out, "@{}(", kind.name());
            match kind {
                IntrinsicKind::Create | IntrinsicKind::Discover => {
                    out.push_str(class.as_deref().unwrap_or(""));
                }
                IntrinsicKind::RemoteInvoke => {
                    if let Some(h) = args.first() {
                        expr(out, h, 0, depth);
                    }
                    let _ = write!(out, ", {:?}", member.as_deref().unwrap_or(""));
                    for a in args.iter().skip(1) {
                        out.push_str(", ");
                        expr(out, a, 0, depth);
                    }
                }
            }
            out.push(')');
        }
        ExprKind::Seq { stmts, value } => {
            out.push_str("({ ");
            for s in stmts {
                stmt(out, s, depth);
                out.push(' ');
            }
            expr(out, value, 0, depth);
            out.push_str(" })");
        }
    }
    if paren {
        out.push(')');
    }
}

fn literal(out: &mut String, l: &Literal) {
    match l {
        Literal::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Literal::Long(v) => {
            let _ = write!(out, "{v}L");
        }
        Literal::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Literal::Str(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        Literal::Null => out.push_str("null"),
    }
}
