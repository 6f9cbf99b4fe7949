//! Resolved, fully typed form of a checked program.
//!
//! Every name is resolved to a local, field, static field or class, every
//! call to its declaring owner, and implicit `int -> long` conversions are
//! explicit [`TExprKind::Widen`] nodes.

use std::fmt;

use indexmap::IndexMap;

use super::ast::{BinOp, Pos, Program, QualifiedName, UnOp, Visibility};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Int,
    Long,
    Bool,
    Str,
    Null,
    Void,
    Remote,
    Class(String),
}

impl Type {
    pub fn class(name: impl Into<String>) -> Self {
        Type::Class(name.into())
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Int | Type::Long)
    }

    pub fn is_primitive(&self) -> bool {
        matches!(self, Type::Int | Type::Long | Type::Bool | Type::Str)
    }

    pub fn is_reference(&self) -> bool {
        matches!(self, Type::Class(_) | Type::Remote | Type::Null)
    }

    pub fn class_name(&self) -> Option<&str> {
        match self {
            Type::Class(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Long => f.write_str("long"),
            Type::Bool => f.write_str("bool"),
            Type::Str => f.write_str("string"),
            Type::Null => f.write_str("null"),
            Type::Void => f.write_str("void"),
            Type::Remote => f.write_str("remote"),
            Type::Class(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Type,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExprKind {
    Int(i32),
    Long(i64),
    Bool(bool),
    Str(String),
    Null,
    Local(String),
    This { implicit: bool },
    /// Instance field read; `owner` is the declaring class.
    Field { obj: Box<TExpr>, owner: String, name: String },
    StaticField { class: String, name: String, implicit: bool },
    /// Dynamically dispatched call; `owner` declares the resolved signature.
    Call { recv: Box<TExpr>, owner: String, method: String, args: Vec<TExpr> },
    StaticCall { class: String, method: String, args: Vec<TExpr>, implicit: bool },
    New { class: String, args: Vec<TExpr> },
    Binary { op: BinOp, lhs: Box<TExpr>, rhs: Box<TExpr> },
    Unary { op: UnOp, expr: Box<TExpr> },
    Cast { expr: Box<TExpr> },
    /// Implicit `int -> long` conversion.
    Widen(Box<TExpr>),
    Create { class: String },
    Discover { class: String },
    RemoteInvoke { handle: Box<TExpr>, member: String, args: Vec<TExpr> },
    Seq { stmts: Vec<TStmt>, value: Box<TExpr> },
}

impl TExpr {
    /// Strips implicit conversions.
    pub fn unwidened(&self) -> &TExpr {
        match &self.kind {
            TExprKind::Widen(inner) => inner.unwidened(),
            _ => self,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TStmt {
    pub kind: TStmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TStmtKind {
    Local { name: String, ty: Type, init: Option<TExpr> },
    AssignLocal { name: String, value: TExpr },
    AssignField { obj: TExpr, owner: String, name: String, value: TExpr },
    AssignStatic { class: String, name: String, value: TExpr, implicit: bool },
    Expr(TExpr),
    Print(TExpr),
    Return(Option<TExpr>),
    If { cond: TExpr, then_block: Vec<TStmt>, else_block: Option<Vec<TStmt>> },
    While { cond: TExpr, body: Vec<TStmt> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TField {
    pub name: String,
    pub ty: Type,
    pub visibility: Visibility,
    pub is_final: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TParam {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TMethod {
    pub name: String,
    pub params: Vec<TParam>,
    pub ret: Type,
    pub visibility: Visibility,
    pub is_native: bool,
    pub body: Option<Vec<TStmt>>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperCall {
    pub class: String,
    pub args: Vec<TExpr>,
    /// True when the source had no `super(...)` statement.
    pub implicit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TCtor {
    pub params: Vec<TParam>,
    pub visibility: Visibility,
    pub super_call: Option<SuperCall>,
    /// Body without the leading `super(...)`; absent for builtins.
    pub body: Option<Vec<TStmt>>,
    /// Synthesised because the class declares no constructor.
    pub is_default: bool,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TClass {
    pub name: String,
    pub superclass: Option<String>,
    pub implements: Vec<String>,
    pub is_builtin: bool,
    pub fields: Vec<TField>,
    pub static_fields: Vec<TField>,
    pub methods: Vec<TMethod>,
    pub static_methods: Vec<TMethod>,
    pub ctors: Vec<TCtor>,
    pub static_init: Option<Vec<TStmt>>,
    pub pos: Pos,
}

impl TClass {
    pub fn field(&self, name: &str) -> Option<&TField> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn static_field(&self, name: &str) -> Option<&TField> {
        self.static_fields.iter().find(|f| f.name == name)
    }

    pub fn method(&self, name: &str, arity: usize) -> Option<&TMethod> {
        self.methods.iter().find(|m| m.name == name && m.params.len() == arity)
    }

    pub fn static_method(&self, name: &str, arity: usize) -> Option<&TMethod> {
        self.static_methods.iter().find(|m| m.name == name && m.params.len() == arity)
    }

    pub fn ctor(&self, arity: usize) -> Option<&TCtor> {
        self.ctors.iter().find(|c| c.params.len() == arity)
    }

    pub fn has_native_method(&self) -> bool {
        self.methods.iter().chain(&self.static_methods).any(|m| m.is_native)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TSig {
    pub name: String,
    pub params: Vec<TParam>,
    pub ret: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TInterface {
    pub name: String,
    pub extends: Vec<String>,
    pub methods: Vec<TSig>,
}

/// A program that passed [`check_program`](super::check::check_program).
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedProgram {
    pub program: Program,
    pub classes: IndexMap<String, TClass>,
    pub interfaces: IndexMap<String, TInterface>,
    pub entry: QualifiedName,
}

impl CheckedProgram {
    pub fn class(&self, name: &str) -> Option<&TClass> {
        self.classes.get(name)
    }

    pub fn is_transformed(&self) -> bool {
        self.program.kind == super::ast::ProgramKind::Transformed
    }

    /// `sub` itself followed by its superclasses, nearest first.
    pub fn class_chain<'a>(&'a self, sub: &str) -> impl Iterator<Item = &'a TClass> + 'a {
        let mut cur = self.classes.get(sub);
        std::iter::from_fn(move || {
            let c = cur?;
            cur = c.superclass.as_deref().and_then(|s| self.classes.get(s));
            Some(c)
        })
    }

    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        self.class_chain(sub).any(|c| c.name == sup)
    }

    /// All instance fields of a class, superclass fields first.
    pub fn all_fields(&self, class: &str) -> Vec<&TField> {
        let chain: Vec<&TClass> = self.class_chain(class).collect();
        chain.iter().rev().flat_map(|c| c.fields.iter()).collect()
    }

    /// Resolves an instance method by dynamic class, walking superclasses.
    pub fn find_method(&self, class: &str, name: &str, arity: usize) -> Option<(&TClass, &TMethod)> {
        self.class_chain(class).find_map(|c| c.method(name, arity).map(|m| (c, m)))
    }

    /// Interface signatures including inherited ones, supers first, deduplicated by name/arity.
    pub fn interface_closure(&self, name: &str) -> Vec<&TSig> {
        let mut out: Vec<&TSig> = Vec::new();
        fn walk<'a>(p: &'a CheckedProgram, name: &str, out: &mut Vec<&'a TSig>) {
            let Some(i) = p.interfaces.get(name) else { return };
            for sup in &i.extends {
                walk(p, sup, out);
            }
            for m in &i.methods {
                if !out.iter().any(|o| o.name == m.name && o.params.len() == m.params.len()) {
                    out.push(m);
                }
            }
        }
        walk(self, name, &mut out);
        out
    }
}
