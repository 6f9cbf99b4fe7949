//! Surface syntax tree for MiniOO.
//!
//! Every node carries a [`Pos`] for diagnostics. Positions never take part in
//! structural equality, so `parse(pretty(p)) == p` compares shape only.

use std::fmt;

#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _other: &Pos) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Whether a source file is hand-written or produced by the transformer.
///
/// Generated programs may use interfaces, `$`-prefixed names, reserved
/// suffixes, intrinsics, the `remote` type and statement expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProgramKind {
    #[default]
    Original,
    Transformed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub kind: ProgramKind,
    pub classes: Vec<ClassDecl>,
    pub interfaces: Vec<InterfaceDecl>,
    pub entry: QualifiedName,
}

impl Program {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn interface(&self, name: &str) -> Option<&InterfaceDecl> {
        self.interfaces.iter().find(|i| i.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QualifiedName {
    pub class: String,
    pub member: String,
}

impl QualifiedName {
    pub fn new(class: impl Into<String>, member: impl Into<String>) -> Self {
        QualifiedName { class: class.into(), member: member.into() }
    }
}

impl fmt::Display for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.member)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Visibility {
    Private,
    Protected,
    #[default]
    Public,
}

impl Visibility {
    pub fn keyword(self) -> &'static str {
        match self {
            Visibility::Private => "private",
            Visibility::Protected => "protected",
            Visibility::Public => "public",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeRef {
    Int,
    Long,
    Bool,
    Str,
    /// Opaque remote handle; only legal in generated proxies.
    Remote,
    Named(String),
}

impl TypeRef {
    pub fn named(name: impl Into<String>) -> Self {
        TypeRef::Named(name.into())
    }

    pub fn as_named(&self) -> Option<&str> {
        match self {
            TypeRef::Named(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_primitive(&self) -> bool {
        !matches!(self, TypeRef::Named(_) | TypeRef::Remote)
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Int => f.write_str("int"),
            TypeRef::Long => f.write_str("long"),
            TypeRef::Bool => f.write_str("bool"),
            TypeRef::Str => f.write_str("string"),
            TypeRef::Remote => f.write_str("remote"),
            TypeRef::Named(n) => f.write_str(n),
        }
    }
}

/// A `TypeRef` or `void`, for method results.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RetType {
    Void,
    Type(TypeRef),
}

impl RetType {
    pub fn as_type(&self) -> Option<&TypeRef> {
        match self {
            RetType::Void => None,
            RetType::Type(t) => Some(t),
        }
    }
}

impl fmt::Display for RetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetType::Void => f.write_str("void"),
            RetType::Type(t) => t.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub superclass: Option<String>,
    /// Only generated classes implement interfaces.
    pub implements: Vec<String>,
    pub is_builtin: bool,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub constructors: Vec<CtorDecl>,
    pub static_fields: Vec<FieldDecl>,
    pub static_methods: Vec<MethodDecl>,
    pub static_init: Option<Block>,
    pub pos: Pos,
}

impl ClassDecl {
    pub fn new(name: impl Into<String>) -> Self {
        ClassDecl {
            name: name.into(),
            superclass: None,
            implements: Vec::new(),
            is_builtin: false,
            fields: Vec::new(),
            methods: Vec::new(),
            constructors: Vec::new(),
            static_fields: Vec::new(),
            static_methods: Vec::new(),
            static_init: None,
            pos: Pos::default(),
        }
    }

    pub fn has_native_method(&self) -> bool {
        self.methods.iter().chain(&self.static_methods).any(|m| m.is_native)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceDecl {
    pub name: String,
    pub extends: Vec<String>,
    pub methods: Vec<MethodSig>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: TypeRef,
    pub visibility: Visibility,
    pub is_final: bool,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: TypeRef,
}

impl Param {
    pub fn new(name: impl Into<String>, ty: TypeRef) -> Self {
        Param { name: name.into(), ty }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSig {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: RetType,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: RetType,
    pub visibility: Visibility,
    pub is_native: bool,
    /// Absent for native methods and members of builtin classes.
    pub body: Option<Block>,
    pub pos: Pos,
}

impl MethodDecl {
    pub fn signature(&self) -> MethodSig {
        MethodSig {
            name: self.name.clone(),
            params: self.params.clone(),
            ret: self.ret.clone(),
            pos: self.pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtorDecl {
    pub params: Vec<Param>,
    pub visibility: Visibility,
    /// Absent for builtin classes.
    pub body: Option<Block>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Block { stmts }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { kind, pos: Pos::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Local { ty: TypeRef, name: String, init: Option<Expr> },
    /// `target = value;` where target is a name or a member expression.
    Assign { target: Expr, value: Expr },
    Expr(Expr),
    Print(Expr),
    Return(Option<Expr>),
    If { cond: Expr, then_block: Block, else_block: Option<Block> },
    While { cond: Expr, body: Block },
    /// `super(args);`, only as the first statement of a constructor.
    SuperCall(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    /// Magnitude as written; range is checked later so `-2147483648` works.
    Int(u64),
    Long(u64),
    Bool(bool),
    Str(String),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntrinsicKind {
    /// `@create(C)`: placement-policy object creation.
    Create,
    /// `@discover(C)`: placement-policy static implementation lookup.
    Discover,
    /// `@remote_invoke(handle, "member", args...)`.
    RemoteInvoke,
}

impl IntrinsicKind {
    pub fn name(self) -> &'static str {
        match self {
            IntrinsicKind::Create => "create",
            IntrinsicKind::Discover => "discover",
            IntrinsicKind::RemoteInvoke => "remote_invoke",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "create" => Some(IntrinsicKind::Create),
            "discover" => Some(IntrinsicKind::Discover),
            "remote_invoke" => Some(IntrinsicKind::RemoteInvoke),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { kind, pos: Pos::default() }
    }

    pub fn name(n: impl Into<String>) -> Self {
        Expr::new(ExprKind::Name(n.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    /// Unqualified identifier: local, field, static field or class name.
    Name(String),
    This,
    /// `obj.name`; `obj` may be a class name for static access.
    Member { obj: Box<Expr>, name: String },
    /// `recv.name(args)` or, with no receiver, `name(args)`.
    Call { recv: Option<Box<Expr>>, name: String, args: Vec<Expr> },
    New { class: String, args: Vec<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnOp, expr: Box<Expr> },
    Cast { ty: TypeRef, expr: Box<Expr> },
    Intrinsic { kind: IntrinsicKind, class: Option<String>, member: Option<String>, args: Vec<Expr> },
    /// `({ stmts; value })`, generated code only.
    Seq { stmts: Vec<Stmt>, value: Box<Expr> },
}
