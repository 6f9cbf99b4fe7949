//! Recursive-descent parser for `.moo` sources.

use std::collections::HashSet;

use super::ast::*;
use super::error::{ParseError, SyntaxError};
use super::lexer::{tokenize, Tok, Token};

const KEYWORDS: &[&str] = &[
    "class", "interface", "extends", "implements", "builtin", "static", "final", "native", "private",
    "protected", "public", "void", "int", "long", "bool", "string", "remote", "if", "else", "while",
    "return", "print", "super", "this", "null", "true", "false", "new", "entry",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Parses a complete program. Declaration order is preserved.
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let toks = tokenize(source)?;
    let mut p = Parser { toks, i: 0 };
    let program = p.program()?;
    check_duplicates(&program)?;
    Ok(program)
}

/// Parses a standalone expression, mainly for tests and tooling.
pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(source)?;
    let mut p = Parser { toks, i: 0 };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

type PResult<T> = Result<T, SyntaxError>;

#[derive(Default)]
struct Modifiers {
    visibility: Option<Visibility>,
    is_static: bool,
    is_final: bool,
    is_native: bool,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let idx = (self.i + n).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i < self.toks.len() - 1 {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(SyntaxError::new(self.pos(), msg))
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Long(v) => format!("`{v}L`"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::At(s) => format!("`@{s}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`, found {}", Self::describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", Self::describe(self.peek())))
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.err(format!("unexpected {}", Self::describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", Self::describe(&other))),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut kind = ProgramKind::Original;
        if matches!(self.peek(), Tok::At(s) if s == "transformed") {
            self.advance();
            self.expect_punct(";")?;
            kind = ProgramKind::Transformed;
        }
        let mut classes = Vec::new();
        let mut interfaces = Vec::new();
        let mut entry: Option<(QualifiedName, Pos)> = None;
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) if s == "entry" => {
                    let pos = self.pos();
                    self.advance();
                    let class = self.ident()?;
                    self.expect_punct(".")?;
                    let member = self.ident()?;
                    self.expect_punct(";")?;
                    if entry.is_some() {
                        return Err(SyntaxError::new(pos, "more than one `entry` directive"));
                    }
                    entry = Some((QualifiedName::new(class, member), pos));
                }
                Tok::Ident(s) if s == "interface" => interfaces.push(self.interface_decl()?),
                Tok::Ident(s) if s == "class" || s == "builtin" => classes.push(self.class_decl()?),
                other => {
                    let d = Self::describe(other);
                    return self.err(format!("expected a class or interface declaration, found {d}"));
                }
            }
        }
        let entry = match entry {
            Some((q, _)) => q,
            None => infer_entry(&classes).ok_or_else(|| {
                SyntaxError::new(
                    self.pos(),
                    "no `entry` directive and no unique static `main()` method to default to",
                )
            })?,
        };
        Ok(Program { kind, classes, interfaces, entry })
    }

    fn interface_decl(&mut self) -> PResult<InterfaceDecl> {
        let pos = self.pos();
        self.expect_kw("interface")?;
        let name = self.ident()?;
        let mut extends = Vec::new();
        if self.eat_kw("extends") {
            extends.push(self.ident()?);
            while self.eat_punct(",") {
                extends.push(self.ident()?);
            }
        }
        self.expect_punct("{")?;
        let mut methods = Vec::new();
        while !self.eat_punct("}") {
            let mpos = self.pos();
            self.eat_kw("public");
            let ret = self.ret_type()?;
            let mname = self.ident()?;
            let params = self.params()?;
            self.expect_punct(";")?;
            methods.push(MethodSig { name: mname, params, ret, pos: mpos });
        }
        Ok(InterfaceDecl { name, extends, methods, pos })
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let pos = self.pos();
        let is_builtin = self.eat_kw("builtin");
        self.expect_kw("class")?;
        let mut c = ClassDecl::new(self.ident()?);
        c.pos = pos;
        c.is_builtin = is_builtin;
        if self.eat_kw("extends") {
            c.superclass = Some(self.ident()?);
        }
        if self.eat_kw("implements") {
            c.implements.push(self.ident()?);
            while self.eat_punct(",") {
                c.implements.push(self.ident()?);
            }
        }
        self.expect_punct("{")?;
        while !self.eat_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.err(format!("unterminated class `{}`", c.name));
            }
            self.member(&mut c)?;
        }
        Ok(c)
    }

    fn modifiers(&mut self) -> PResult<Modifiers> {
        let mut m = Modifiers::default();
        loop {
            let pos = self.pos();
            let dup = |seen: bool| if seen { Err(SyntaxError::new(pos, "repeated modifier")) } else { Ok(()) };
            if self.is_kw("private") || self.is_kw("protected") || self.is_kw("public") {
                dup(m.visibility.is_some())?;
                let Tok::Ident(s) = self.advance().tok else { unreachable!() };
                m.visibility = Some(match s.as_str() {
                    "private" => Visibility::Private,
                    "protected" => Visibility::Protected,
                    _ => Visibility::Public,
                });
            } else if self.is_kw("static") && !matches!(self.peek_at(1), Tok::Punct("{")) {
                dup(m.is_static)?;
                self.advance();
                m.is_static = true;
            } else if self.is_kw("final") {
                dup(m.is_final)?;
                self.advance();
                m.is_final = true;
            } else if self.is_kw("native") {
                dup(m.is_native)?;
                self.advance();
                m.is_native = true;
            } else {
                return Ok(m);
            }
        }
    }

    fn member(&mut self, c: &mut ClassDecl) -> PResult<()> {
        let pos = self.pos();
        if self.is_kw("static") && matches!(self.peek_at(1), Tok::Punct("{")) {
            self.advance();
            let block = self.block()?;
            if c.static_init.is_some() {
                return Err(SyntaxError::new(pos, "at most one static initialiser block is allowed"));
            }
            c.static_init = Some(block);
            return Ok(());
        }
        let mods = self.modifiers()?;
        let visibility = mods.visibility.unwrap_or_default();
        // constructor
        if matches!(self.peek(), Tok::Ident(s) if *s == c.name) && matches!(self.peek_at(1), Tok::Punct("(")) {
            if mods.is_static || mods.is_final || mods.is_native {
                return Err(SyntaxError::new(pos, "constructors take only a visibility modifier"));
            }
            self.advance();
            let params = self.params()?;
            let body = self.body_or_semi()?;
            c.constructors.push(CtorDecl { params, visibility, body, pos });
            return Ok(());
        }
        let ret = self.ret_type()?;
        let name = self.ident()?;
        if self.is_punct("(") {
            if mods.is_final {
                return Err(SyntaxError::new(pos, "methods cannot be final"));
            }
            let params = self.params()?;
            let body = self.body_or_semi()?;
            let m = MethodDecl { name, params, ret, visibility, is_native: mods.is_native, body, pos };
            if mods.is_static {
                c.static_methods.push(m);
            } else {
                c.methods.push(m);
            }
            return Ok(());
        }
        let RetType::Type(ty) = ret else {
            return Err(SyntaxError::new(pos, "fields cannot have type void"));
        };
        if mods.is_native {
            return Err(SyntaxError::new(pos, "fields cannot be native"));
        }
        self.expect_punct(";")?;
        let f = FieldDecl { name, ty, visibility, is_final: mods.is_final, pos };
        if mods.is_static {
            c.static_fields.push(f);
        } else {
            c.fields.push(f);
        }
        Ok(())
    }

    fn body_or_semi(&mut self) -> PResult<Option<Block>> {
        if self.eat_punct(";") {
            Ok(None)
        } else {
            Ok(Some(self.block()?))
        }
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.eat_punct(")") {
            loop {
                let ty = self.type_ref()?;
                let name = self.ident()?;
                params.push(Param { name, ty });
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        Ok(params)
    }

    fn primitive_type(tok: &Tok) -> Option<TypeRef> {
        match tok {
            Tok::Ident(s) => match s.as_str() {
                "int" => Some(TypeRef::Int),
                "long" => Some(TypeRef::Long),
                "bool" => Some(TypeRef::Bool),
                "string" => Some(TypeRef::Str),
                "remote" => Some(TypeRef::Remote),
                _ => None,
            },
            _ => None,
        }
    }

    fn type_ref(&mut self) -> PResult<TypeRef> {
        if let Some(t) = Self::primitive_type(self.peek()) {
            self.advance();
            return Ok(t);
        }
        Ok(TypeRef::Named(self.ident()?))
    }

    fn ret_type(&mut self) -> PResult<RetType> {
        if self.eat_kw("void") {
            Ok(RetType::Void)
        } else {
            Ok(RetType::Type(self.type_ref()?))
        }
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.err("unterminated block");
            }
            stmts.push(self.stmt()?);
        }
        Ok(Block { stmts })
    }

    fn starts_local_decl(&self) -> bool {
        if Self::primitive_type(self.peek()).is_some() {
            return true;
        }
        matches!((self.peek(), self.peek_at(1)), (Tok::Ident(a), Tok::Ident(b)) if !is_keyword(a) && !is_keyword(b))
    }

    /// Statements that are recognisable from their first token.
    fn keyword_stmt(&mut self) -> PResult<Option<Stmt>> {
        let pos = self.pos();
        let kind = if self.eat_kw("if") {
            return Ok(Some(self.if_rest(pos)?));
        } else if self.eat_kw("while") {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let body = self.block()?;
            StmtKind::While { cond, body }
        } else if self.eat_kw("return") {
            let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            StmtKind::Return(value)
        } else if self.is_kw("print") {
            self.advance();
            self.expect_punct("(")?;
            let e = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            StmtKind::Print(e)
        } else if self.is_kw("super") {
            self.advance();
            let args = self.args()?;
            self.expect_punct(";")?;
            StmtKind::SuperCall(args)
        } else if self.starts_local_decl() {
            let ty = self.type_ref()?;
            let name = self.ident()?;
            let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
            self.expect_punct(";")?;
            StmtKind::Local { ty, name, init }
        } else {
            return Ok(None);
        };
        Ok(Some(Stmt { kind, pos }))
    }

    fn if_rest(&mut self, pos: Pos) -> PResult<Stmt> {
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then_block = self.block()?;
        let else_block = if self.eat_kw("else") {
            if self.is_kw("if") {
                let ipos = self.pos();
                self.advance();
                Some(Block { stmts: vec![self.if_rest(ipos)?] })
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt { kind: StmtKind::If { cond, then_block, else_block }, pos })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        if let Some(s) = self.keyword_stmt()? {
            return Ok(s);
        }
        let pos = self.pos();
        let e = self.expr()?;
        let s = self.finish_expr_stmt(e, pos)?;
        self.expect_punct(";")?;
        Ok(s)
    }

    fn finish_expr_stmt(&mut self, e: Expr, pos: Pos) -> PResult<Stmt> {
        if self.eat_punct("=") {
            if !matches!(e.kind, ExprKind::Name(_) | ExprKind::Member { .. }) {
                return Err(SyntaxError::new(e.pos, "left-hand side of `=` must be a variable or field"));
            }
            let value = self.expr()?;
            return Ok(Stmt { kind: StmtKind::Assign { target: e, value }, pos });
        }
        Ok(Stmt { kind: StmtKind::Expr(e), pos })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.eat_punct(")") {
            loop {
                args.push(self.expr()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        Ok(args)
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek() else { return None };
        Some(match *p {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let pos = self.pos();
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, pos };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        if self.eat_punct("-") {
            let e = self.unary()?;
            return Ok(Expr { kind: ExprKind::Unary { op: UnOp::Neg, expr: Box::new(e) }, pos });
        }
        if self.eat_punct("!") {
            let e = self.unary()?;
            return Ok(Expr { kind: ExprKind::Unary { op: UnOp::Not, expr: Box::new(e) }, pos });
        }
        if self.is_punct("(") && matches!(self.peek_at(2), Tok::Punct(")")) {
            if let Some(ty) = Self::primitive_type(self.peek_at(1)) {
                self.advance();
                self.advance();
                self.advance();
                let e = self.unary()?;
                return Ok(Expr { kind: ExprKind::Cast { ty, expr: Box::new(e) }, pos });
            }
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.is_punct(".") {
            let pos = self.pos();
            self.advance();
            let name = self.ident()?;
            if self.is_punct("(") {
                let args = self.args()?;
                e = Expr { kind: ExprKind::Call { recv: Some(Box::new(e)), name, args }, pos };
            } else {
                e = Expr { kind: ExprKind::Member { obj: Box::new(e), name }, pos };
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                ExprKind::Lit(Literal::Int(v))
            }
            Tok::Long(v) => {
                self.advance();
                ExprKind::Lit(Literal::Long(v))
            }
            Tok::Str(s) => {
                self.advance();
                ExprKind::Lit(Literal::Str(s))
            }
            Tok::At(name) => {
                self.advance();
                return self.intrinsic(&name, pos);
            }
            Tok::Punct("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_punct(")")?;
                return Ok(e);
            }
            Tok::Punct("({") => {
                self.advance();
                return self.seq_rest(pos);
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.advance();
                    ExprKind::Lit(Literal::Bool(true))
                }
                "false" => {
                    self.advance();
                    ExprKind::Lit(Literal::Bool(false))
                }
                "null" => {
                    self.advance();
                    ExprKind::Lit(Literal::Null)
                }
                "this" => {
                    self.advance();
                    ExprKind::This
                }
                "new" => {
                    self.advance();
                    let class = self.ident()?;
                    let args = self.args()?;
                    ExprKind::New { class, args }
                }
                _ => {
                    let name = self.ident()?;
                    if self.is_punct("(") {
                        let args = self.args()?;
                        ExprKind::Call { recv: None, name, args }
                    } else {
                        ExprKind::Name(name)
                    }
                }
            },
            other => return self.err(format!("expected expression, found {}", Self::describe(&other))),
        };
        Ok(Expr { kind, pos })
    }

    fn intrinsic(&mut self, name: &str, pos: Pos) -> PResult<Expr> {
        let Some(kind) = IntrinsicKind::from_name(name) else {
            return Err(SyntaxError::new(pos, format!("unknown intrinsic `@{name}`")));
        };
        self.expect_punct("(")?;
        let e = match kind {
            IntrinsicKind::Create | IntrinsicKind::Discover => {
                let class = self.ident()?;
                self.expect_punct(")")?;
                ExprKind::Intrinsic { kind, class: Some(class), member: None, args: Vec::new() }
            }
            IntrinsicKind::RemoteInvoke => {
                let handle = self.expr()?;
                self.expect_punct(",")?;
                let member = match self.advance().tok {
                    Tok::Str(s) => s,
                    other => {
                        return Err(SyntaxError::new(
                            pos,
                            format!("expected member name string, found {}", Self::describe(&other)),
                        ))
                    }
                };
                let mut args = vec![handle];
                while self.eat_punct(",") {
                    args.push(self.expr()?);
                }
                self.expect_punct(")")?;
                ExprKind::Intrinsic { kind, class: None, member: Some(member), args }
            }
        };
        Ok(Expr { kind: e, pos })
    }

    fn seq_rest(&mut self, pos: Pos) -> PResult<Expr> {
        let mut stmts = Vec::new();
        loop {
            if let Some(s) = self.keyword_stmt()? {
                stmts.push(s);
                continue;
            }
            let spos = self.pos();
            let e = self.expr()?;
            if self.eat_punct("})") {
                return Ok(Expr { kind: ExprKind::Seq { stmts, value: Box::new(e) }, pos });
            }
            let s = self.finish_expr_stmt(e, spos)?;
            self.expect_punct(";")?;
            stmts.push(s);
        }
    }
}

fn infer_entry(classes: &[ClassDecl]) -> Option<QualifiedName> {
    let mut found = classes
        .iter()
        .filter(|c| !c.is_builtin)
        .filter(|c| c.static_methods.iter().any(|m| m.name == "main" && m.params.is_empty()))
        .map(|c| QualifiedName::new(c.name.clone(), "main"));
    let first = found.next()?;
    if found.next().is_some() {
        return None;
    }
    Some(first)
}

fn check_duplicates(p: &Program) -> Result<(), ParseError> {
    let mut types = HashSet::new();
    for (name, pos, what) in p
        .classes
        .iter()
        .map(|c| (&c.name, c.pos, "class"))
        .chain(p.interfaces.iter().map(|i| (&i.name, i.pos, "interface")))
    {
        if !types.insert(name.as_str()) {
            return Err(ParseError::Duplicate { pos, what, name: name.clone() });
        }
    }
    let allow_arity_overloads = p.kind == ProgramKind::Transformed;
    for c in &p.classes {
        check_namespace(&c.fields, &c.methods, allow_arity_overloads)?;
        check_namespace(&c.static_fields, &c.static_methods, allow_arity_overloads)?;
        let mut arities = HashSet::new();
        for k in &c.constructors {
            if !arities.insert(k.params.len()) {
                return Err(ParseError::Duplicate {
                    pos: k.pos,
                    what: "constructor of arity",
                    name: k.params.len().to_string(),
                });
            }
        }
        for m in c.methods.iter().chain(&c.static_methods) {
            check_params(&m.params, m.pos)?;
        }
        for k in &c.constructors {
            check_params(&k.params, k.pos)?;
        }
    }
    for i in &p.interfaces {
        let mut seen = HashSet::new();
        for m in &i.methods {
            if !seen.insert((m.name.as_str(), m.params.len())) {
                return Err(ParseError::Duplicate { pos: m.pos, what: "interface method", name: m.name.clone() });
            }
        }
    }
    Ok(())
}

fn check_namespace(fields: &[FieldDecl], methods: &[MethodDecl], arity_overloads: bool) -> Result<(), ParseError> {
    let mut names = HashSet::new();
    for f in fields {
        if !names.insert(f.name.as_str()) {
            return Err(ParseError::Duplicate { pos: f.pos, what: "member", name: f.name.clone() });
        }
    }
    let mut sigs = HashSet::new();
    for m in methods {
        let clash_with_field = fields.iter().any(|f| f.name == m.name);
        let fresh = if arity_overloads {
            sigs.insert((m.name.as_str(), m.params.len()))
        } else {
            sigs.insert((m.name.as_str(), 0))
        };
        if clash_with_field || !fresh {
            return Err(ParseError::Duplicate { pos: m.pos, what: "member", name: m.name.clone() });
        }
    }
    Ok(())
}

fn check_params(params: &[Param], pos: Pos) -> Result<(), ParseError> {
    let mut seen = HashSet::new();
    for p in params {
        if !seen.insert(p.name.as_str()) {
            return Err(ParseError::Duplicate { pos, what: "parameter", name: p.name.clone() });
        }
    }
    Ok(())
}
