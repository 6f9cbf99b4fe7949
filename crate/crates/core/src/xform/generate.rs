//! Per-class generation of the interface, implementation, factory and proxy
//! family.

use crate::minioo::ast::*;
use crate::minioo::typed::*;

use super::analysis::TransformableSet;
use super::names;
use super::rewrite::{bound_names, call, discover, expr_stmt, Rewriter, Scope};
use super::XformError;

/// Protocols with a proxy generator.
pub const KNOWN_PROTOCOLS: &[&str] = &["RAF"];

fn ret_stmt(e: Expr) -> Stmt {
    Stmt::new(StmtKind::Return(Some(e)))
}

fn method(name: &str, params: Vec<Param>, ret: RetType, stmts: Vec<Stmt>) -> MethodDecl {
    MethodDecl {
        name: name.to_string(),
        params,
        ret,
        visibility: Visibility::Public,
        is_native: false,
        body: Some(Block::new(stmts)),
        pos: Pos::default(),
    }
}

fn empty_ctor() -> CtorDecl {
    CtorDecl { params: Vec::new(), visibility: Visibility::Public, body: Some(Block::default()), pos: Pos::default() }
}

fn getter(f: &FieldDecl) -> MethodDecl {
    method(&names::getter(&f.name), Vec::new(), RetType::Type(f.ty.clone()), vec![ret_stmt(Expr::name(f.name.clone()))])
}

fn setter(f: &FieldDecl) -> MethodDecl {
    let target = Expr::new(ExprKind::Member { obj: Box::new(Expr::new(ExprKind::This)), name: f.name.clone() });
    let assign = Stmt::new(StmtKind::Assign { target, value: Expr::name(f.name.clone()) });
    method(&names::setter(&f.name), vec![Param::new(f.name.clone(), f.ty.clone())], RetType::Void, vec![assign])
}

fn retyped_field(ts: &TransformableSet, f: &TField, pos: Pos) -> FieldDecl {
    FieldDecl {
        name: f.name.clone(),
        ty: super::rewrite::retype(ts, &f.ty),
        visibility: Visibility::Private,
        is_final: f.is_final,
        pos,
    }
}

fn accessors(
    class: &str,
    fields: &[FieldDecl],
    taken: &dyn Fn(&str) -> bool,
) -> Result<Vec<MethodDecl>, XformError> {
    let mut out = Vec::new();
    for f in fields {
        for m in [getter(f), setter(f)] {
            if taken(&m.name) {
                return Err(XformError::NameCollision { class: class.to_string(), name: m.name });
            }
            out.push(m);
        }
    }
    Ok(out)
}

/// Intermediate form of a transformable class: every field gains public
/// accessors, every method is public and its body reads and writes state
/// only through accessors and interface-typed references. Instance parts
/// feed `A_O_*`, static parts feed `A_C_*`.
pub fn propertyize(p: &CheckedProgram, ts: &TransformableSet, class: &str) -> Result<ClassDecl, XformError> {
    let tc = &p.classes[class];
    if let Some(s) = &tc.superclass {
        if !ts.is_transformable(s) {
            return Err(XformError::UnsupportedSuperclass { class: class.to_string(), superclass: s.clone() });
        }
    }
    let decl = p.program.class(class).expect("checked class has a declaration");
    let mut out = ClassDecl::new(class);
    out.superclass = tc.superclass.clone();
    out.pos = tc.pos;
    out.fields = tc.fields.iter().zip(&decl.fields).map(|(f, d)| retyped_field(ts, f, d.pos)).collect();
    out.static_fields =
        tc.static_fields.iter().zip(&decl.static_fields).map(|(f, d)| retyped_field(ts, f, d.pos)).collect();

    let inherited = |n: &str| p.class_chain(class).any(|c| c.methods.iter().any(|m| m.name == n));
    out.methods = accessors(class, &out.fields, &inherited)?;
    for m in &tc.methods {
        let mut rw = Rewriter::new(p, ts, class, Scope::Instance);
        let body = rw.block(m.body.as_deref().unwrap_or_default());
        let mut d = method(&m.name, rw.params(&m.params), rw.ret(&m.ret), body.stmts);
        d.pos = m.pos;
        out.methods.push(d);
    }

    let own_static = |n: &str| tc.static_methods.iter().any(|m| m.name == n);
    out.static_methods = accessors(class, &out.static_fields, &own_static)?;
    for m in &tc.static_methods {
        let mut rw = Rewriter::new(p, ts, class, Scope::StaticImpl);
        let body = rw.block(m.body.as_deref().unwrap_or_default());
        let mut d = method(&m.name, rw.params(&m.params), rw.ret(&m.ret), body.stmts);
        d.pos = m.pos;
        out.static_methods.push(d);
    }
    Ok(out)
}

/// `A_O_Int`: every instance method of the propertyized class, accessors first.
pub fn extract_instance_interface(prop: &ClassDecl) -> InterfaceDecl {
    InterfaceDecl {
        name: names::o_int(&prop.name),
        extends: prop.superclass.iter().map(|s| names::o_int(s)).collect(),
        methods: prop.methods.iter().map(MethodDecl::signature).collect(),
        pos: prop.pos,
    }
}

/// `A_C_Int`: former static members as instance signatures.
pub fn extract_static_interface(prop: &ClassDecl) -> InterfaceDecl {
    InterfaceDecl {
        name: names::c_int(&prop.name),
        extends: Vec::new(),
        methods: prop.static_methods.iter().map(MethodDecl::signature).collect(),
        pos: prop.pos,
    }
}

/// Name of the singleton field and its accessor in `A_C_Local`.
pub fn singleton_names(prop: &ClassDecl) -> (String, String) {
    let clash = prop
        .static_fields
        .iter()
        .map(|f| f.name.as_str())
        .chain(prop.static_methods.iter().map(|m| m.name.as_str()))
        .any(|n| n == "me" || n == "get_me");
    if clash {
        ("$me".to_string(), "$get_me".to_string())
    } else {
        ("me".to_string(), "get_me".to_string())
    }
}

/// `A_O_Local` and the singleton `A_C_Local`.
pub fn generate_local_impls(prop: &ClassDecl) -> (ClassDecl, ClassDecl) {
    let a = &prop.name;
    let mut o = ClassDecl::new(names::o_local(a));
    o.superclass = prop.superclass.as_deref().map(names::o_local);
    o.implements = vec![names::o_int(a)];
    o.fields = prop.fields.clone();
    o.constructors = vec![empty_ctor()];
    o.methods = prop.methods.clone();
    o.pos = prop.pos;

    let c_int = names::c_int(a);
    let c_local = names::c_local(a);
    let (me, get_me) = singleton_names(prop);
    let mut c = ClassDecl::new(c_local.clone());
    c.implements = vec![c_int.clone()];
    c.fields = prop.static_fields.clone();
    c.constructors = vec![empty_ctor()];
    c.methods = prop.static_methods.clone();
    c.static_fields = vec![FieldDecl {
        name: me.clone(),
        ty: TypeRef::named(c_int.clone()),
        visibility: Visibility::Private,
        is_final: false,
        pos: Pos::default(),
    }];
    c.static_methods =
        vec![method(&get_me, Vec::new(), RetType::Type(TypeRef::named(c_int)), vec![ret_stmt(Expr::name(me.clone()))])];
    let create = Expr::new(ExprKind::New { class: c_local, args: Vec::new() });
    c.static_init = Some(Block::new(vec![Stmt::new(StmtKind::Assign { target: Expr::name(me), value: create })]));
    c.pos = prop.pos;
    (o, c)
}

fn pick_that(taken: &[&str]) -> String {
    let mut name = "that".to_string();
    while taken.contains(&name.as_str()) {
        name.insert(0, '$');
    }
    name
}

/// `A_O_Factory` with `make` and one `init` per constructor, and
/// `A_C_Factory` with `discover`, `clinit` when there is a static
/// initialiser, and the program's entry trampoline when `entry` is given.
pub fn generate_factories(
    p: &CheckedProgram,
    ts: &TransformableSet,
    class: &str,
    entry: Option<&str>,
) -> Result<(ClassDecl, ClassDecl), XformError> {
    let tc = &p.classes[class];
    let o_int = names::o_int(class);
    let c_int = names::c_int(class);
    let create = |kind| Expr::new(ExprKind::Intrinsic { kind, class: Some(class.to_string()), member: None, args: Vec::new() });

    let mut of = ClassDecl::new(names::o_factory(class));
    of.pos = tc.pos;
    of.static_methods.push(method("make", Vec::new(), RetType::Type(TypeRef::named(o_int.clone())), vec![ret_stmt(create(IntrinsicKind::Create))]));
    for k in &tc.ctors {
        let body = k.body.as_deref().unwrap_or_default();
        let that = pick_that(&bound_names(&k.params, [body]));
        let mut rw = Rewriter::new(p, ts, class, Scope::Init { that: that.clone() });
        let mut stmts = Vec::new();
        if let Some(sup) = &k.super_call {
            rw.super_init(sup, &that, &mut stmts);
        }
        stmts.extend(rw.block(body).stmts);
        let mut params = vec![Param::new(that, TypeRef::named(o_int.clone()))];
        params.extend(rw.params(&k.params));
        let mut m = method("init", params, RetType::Void, stmts);
        m.pos = k.pos;
        of.static_methods.push(m);
    }

    let mut cf = ClassDecl::new(names::c_factory(class));
    cf.pos = tc.pos;
    cf.static_methods.push(method("discover", Vec::new(), RetType::Type(TypeRef::named(c_int.clone())), vec![ret_stmt(create(IntrinsicKind::Discover))]));
    if let Some(init) = &tc.static_init {
        let that = pick_that(&bound_names(&[], [init.as_slice()]));
        let mut rw = Rewriter::new(p, ts, class, Scope::Clinit { that: that.clone() });
        let body = rw.block(init);
        cf.static_methods.push(method("clinit", vec![Param::new(that, TypeRef::named(c_int))], RetType::Void, body.stmts));
    }
    if let Some(m) = entry {
        if m == "discover" || m == "clinit" {
            return Err(XformError::NameCollision { class: names::c_factory(class), name: m.to_string() });
        }
        let forward = expr_stmt(call(Some(discover(class)), m, Vec::new()));
        cf.static_methods.push(method(m, Vec::new(), RetType::Void, vec![forward]));
    }
    Ok((of, cf))
}

fn proxy(name: String, iface: &str, sigs: &[MethodSig], pos: Pos) -> ClassDecl {
    let mut c = ClassDecl::new(name);
    c.implements = vec![iface.to_string()];
    c.fields = vec![FieldDecl {
        name: names::HANDLE.to_string(),
        ty: TypeRef::Remote,
        visibility: Visibility::Private,
        is_final: false,
        pos: Pos::default(),
    }];
    c.constructors = vec![empty_ctor()];
    for s in sigs {
        let handle = Expr::new(ExprKind::Member { obj: Box::new(Expr::new(ExprKind::This)), name: names::HANDLE.to_string() });
        let mut args = vec![handle];
        args.extend(s.params.iter().map(|p| Expr::name(p.name.clone())));
        let inv = Expr::new(ExprKind::Intrinsic {
            kind: IntrinsicKind::RemoteInvoke,
            class: None,
            member: Some(s.name.clone()),
            args,
        });
        let stmt = match s.ret {
            RetType::Void => expr_stmt(inv),
            _ => ret_stmt(inv),
        };
        c.methods.push(method(&s.name, s.params.clone(), s.ret.clone(), vec![stmt]));
    }
    c.pos = pos;
    c
}

/// `A_O_Proxy_P` and `A_C_Proxy_P` for each protocol. `instance_sigs` is the
/// full member list of `A_O_Int` including inherited signatures.
pub fn generate_proxies(
    class: &str,
    instance_sigs: &[MethodSig],
    static_iface: &InterfaceDecl,
    protocols: &[String],
) -> Result<Vec<ClassDecl>, XformError> {
    let mut out = Vec::new();
    for proto in protocols {
        if !KNOWN_PROTOCOLS.contains(&proto.as_str()) {
            return Err(XformError::UnknownProtocol(proto.clone()));
        }
        out.push(proxy(names::o_proxy(class, proto), &names::o_int(class), instance_sigs, static_iface.pos));
        out.push(proxy(names::c_proxy(class, proto), &static_iface.name, &static_iface.methods, static_iface.pos));
    }
    Ok(out)
}
