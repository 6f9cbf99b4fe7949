//! Which classes may be transformed.
//!
//! Seeds are builtin classes and classes declaring a native method. The set
//! is closed under two rules: the superclass of a non-transformable class is
//! non-transformable, and so is every class a non-transformable class refers
//! to (field types, signatures, body locals, `new`, static access, and the
//! static types and declaring owners of member accesses in its bodies).

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use serde::Serialize;

use crate::minioo::typed::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    NativeMethod,
    Builtin,
    SuperclassRule,
    ReferencedByRule,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::NativeMethod => "native-method",
            Rule::Builtin => "builtin",
            Rule::SuperclassRule => "superclass-rule",
            Rule::ReferencedByRule => "referenced-by-rule",
        }
    }
}

/// One reason a class is excluded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Justification {
    pub rule: Rule,
    /// The native method, the non-transformable subclass, or the referring class.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub via: Option<String>,
    /// Where the reference occurs, for `referenced-by-rule`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site: Option<String>,
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.rule, &self.via, &self.site) {
            (Rule::NativeMethod, Some(m), _) => write!(f, "native-method: declares native `{m}`"),
            (Rule::SuperclassRule, Some(c), _) => write!(f, "superclass-rule: superclass of non-transformable `{c}`"),
            (Rule::ReferencedByRule, Some(c), Some(s)) => {
                write!(f, "referenced-by-rule: referenced by non-transformable `{c}` ({s})")
            }
            (r, _, _) => f.write_str(r.id()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformableSet {
    /// In program order.
    pub transformable: IndexSet<String>,
    /// In program order.
    pub non_transformable: IndexSet<String>,
    pub reasons: IndexMap<String, Vec<Justification>>,
}

impl TransformableSet {
    pub fn is_transformable(&self, class: &str) -> bool {
        self.transformable.contains(class)
    }
}

/// A class-to-class edge for the reference rule, with the place it occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    pub target: String,
    pub site: String,
}

/// Every class `c` refers to, in first-occurrence order, excluding itself.
pub fn class_references(p: &CheckedProgram, c: &TClass) -> Vec<Reference> {
    let mut refs = RefCollector { p, own: &c.name, out: Vec::new(), seen: BTreeSet::new(), site: String::new() };
    for f in &c.fields {
        refs.site = format!("field `{}`", f.name);
        refs.ty(&f.ty);
    }
    for f in &c.static_fields {
        refs.site = format!("static field `{}`", f.name);
        refs.ty(&f.ty);
    }
    for (i, k) in c.ctors.iter().enumerate() {
        refs.site = format!("constructor #{}", i + 1);
        for prm in &k.params {
            refs.ty(&prm.ty);
        }
        if let Some(s) = &k.super_call {
            s.args.iter().for_each(|e| refs.expr(e));
        }
        if let Some(b) = &k.body {
            refs.stmts(b);
        }
    }
    for m in c.methods.iter().chain(&c.static_methods) {
        refs.site = format!("method `{}`", m.name);
        for prm in &m.params {
            refs.ty(&prm.ty);
        }
        refs.ty(&m.ret);
        if let Some(b) = &m.body {
            refs.stmts(b);
        }
    }
    if let Some(b) = &c.static_init {
        refs.site = "static initialiser".to_string();
        refs.stmts(b);
    }
    refs.out
}

struct RefCollector<'a> {
    p: &'a CheckedProgram,
    own: &'a str,
    out: Vec<Reference>,
    seen: BTreeSet<String>,
    site: String,
}

impl RefCollector<'_> {
    fn class(&mut self, name: &str) {
        if name != self.own && self.p.classes.contains_key(name) && self.seen.insert(name.to_string()) {
            self.out.push(Reference { target: name.to_string(), site: self.site.clone() });
        }
    }

    fn ty(&mut self, t: &Type) {
        if let Type::Class(n) = t {
            self.class(n);
        }
    }

    fn stmts(&mut self, ss: &[TStmt]) {
        for s in ss {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &TStmt) {
        match &s.kind {
            TStmtKind::Local { ty, init, .. } => {
                self.ty(ty);
                init.iter().for_each(|e| self.expr(e));
            }
            TStmtKind::AssignLocal { value, .. } => self.expr(value),
            TStmtKind::AssignField { obj, owner, value, .. } => {
                self.class(owner);
                self.expr(obj);
                self.expr(value);
            }
            TStmtKind::AssignStatic { class, value, .. } => {
                self.class(class);
                self.expr(value);
            }
            TStmtKind::Expr(e) | TStmtKind::Print(e) => self.expr(e),
            TStmtKind::Return(e) => e.iter().for_each(|e| self.expr(e)),
            TStmtKind::If { cond, then_block, else_block } => {
                self.expr(cond);
                self.stmts(then_block);
                if let Some(b) = else_block {
                    self.stmts(b);
                }
            }
            TStmtKind::While { cond, body } => {
                self.expr(cond);
                self.stmts(body);
            }
        }
    }

    fn expr(&mut self, e: &TExpr) {
        self.ty(&e.ty);
        match &e.kind {
            TExprKind::Field { obj, owner, .. } => {
                self.class(owner);
                self.expr(obj);
            }
            TExprKind::StaticField { class, .. } => self.class(class),
            TExprKind::Call { recv, owner, args, .. } => {
                self.class(owner);
                self.expr(recv);
                args.iter().for_each(|a| self.expr(a));
            }
            TExprKind::StaticCall { class, args, .. } | TExprKind::New { class, args } => {
                self.class(class);
                args.iter().for_each(|a| self.expr(a));
            }
            TExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
            TExprKind::Unary { expr, .. } | TExprKind::Cast { expr } | TExprKind::Widen(expr) => self.expr(expr),
            TExprKind::RemoteInvoke { handle, args, .. } => {
                self.expr(handle);
                args.iter().for_each(|a| self.expr(a));
            }
            TExprKind::Seq { stmts, value } => {
                self.stmts(stmts);
                self.expr(value);
            }
            TExprKind::Create { class } | TExprKind::Discover { class } => self.class(class),
            TExprKind::Int(_)
            | TExprKind::Long(_)
            | TExprKind::Bool(_)
            | TExprKind::Str(_)
            | TExprKind::Null
            | TExprKind::Local(_)
            | TExprKind::This { .. } => {}
        }
    }
}

fn seed_reasons(c: &TClass) -> Vec<Justification> {
    let mut out = Vec::new();
    if c.is_builtin {
        out.push(Justification { rule: Rule::Builtin, via: None, site: None });
    }
    for m in c.methods.iter().chain(&c.static_methods).filter(|m| m.is_native) {
        out.push(Justification { rule: Rule::NativeMethod, via: Some(m.name.clone()), site: None });
    }
    out
}

/// Least fixpoint of the exclusion rules. Total on checked programs.
pub fn compute_transformable_set(p: &CheckedProgram) -> TransformableSet {
    let refs: IndexMap<&str, Vec<Reference>> =
        p.classes.values().map(|c| (c.name.as_str(), class_references(p, c))).collect();

    let mut excluded: IndexSet<String> = IndexSet::new();
    let mut work: VecDeque<String> = VecDeque::new();
    for c in p.classes.values() {
        if !seed_reasons(c).is_empty() {
            excluded.insert(c.name.clone());
            work.push_back(c.name.clone());
        }
    }
    while let Some(n) = work.pop_front() {
        let c = &p.classes[&n];
        let sup = c.superclass.iter().cloned();
        let referenced = refs[n.as_str()].iter().map(|r| r.target.clone());
        for t in sup.chain(referenced) {
            if excluded.insert(t.clone()) {
                work.push_back(t);
            }
        }
    }

    let mut reasons: IndexMap<String, Vec<Justification>> = IndexMap::new();
    let mut transformable = IndexSet::new();
    let mut non_transformable = IndexSet::new();
    for c in p.classes.values() {
        if !excluded.contains(&c.name) {
            transformable.insert(c.name.clone());
            continue;
        }
        non_transformable.insert(c.name.clone());
        let mut why = seed_reasons(c);
        for sub in p.classes.values() {
            if sub.superclass.as_deref() == Some(c.name.as_str()) && excluded.contains(&sub.name) {
                why.push(Justification { rule: Rule::SuperclassRule, via: Some(sub.name.clone()), site: None });
            }
        }
        for (from, rs) in &refs {
            if !excluded.contains(*from) {
                continue;
            }
            if let Some(r) = rs.iter().find(|r| r.target == c.name) {
                why.push(Justification {
                    rule: Rule::ReferencedByRule,
                    via: Some(from.to_string()),
                    site: Some(r.site.clone()),
                });
            }
        }
        reasons.insert(c.name.clone(), why);
    }
    TransformableSet { transformable, non_transformable, reasons }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minioo::compile;

    fn set(src: &str) -> TransformableSet {
        compute_transformable_set(&compile(src).unwrap())
    }

    const MAIN: &str = "class Main { public static void main() { } }";

    #[test]
    fn empty_seed_means_everything_transformable() {
        let ts = set(&format!("class A {{ B b; }} class B {{ }} {MAIN}"));
        assert_eq!(ts.non_transformable.len(), 0);
        assert_eq!(ts.transformable.len(), 3);
    }

    #[test]
    fn native_method_seeds() {
        let ts = set(&format!("class N {{ public native int h(); }} {MAIN}"));
        assert_eq!(ts.non_transformable.iter().collect::<Vec<_>>(), ["N"]);
        assert_eq!(ts.reasons["N"][0].rule, Rule::NativeMethod);
        assert_eq!(ts.reasons["N"][0].via.as_deref(), Some("h"));
    }

    #[test]
    fn four_node_closure() {
        // N is native, extends S and refers to R; T extends R.
        let src = format!(
            "class S {{ }} class R {{ }} class T extends R {{ }} \
             class N extends S {{ public native int h(); public void g() {{ R r = null; }} }} {MAIN}"
        );
        let ts = set(&src);
        let mut nt: Vec<&str> = ts.non_transformable.iter().map(String::as_str).collect();
        nt.sort();
        assert_eq!(nt, ["N", "R", "S"]);
        assert!(ts.is_transformable("T"));
        assert!(ts.is_transformable("Main"));
        assert_eq!(ts.reasons["S"][0].rule, Rule::SuperclassRule);
        assert_eq!(ts.reasons["R"][0].rule, Rule::ReferencedByRule);
    }

    #[test]
    fn builtin_signature_references_propagate() {
        let ts = set(&format!("builtin class B {{ public U get(); }} class U {{ }} {MAIN}"));
        assert!(!ts.is_transformable("U"));
        assert_eq!(ts.reasons["B"][0].rule, Rule::Builtin);
    }

    #[test]
    fn referencing_a_non_transformable_class_is_not_excluding() {
        let ts = set(&format!("builtin class B {{ }} class U {{ B b; }} {MAIN}"));
        assert!(ts.is_transformable("U"));
    }
}
