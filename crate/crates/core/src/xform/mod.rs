//! The componentising transformation.
//!
//! For each transformable class `A` the output holds `A_O_Int`, `A_C_Int`,
//! `A_O_Local`, `A_C_Local`, `A_O_Factory`, `A_C_Factory` and one
//! `A_O_Proxy_P`/`A_C_Proxy_P` pair per protocol. Non-transformable classes
//! are copied unchanged.

pub mod analysis;
pub mod generate;
pub mod names;
pub mod props;
pub mod rewrite;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::minioo::ast::*;
use crate::minioo::check::check_program;
use crate::minioo::error::CheckError;
use crate::minioo::typed::CheckedProgram;

pub use analysis::{compute_transformable_set, Justification, Rule, TransformableSet};
pub use generate::{
    extract_instance_interface, extract_static_interface, generate_factories, generate_local_impls,
    generate_proxies, propertyize, KNOWN_PROTOCOLS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum XformError {
    #[error("unknown protocol `{0}` (known: RAF)")]
    UnknownProtocol(String),
    #[error("input is already a transformed program")]
    AlreadyTransformed,
    #[error("unsupported: transformable class `{class}` extends non-transformable `{superclass}`")]
    UnsupportedSuperclass { class: String, superclass: String },
    #[error("generated member `{name}` collides with an existing member of `{class}`")]
    NameCollision { class: String, name: String },
    #[error("generated program fails to check:\n{0}")]
    Recheck(CheckError),
}

/// The generated units for one source class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassFamily {
    pub instance_interface: InterfaceDecl,
    pub static_interface: InterfaceDecl,
    pub local_object_impl: ClassDecl,
    pub local_static_impl: ClassDecl,
    pub object_factory: ClassDecl,
    pub class_factory: ClassDecl,
    pub proxies: Vec<ClassDecl>,
}

impl ClassFamily {
    pub fn unit_names(&self) -> Vec<String> {
        let mut v = vec![
            self.instance_interface.name.clone(),
            self.static_interface.name.clone(),
            self.local_object_impl.name.clone(),
            self.local_static_impl.name.clone(),
            self.object_factory.name.clone(),
            self.class_factory.name.clone(),
        ];
        v.extend(self.proxies.iter().map(|p| p.name.clone()));
        v
    }
}

#[derive(Debug, Clone)]
pub struct TransformOutput {
    pub program: Program,
    pub families: IndexMap<String, ClassFamily>,
    pub set: TransformableSet,
    pub protocols: Vec<String>,
}

impl TransformOutput {
    pub fn text(&self) -> String {
        crate::minioo::pretty_print(&self.program)
    }

    pub fn report(&self) -> Report {
        Report::new(&self.set, &self.protocols, &self.program.entry, &self.families)
    }
}

/// Machine-readable summary written next to the transformed source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub format: u32,
    pub transformable: Vec<String>,
    pub non_transformable: Vec<Excluded>,
    pub protocols: Vec<String>,
    pub entry: String,
    pub generated: Vec<Generated>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Excluded {
    pub class: String,
    pub reasons: Vec<Justification>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generated {
    pub class: String,
    pub units: Vec<String>,
}

impl Report {
    pub fn new(
        set: &TransformableSet,
        protocols: &[String],
        entry: &QualifiedName,
        families: &IndexMap<String, ClassFamily>,
    ) -> Self {
        Report {
            format: 1,
            transformable: set.transformable.iter().cloned().collect(),
            non_transformable: set
                .non_transformable
                .iter()
                .map(|c| Excluded { class: c.clone(), reasons: set.reasons[c].clone() })
                .collect(),
            protocols: protocols.to_vec(),
            entry: entry.to_string(),
            generated: families.iter().map(|(c, f)| Generated { class: c.clone(), units: f.unit_names() }).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Signatures of an interface including inherited ones, supers first.
fn interface_closure(ifaces: &IndexMap<String, InterfaceDecl>, name: &str) -> Vec<MethodSig> {
    let mut out: Vec<MethodSig> = Vec::new();
    fn walk(ifaces: &IndexMap<String, InterfaceDecl>, name: &str, out: &mut Vec<MethodSig>) {
        let Some(i) = ifaces.get(name) else { return };
        for s in &i.extends {
            walk(ifaces, s, out);
        }
        for m in &i.methods {
            if let Some(slot) = out.iter_mut().find(|o| o.name == m.name && o.params.len() == m.params.len()) {
                *slot = m.clone();
            } else {
                out.push(m.clone());
            }
        }
    }
    walk(ifaces, name, &mut out);
    out
}

/// Transforms a checked original program. The result re-checks.
pub fn transform_program(p: &CheckedProgram, protocols: &[String]) -> Result<TransformOutput, XformError> {
    if p.is_transformed() {
        return Err(XformError::AlreadyTransformed);
    }
    let mut protos: Vec<String> = Vec::new();
    for proto in protocols {
        if !KNOWN_PROTOCOLS.contains(&proto.as_str()) {
            return Err(XformError::UnknownProtocol(proto.clone()));
        }
        if !protos.contains(proto) {
            protos.push(proto.clone());
        }
    }
    let set = compute_transformable_set(p);
    let entry_class = &p.entry.class;

    let mut props: IndexMap<String, ClassDecl> = IndexMap::new();
    for name in &set.transformable {
        props.insert(name.clone(), propertyize(p, &set, name)?);
    }
    let o_ifaces: IndexMap<String, InterfaceDecl> =
        props.values().map(|c| (names::o_int(&c.name), extract_instance_interface(c))).collect();

    let mut families = IndexMap::new();
    let mut classes = Vec::new();
    let mut interfaces = Vec::new();
    for decl in &p.program.classes {
        let Some(prop) = props.get(&decl.name) else {
            classes.push(decl.clone());
            continue;
        };
        let a = &decl.name;
        let oi = o_ifaces[&names::o_int(a)].clone();
        let ci = extract_static_interface(prop);
        let (ol, cl) = generate_local_impls(prop);
        let entry = (a == entry_class).then_some(p.entry.member.as_str());
        let (of, cf) = generate_factories(p, &set, a, entry)?;
        let sigs = interface_closure(&o_ifaces, &oi.name);
        let proxies = generate_proxies(a, &sigs, &ci, &protos)?;
        interfaces.push(oi.clone());
        interfaces.push(ci.clone());
        classes.extend([ol.clone(), cl.clone(), of.clone(), cf.clone()]);
        classes.extend(proxies.iter().cloned());
        families.insert(
            a.clone(),
            ClassFamily {
                instance_interface: oi,
                static_interface: ci,
                local_object_impl: ol,
                local_static_impl: cl,
                object_factory: of,
                class_factory: cf,
                proxies,
            },
        );
    }
    let entry = if set.is_transformable(entry_class) {
        QualifiedName::new(names::c_factory(entry_class), p.entry.member.clone())
    } else {
        p.entry.clone()
    };
    // Nothing to componentise leaves the input as it was.
    let kind = if families.is_empty() { p.program.kind } else { ProgramKind::Transformed };
    let program = Program { kind, classes, interfaces, entry };
    check_program(&program).map_err(XformError::Recheck)?;
    Ok(TransformOutput { program, families, set, protocols: protos })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minioo::compile;

    fn raf() -> Vec<String> {
        vec!["RAF".to_string()]
    }

    #[test]
    fn builtin_only_program_is_unchanged() {
        let src = "builtin class Math { public static int abs(int x); } builtin class Boot { public static void main(); } entry Boot.main;";
        let p = compile(src).unwrap();
        let out = transform_program(&p, &raf()).unwrap();
        assert_eq!(out.program, p.program);
        assert!(out.program.interfaces.is_empty());
        assert!(out.families.is_empty());
    }

    #[test]
    fn unknown_protocol_rejected() {
        let p = compile("class Main { public static void main() { } }").unwrap();
        let err = transform_program(&p, &["SOAP".to_string()]).unwrap_err();
        assert_eq!(err, XformError::UnknownProtocol("SOAP".into()));
    }

    #[test]
    fn empty_class_family() {
        let p = compile("class Empty { } class Main { public static void main() { } }").unwrap();
        let out = transform_program(&p, &[]).unwrap();
        let f = &out.families["Empty"];
        assert!(f.instance_interface.methods.is_empty());
        assert!(f.static_interface.methods.is_empty());
        assert_eq!(f.local_object_impl.constructors.len(), 1);
        assert!(f.local_object_impl.methods.is_empty());
        assert!(f.proxies.is_empty());
        let inits: Vec<_> = f.object_factory.static_methods.iter().map(|m| (m.name.as_str(), m.params.len())).collect();
        assert_eq!(inits, [("make", 0), ("init", 1)]);
        let cf: Vec<_> = f.class_factory.static_methods.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(cf, ["discover"]);
    }

    #[test]
    fn self_referential_class() {
        let p = compile("class L { L next; } class Main { public static void main() { } }").unwrap();
        let out = transform_program(&p, &raf()).unwrap();
        let oi = &out.families["L"].instance_interface;
        assert_eq!(oi.methods[0].name, "get_next");
        assert_eq!(oi.methods[0].ret, RetType::Type(TypeRef::named("L_O_Int")));
    }

    #[test]
    fn new_in_while_condition_uses_statement_expression() {
        let src = "class T { int v; public int get() { return v; } } \
                   class Main { public static void main() { while (new T().get() > 0) { } } }";
        let out = transform_program(&compile(src).unwrap(), &[]).unwrap();
        assert!(out.text().contains("({ T_O_Int $t0 = T_O_Factory.make(); T_O_Factory.init($t0); $t0 })"), "{}", out.text());
    }

    #[test]
    fn report_lists_reasons() {
        let src = "class N { public native int h(); } class Main { public static void main() { } }";
        let out = transform_program(&compile(src).unwrap(), &raf()).unwrap();
        let json = out.report().to_json();
        assert!(json.contains("\"native-method\""), "{json}");
        assert!(json.contains("\"via\": \"h\""), "{json}");
    }
}
