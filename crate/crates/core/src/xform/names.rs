//! Names of generated units and members.

pub fn o_int(class: &str) -> String {
    format!("{class}_O_Int")
}

pub fn c_int(class: &str) -> String {
    format!("{class}_C_Int")
}

pub fn o_local(class: &str) -> String {
    format!("{class}_O_Local")
}

pub fn c_local(class: &str) -> String {
    format!("{class}_C_Local")
}

pub fn o_factory(class: &str) -> String {
    format!("{class}_O_Factory")
}

pub fn c_factory(class: &str) -> String {
    format!("{class}_C_Factory")
}

pub fn o_proxy(class: &str, protocol: &str) -> String {
    format!("{class}_O_Proxy_{protocol}")
}

pub fn c_proxy(class: &str, protocol: &str) -> String {
    format!("{class}_C_Proxy_{protocol}")
}

pub fn getter(field: &str) -> String {
    format!("get_{field}")
}

pub fn setter(field: &str) -> String {
    format!("set_{field}")
}

/// Field holding a proxy's remote reference.
pub const HANDLE: &str = "handle";

/// Which generated role a unit name plays, with its source class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role<'a> {
    OInt(&'a str),
    CInt(&'a str),
    OLocal(&'a str),
    CLocal(&'a str),
    OFactory(&'a str),
    CFactory(&'a str),
    OProxy(&'a str, &'a str),
    CProxy(&'a str, &'a str),
}

pub fn role(name: &str) -> Option<Role<'_>> {
    const SUFFIXES: [&str; 6] = ["_O_Int", "_C_Int", "_O_Local", "_C_Local", "_O_Factory", "_C_Factory"];
    for (i, suffix) in SUFFIXES.iter().enumerate() {
        let Some(base) = name.strip_suffix(suffix).filter(|b| !b.is_empty()) else { continue };
        return Some(match i {
            0 => Role::OInt(base),
            1 => Role::CInt(base),
            2 => Role::OLocal(base),
            3 => Role::CLocal(base),
            4 => Role::OFactory(base),
            _ => Role::CFactory(base),
        });
    }
    if let Some((base, proto)) = name.split_once("_O_Proxy_") {
        return Some(Role::OProxy(base, proto));
    }
    if let Some((base, proto)) = name.split_once("_C_Proxy_") {
        return Some(Role::CProxy(base, proto));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roles_roundtrip() {
        assert_eq!(role(&o_int("X")), Some(Role::OInt("X")));
        assert_eq!(role(&c_local("Main")), Some(Role::CLocal("Main")));
        assert_eq!(role(&o_proxy("X", "RAF")), Some(Role::OProxy("X", "RAF")));
        assert_eq!(role("X"), None);
    }
}
