//! Placement policy and the deployment manifest (TOML).
//!
//! ```toml
//! entry = "n1"
//! protocol = "RAF"
//!
//! [nodes.n1]
//! address = "127.0.0.1:7101"
//! [nodes.n2]
//! address = "127.0.0.1:7102"
//!
//! [placement]      # class -> node id, or "local"
//! C = "n2"
//!
//! [statics]        # class -> home node of its static state
//! Counter = "n2"
//!
//! [[phase]]        # applied when Runtime.checkpoint("flip") runs
//! checkpoint = "flip"
//! placement = { C = "local" }
//! ```

use indexmap::IndexMap;
use serde::Deserialize;
use thiserror::Error;

use crate::minioo::typed::{CheckedProgram, Type};
use crate::xform::names::{self, Role};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    /// Wherever `make` runs.
    Local,
    Remote(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementPolicy {
    pub placement: IndexMap<String, Location>,
    pub statics_home: IndexMap<String, String>,
    /// Home of statics not listed in `statics_home`.
    pub default_home: String,
    pub version: u64,
}

impl PlacementPolicy {
    pub fn all_local(home: impl Into<String>) -> Self {
        PlacementPolicy { placement: IndexMap::new(), statics_home: IndexMap::new(), default_home: home.into(), version: 0 }
    }

    pub fn location(&self, class: &str) -> &Location {
        self.placement.get(class).unwrap_or(&Location::Local)
    }

    pub fn statics_home(&self, class: &str) -> &str {
        self.statics_home.get(class).unwrap_or(&self.default_home)
    }

    pub fn apply(&mut self, changes: &IndexMap<String, Location>) {
        for (c, l) in changes {
            self.placement.insert(c.clone(), l.clone());
        }
        self.version += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: String,
    /// `host:port`; port 0 picks a free port in in-process deployments.
    pub address: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub checkpoint: String,
    pub placement: IndexMap<String, Location>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub entry: String,
    pub protocol: String,
    pub nodes: Vec<NodeSpec>,
    pub policy: PlacementPolicy,
    pub phases: Vec<Phase>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("manifest syntax: {0}")]
    Syntax(String),
    #[error("unknown node `{node}` in {context}")]
    UnknownNode { node: String, context: String },
    #[error("manifest declares no nodes")]
    NoNodes,
    #[error("unknown protocol `{0}`")]
    Protocol(String),
    #[error("class `{0}` is not a transformed class of this program")]
    NotTransformed(String),
    #[error("class `{class}` cannot be placed remote: {why}")]
    NotRemotable { class: String, why: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    entry: String,
    #[serde(default = "default_protocol")]
    protocol: String,
    nodes: IndexMap<String, RawNode>,
    #[serde(default)]
    placement: IndexMap<String, String>,
    #[serde(default)]
    statics: IndexMap<String, String>,
    #[serde(default)]
    phase: Vec<RawPhase>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    #[serde(default = "default_address")]
    address: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhase {
    checkpoint: String,
    #[serde(default)]
    placement: IndexMap<String, String>,
}

fn default_protocol() -> String {
    "RAF".to_string()
}

fn default_address() -> String {
    "127.0.0.1:0".to_string()
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest, ManifestError> {
        let raw: RawManifest = toml::from_str(text).map_err(|e| ManifestError::Syntax(e.to_string()))?;
        if raw.nodes.is_empty() {
            return Err(ManifestError::NoNodes);
        }
        if !crate::xform::KNOWN_PROTOCOLS.contains(&raw.protocol.as_str()) {
            return Err(ManifestError::Protocol(raw.protocol));
        }
        let known = |n: &str, context: String| -> Result<String, ManifestError> {
            if raw.nodes.contains_key(n) {
                Ok(n.to_string())
            } else {
                Err(ManifestError::UnknownNode { node: n.to_string(), context })
            }
        };
        let location = |class: &str, n: &str, context: &str| -> Result<Location, ManifestError> {
            if n == "local" {
                Ok(Location::Local)
            } else {
                Ok(Location::Remote(known(n, format!("{context} of `{class}`"))?))
            }
        };
        let entry = known(&raw.entry, "entry".into())?;
        let mut placement = IndexMap::new();
        for (c, n) in &raw.placement {
            placement.insert(c.clone(), location(c, n, "placement")?);
        }
        let mut statics_home = IndexMap::new();
        for (c, n) in &raw.statics {
            statics_home.insert(c.clone(), known(n, format!("statics of `{c}`"))?);
        }
        let mut phases = Vec::new();
        for p in &raw.phase {
            let mut pl = IndexMap::new();
            for (c, n) in &p.placement {
                pl.insert(c.clone(), location(c, n, &format!("phase `{}` placement", p.checkpoint))?);
            }
            phases.push(Phase { checkpoint: p.checkpoint.clone(), placement: pl });
        }
        Ok(Manifest {
            nodes: raw.nodes.iter().map(|(id, n)| NodeSpec { id: id.clone(), address: n.address.clone() }).collect(),
            policy: PlacementPolicy { placement, statics_home, default_home: entry.clone(), version: 0 },
            entry,
            protocol: raw.protocol,
            phases,
        })
    }

    /// A manifest of `nodes` loopback nodes, entry first, everything local.
    pub fn in_process(nodes: &[&str]) -> Manifest {
        Manifest {
            entry: nodes[0].to_string(),
            protocol: "RAF".to_string(),
            nodes: nodes.iter().map(|n| NodeSpec { id: n.to_string(), address: default_address() }).collect(),
            policy: PlacementPolicy::all_local(nodes[0]),
            phases: Vec::new(),
        }
    }

    pub fn node_ids(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }

    /// Checks every placed class against a transformed program.
    pub fn validate_for(&self, p: &CheckedProgram) -> Result<(), ManifestError> {
        let placed = self
            .policy
            .placement
            .iter()
            .chain(self.phases.iter().flat_map(|ph| ph.placement.iter()))
            .filter(|(_, l)| **l != Location::Local)
            .map(|(c, _)| (c, false));
        let homed = self.policy.statics_home.keys().map(|c| (c, true));
        for (class, statics) in placed.chain(homed) {
            remotable(p, class, statics, &self.protocol)
                .map_err(|why| ManifestError::NotRemotable { class: class.clone(), why })?;
        }
        Ok(())
    }
}

/// Whether instances (or the static part) of `class` may live on another
/// node: the proxy exists and no signature passes a non-transformed object.
pub fn remotable(p: &CheckedProgram, class: &str, statics: bool, protocol: &str) -> Result<(), String> {
    if !p.classes.contains_key(&names::o_factory(class)) {
        return Err("not a transformed class".into());
    }
    let (iface, proxy) = if statics {
        (names::c_int(class), names::c_proxy(class, protocol))
    } else {
        (names::o_int(class), names::o_proxy(class, protocol))
    };
    if !p.classes.contains_key(&proxy) {
        return Err(format!("no {proxy} was generated"));
    }
    let crossing = |t: &Type| match t {
        Type::Class(n) => matches!(names::role(n), Some(Role::OInt(_))),
        _ => true,
    };
    for s in p.interface_closure(&iface) {
        if let Some(t) = s.params.iter().map(|p| &p.ty).chain([&s.ret]).find(|t| !crossing(t)) {
            return Err(format!("`{}` passes {t}", s.name));
        }
    }
    if !statics {
        for m in &p.classes[&names::o_factory(class)].static_methods {
            if m.name == "init" {
                if let Some(t) = m.params.iter().skip(1).map(|p| &p.ty).find(|t| !crossing(t)) {
                    return Err(format!("a constructor takes {t}"));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_manifest() {
        let m = Manifest::parse(
            r#"
entry = "n1"
[nodes.n1]
address = "127.0.0.1:0"
[nodes.n2]
[placement]
C = "n2"
D = "local"
[statics]
K = "n2"
[[phase]]
checkpoint = "flip"
placement = { C = "local" }
"#,
        )
        .unwrap();
        assert_eq!(m.node_ids(), ["n1", "n2"]);
        assert_eq!(m.policy.location("C"), &Location::Remote("n2".into()));
        assert_eq!(m.policy.location("D"), &Location::Local);
        assert_eq!(m.policy.location("Other"), &Location::Local);
        assert_eq!(m.policy.statics_home("K"), "n2");
        assert_eq!(m.policy.statics_home("Other"), "n1");
        assert_eq!(m.phases[0].placement["C"], Location::Local);
    }

    #[test]
    fn rejects_unknown_nodes_and_keys() {
        let e = Manifest::parse("entry = \"n1\"\n[nodes.n1]\n[placement]\nC = \"n9\"\n").unwrap_err();
        assert!(matches!(e, ManifestError::UnknownNode { .. }), "{e}");
        let e = Manifest::parse("entry = \"n1\"\nbogus = 1\n[nodes.n1]\n").unwrap_err();
        assert!(matches!(e, ManifestError::Syntax(_)), "{e}");
    }

    #[test]
    fn policy_update_bumps_version() {
        let mut p = PlacementPolicy::all_local("n1");
        p.apply(&[("C".to_string(), Location::Remote("n2".into()))].into_iter().collect());
        assert_eq!(p.version, 1);
        assert_eq!(p.location("C"), &Location::Remote("n2".into()));
    }
}
