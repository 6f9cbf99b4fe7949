use std::collections::HashMap;

use indexmap::IndexMap;

use crate::interp::{ObjId, RemoteRef};

/// Objects this node has handed out references to. Oids start at 1 and are
/// never reused; oid 0 addresses the node's runtime itself.
#[derive(Debug, Clone)]
pub struct Registry {
    node: String,
    next: u64,
    objects: IndexMap<u64, (ObjId, String)>,
    by_handle: HashMap<ObjId, u64>,
    singletons: IndexMap<String, u64>,
}

impl Registry {
    pub fn new(node: impl Into<String>) -> Self {
        Registry { node: node.into(), next: 1, objects: IndexMap::new(), by_handle: HashMap::new(), singletons: IndexMap::new() }
    }

    pub fn node(&self) -> &str {
        &self.node
    }

    /// Idempotent per handle.
    pub fn export(&mut self, h: ObjId, class: &str) -> RemoteRef {
        let oid = match self.by_handle.get(&h) {
            Some(oid) => *oid,
            None => {
                let oid = self.next;
                self.next += 1;
                self.objects.insert(oid, (h, class.to_string()));
                self.by_handle.insert(h, oid);
                oid
            }
        };
        RemoteRef { node: self.node.clone(), oid, class: self.objects[&oid].1.clone() }
    }

    /// Exports the static implementation of `class`; at most one per class.
    pub fn export_singleton(&mut self, h: ObjId, class: &str) -> RemoteRef {
        let r = self.export(h, class);
        self.singletons.entry(class.to_string()).or_insert(r.oid);
        r
    }

    pub fn resolve(&self, oid: u64) -> Option<ObjId> {
        self.objects.get(&oid).map(|(h, _)| *h)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Exported instances (singletons excluded) per source class.
    pub fn instances_by_class(&self) -> IndexMap<String, usize> {
        let singles: Vec<u64> = self.singletons.values().copied().collect();
        let mut out = IndexMap::new();
        for (oid, (_, class)) in &self.objects {
            if !singles.contains(oid) {
                *out.entry(class.clone()).or_insert(0) += 1;
            }
        }
        out
    }

    pub fn singleton_classes(&self) -> Vec<String> {
        self.singletons.keys().cloned().collect()
    }
}
