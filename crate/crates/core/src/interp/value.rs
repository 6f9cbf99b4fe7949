use std::fmt;

use serde::{Deserialize, Serialize};

use crate::minioo::typed::Type;

/// Index into a machine's heap.
pub type ObjId = usize;

/// An object exported by another node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteRef {
    pub node: String,
    pub oid: u64,
    /// Source class name, e.g. `X` for an `X_O_Local` instance.
    pub class: String,
}

impl fmt::Display for RemoteRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}#{}", self.class, self.node, self.oid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i32),
    Long(i64),
    Bool(bool),
    Str(String),
    Null,
    Obj(ObjId),
    /// Only ever stored in a proxy's handle field.
    Remote(RemoteRef),
}

impl Value {
    pub fn default_for(t: &Type) -> Value {
        match t {
            Type::Int => Value::Int(0),
            Type::Long => Value::Long(0),
            Type::Bool => Value::Bool(false),
            Type::Str => Value::Str(String::new()),
            _ => Value::Null,
        }
    }

    pub fn as_int(&self) -> Option<i32> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_long(&self) -> Option<i64> {
        match self {
            Value::Long(v) => Some(*v),
            Value::Int(v) => Some(*v as i64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }
}

/// The printed form used by `print` and string concatenation.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Long(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => f.write_str(s),
            Value::Null => f.write_str("null"),
            Value::Obj(id) => write!(f, "<object {id}>"),
            Value::Remote(r) => write!(f, "<remote {r}>"),
        }
    }
}
