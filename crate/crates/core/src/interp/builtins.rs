//! Native behaviour for builtin classes and native methods.
//!
//! Entries are keyed `Class.member`; constructors use `Class.<init>`.
//! Natives of user classes fall back to `*.member`.

use std::collections::HashMap;

use super::value::Value;

pub struct NativeCall<'a> {
    /// Per-object native state; `None` for static members and user-class natives.
    pub state: Option<&'a mut Value>,
    pub args: &'a [Value],
}

/// Returns the result, or for constructors the initial native state.
pub type NativeFn = fn(&mut NativeCall<'_>) -> Result<Value, String>;

pub const CTOR: &str = "<init>";

#[derive(Clone, Default)]
pub struct BuiltinTable {
    natives: HashMap<String, NativeFn>,
    static_fields: HashMap<String, Value>,
}

impl std::fmt::Debug for BuiltinTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut keys: Vec<&String> = self.natives.keys().chain(self.static_fields.keys()).collect();
        keys.sort();
        f.debug_struct("BuiltinTable").field("entries", &keys).finish()
    }
}

fn state<'a>(c: &'a mut NativeCall<'_>) -> Result<&'a mut Value, String> {
    c.state.as_deref_mut().ok_or_else(|| "native state missing".to_string())
}

fn int_arg(c: &NativeCall<'_>, i: usize) -> Result<i32, String> {
    c.args.get(i).and_then(Value::as_int).ok_or_else(|| format!("argument {i} must be int"))
}

fn long_arg(c: &NativeCall<'_>, i: usize) -> Result<i64, String> {
    c.args.get(i).and_then(Value::as_long).ok_or_else(|| format!("argument {i} must be long"))
}

fn str_arg(c: &NativeCall<'_>, i: usize) -> Result<String, String> {
    c.args.get(i).and_then(|v| v.as_str().map(str::to_owned)).ok_or_else(|| format!("argument {i} must be string"))
}

impl BuiltinTable {
    pub fn empty() -> Self {
        BuiltinTable::default()
    }

    /// `Math`, `Counter`, `Text`, `Runtime` and the `*.hash` native.
    pub fn standard() -> Self {
        let mut t = BuiltinTable::empty();
        t.register("Math.abs", |c| Ok(Value::Int(int_arg(c, 0)?.wrapping_abs())));
        t.register("Math.labs", |c| Ok(Value::Long(long_arg(c, 0)?.wrapping_abs())));
        t.register("Math.max", |c| Ok(Value::Int(int_arg(c, 0)?.max(int_arg(c, 1)?))));
        t.register("Math.min", |c| Ok(Value::Int(int_arg(c, 0)?.min(int_arg(c, 1)?))));
        t.static_field("Math.MAX_INT", Value::Int(i32::MAX));
        t.static_field("Math.MIN_INT", Value::Int(i32::MIN));

        t.register("Counter.<init>", |c| match c.args {
            [] => Ok(Value::Int(0)),
            [Value::Int(n)] => Ok(Value::Int(*n)),
            _ => Err("Counter takes () or (int)".into()),
        });
        t.register("Counter.inc", |c| {
            let s = state(c)?;
            *s = Value::Int(s.as_int().unwrap_or(0).wrapping_add(1));
            Ok(Value::Null)
        });
        t.register("Counter.add", |c| {
            let n = int_arg(c, 0)?;
            let s = state(c)?;
            *s = Value::Int(s.as_int().unwrap_or(0).wrapping_add(n));
            Ok(Value::Null)
        });
        t.register("Counter.get", |c| Ok(state(c)?.clone()));

        t.register("Text.<init>", |c| match c.args {
            [] => Ok(Value::Str(String::new())),
            [Value::Str(s)] => Ok(Value::Str(s.clone())),
            _ => Err("Text takes () or (string)".into()),
        });
        t.register("Text.append", |c| {
            let add = str_arg(c, 0)?;
            if let Value::Str(s) = state(c)? {
                s.push_str(&add);
            }
            Ok(Value::Null)
        });
        t.register("Text.value", |c| Ok(state(c)?.clone()));
        t.register("Text.length", |c| {
            let n = state(c)?.as_str().map(|s| s.chars().count()).unwrap_or(0);
            Ok(Value::Int(n as i32))
        });

        // Handled by the machine, which forwards it to the runtime hooks.
        t.register("Runtime.checkpoint", |_| Ok(Value::Null));

        t.register("*.hash", |c| {
            let mut h: i32 = 17;
            for a in c.args {
                let v = match a {
                    Value::Int(v) => *v,
                    Value::Long(v) => (*v as i32) ^ ((*v >> 32) as i32),
                    Value::Bool(b) => *b as i32,
                    Value::Str(s) => s.bytes().fold(0i32, |acc, b| acc.wrapping_mul(31).wrapping_add(b as i32)),
                    _ => 0,
                };
                h = h.wrapping_mul(31).wrapping_add(v);
            }
            Ok(Value::Int(h))
        });
        t
    }

    pub fn register(&mut self, key: &str, f: NativeFn) {
        self.natives.insert(key.to_string(), f);
    }

    pub fn static_field(&mut self, key: &str, v: Value) {
        self.static_fields.insert(key.to_string(), v);
    }

    /// `Class.member`, falling back to `*.member` unless `exact`.
    pub fn lookup(&self, class: &str, member: &str, exact: bool) -> Option<NativeFn> {
        self.natives
            .get(&format!("{class}.{member}"))
            .or_else(|| (!exact).then(|| self.natives.get(&format!("*.{member}"))).flatten())
            .copied()
    }

    pub fn static_value(&self, class: &str, field: &str) -> Option<&Value> {
        self.static_fields.get(&format!("{class}.{field}"))
    }
}
