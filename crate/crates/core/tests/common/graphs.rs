//! Random class graphs rendered as MiniOO, with a brute-force exclusion oracle.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use proptest::prelude::*;
use proptest::sample::Index;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefKind {
    Field,
    Param,
    Local,
    New,
    StaticRead,
}

#[derive(Debug, Clone)]
pub struct GClass {
    pub builtin: bool,
    pub native: bool,
    pub superclass: Option<usize>,
    pub refs: Vec<(usize, RefKind)>,
}

/// Classes `C0..Cn-1` plus a reference-free `Main`.
#[derive(Debug, Clone)]
pub struct Graph {
    pub classes: Vec<GClass>,
}

fn name(i: usize) -> String {
    format!("C{i}")
}

impl Graph {
    /// Every class name including `Main`.
    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = (0..self.classes.len()).map(name).collect();
        v.push("Main".into());
        v
    }

    pub fn source(&self) -> String {
        let mut s = String::new();
        for (i, c) in self.classes.iter().enumerate() {
            if c.builtin {
                write!(s, "builtin class {} {{ public static int s; ", name(i)).unwrap();
                for (k, (t, _)) in c.refs.iter().enumerate() {
                    write!(s, "public void g{i}_{k}({} x); ", name(*t)).unwrap();
                }
                s.push_str("}\n");
                continue;
            }
            write!(s, "class {}", name(i)).unwrap();
            if let Some(sup) = c.superclass {
                write!(s, " extends {}", name(sup)).unwrap();
            }
            s.push_str(" { static int s; ");
            let mut body = String::new();
            for (k, (t, kind)) in c.refs.iter().enumerate() {
                let tn = name(*t);
                let target_builtin = self.classes[*t].builtin;
                match kind {
                    RefKind::Field => write!(s, "{tn} f{i}_{k}; ").unwrap(),
                    RefKind::Param => write!(s, "public void g{i}_{k}({tn} x) {{ }} ").unwrap(),
                    RefKind::New if !target_builtin => write!(body, "{tn} n{k} = new {tn}(); ").unwrap(),
                    RefKind::StaticRead => write!(body, "int r{k} = {tn}.s; ").unwrap(),
                    RefKind::Local | RefKind::New => write!(body, "{tn} l{k} = null; ").unwrap(),
                }
            }
            write!(s, "public void body() {{ {body}}} ").unwrap();
            if c.native {
                write!(s, "public native int h{i}(); ").unwrap();
            }
            s.push_str("}\n");
        }
        s.push_str("class Main { public static void main() { } }\n");
        s
    }

    fn seeds(&self) -> u32 {
        self.classes.iter().enumerate().filter(|(_, c)| c.builtin || c.native).fold(0, |m, (i, _)| m | 1 << i)
    }

    /// Whether `set` contains the seeds and is closed under the superclass
    /// and referenced-by rules.
    pub fn closed(&self, set: u32) -> bool {
        if set & self.seeds() != self.seeds() {
            return false;
        }
        self.classes.iter().enumerate().filter(|(i, _)| set & 1 << i != 0).all(|(_, c)| {
            c.superclass.is_none_or(|s| set & 1 << s != 0) && c.refs.iter().all(|(t, _)| set & 1 << t != 0)
        })
    }

    /// Least excluded set by enumerating every subset: the intersection of
    /// all closed sets. `Main` is never a candidate since nothing names it.
    pub fn brute_force_excluded(&self) -> BTreeSet<String> {
        let n = self.classes.len();
        let mut meet = (1u32 << n) - 1;
        for set in 0..(1u32 << n) {
            if self.closed(set) {
                meet &= set;
            }
        }
        (0..n).filter(|i| meet & 1 << i != 0).map(name).collect()
    }

    pub fn mask(&self, names: &BTreeSet<String>) -> u32 {
        (0..self.classes.len()).filter(|i| names.contains(&name(*i))).fold(0, |m, i| m | 1 << i)
    }
}

/// Graphs of at most 12 classes counting `Main`.
pub fn graph() -> impl Strategy<Value = Graph> {
    (1usize..=11).prop_flat_map(|n| {
        let refs = prop::collection::vec(
            (any::<Index>(), prop::sample::select(vec![RefKind::Field, RefKind::Param, RefKind::Local, RefKind::New, RefKind::StaticRead])),
            0..3,
        );
        (
            prop::collection::vec(0u8..100, n),
            prop::collection::vec(0u8..100, n),
            prop::collection::vec(any::<Option<Index>>(), n),
            prop::collection::vec(refs, n),
        )
            .prop_map(move |(kind, native, sup, refs)| {
                let builtin: Vec<bool> = kind.iter().map(|k| *k < 10).collect();
                let classes = (0..n)
                    .map(|i| {
                        let superclass = if builtin[i] || i == 0 {
                            None
                        } else {
                            sup[i].map(|ix| ix.index(i)).filter(|s| !builtin[*s])
                        };
                        let mut seen = BTreeSet::new();
                        let refs = refs[i]
                            .iter()
                            .map(|(ix, k)| (ix.index(n), *k))
                            .filter(|(t, _)| *t != i && seen.insert(*t))
                            .collect();
                        GClass { builtin: builtin[i], native: !builtin[i] && native[i] < 15, superclass, refs }
                    })
                    .collect();
                Graph { classes }
            })
    })
}
