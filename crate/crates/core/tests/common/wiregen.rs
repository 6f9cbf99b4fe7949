use moo_core::distrib::{InvocationMessage, TaggedValue};
use moo_core::interp::RemoteRef;
use proptest::prelude::*;

fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z_$][A-Za-z0-9_$]{0,12}"
}

fn remote_ref() -> impl Strategy<Value = RemoteRef> {
    (ident(), any::<u64>(), ident()).prop_map(|(node, oid, class)| RemoteRef { node, oid, class })
}

pub fn tagged() -> impl Strategy<Value = TaggedValue> {
    prop_oneof![
        any::<i32>().prop_map(TaggedValue::Int),
        any::<i64>().prop_map(TaggedValue::Long),
        any::<bool>().prop_map(TaggedValue::Bool),
        any::<String>().prop_map(TaggedValue::Str),
        Just(TaggedValue::Null),
        remote_ref().prop_map(TaggedValue::Ref),
    ]
}

/// Messages satisfying the per-kind field rules.
pub fn message() -> impl Strategy<Value = InvocationMessage> {
    let args = prop::collection::vec(tagged(), 0..5);
    prop_oneof![
        (any::<u64>(), ident(), ident(), remote_ref(), args)
            .prop_map(|(id, c, m, t, a)| InvocationMessage::invoke(id, &c, &m, t, a)),
        (any::<u64>(), ident()).prop_map(|(id, c)| InvocationMessage::make(id, &c)),
        (any::<u64>(), ident()).prop_map(|(id, c)| InvocationMessage::discover(id, &c)),
        (any::<u64>(), prop::option::of(tagged())).prop_map(|(id, r)| InvocationMessage::reply(id, r)),
        (any::<u64>(), any::<String>()).prop_map(|(id, e)| InvocationMessage::err(id, e)),
    ]
}
